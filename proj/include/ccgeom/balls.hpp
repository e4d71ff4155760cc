#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ccgeom/chart.hpp"

namespace ccgeom {

// Endpoints of admissible piecewise-constant control paths; every point is a
// certified ball member (inner approximation).
struct ReachableCloud {
  Eigen::MatrixXd points;  // n x N
  int discarded = 0;       // paths that left the domain
  int segments = 0;
  double constraint_norm = 1.0;
  uint64_t seed = 0;
};

ReachableCloud sample_reachable(const GradedSystem& sys, const Eigen::VectorXd& x,
                                const MultiRadius& delta, int paths, int segments,
                                uint64_t seed, double constraint_norm = 1.0,
                                const IntegratorConfig& cfg = IntegratorConfig::loose());

enum class Membership { In, Out, Uncertain };

struct MembershipConfig {
  double rho_in = 0.9;
  double newton_tol = 1e-9;
  ChartConfig chart;
  ChartCache* cache = nullptr;
};

struct MembershipReport {
  Membership verdict = Membership::Uncertain;
  InvertResult invert;
  double eta = 0.0;
};

// Tri-valued by design: the containment sandwich has unknown constants, so a
// boolean answer near the boundary would be dishonest. OUT means "outside the
// enlarged chart image" (one-sided guarantee).
MembershipReport ball_membership(const GradedSystem& sys, const Eigen::VectorXd& x,
                                 const MultiRadius& delta, const Eigen::VectorXd& y,
                                 const MembershipConfig& cfg = {});

struct QuadratureSpec {
  enum class Kind { Polar, MonteCarlo };
  Kind kind = Kind::Polar;
  int directions = 64;    // polar: quasi-uniform sphere sample
  int radial_nodes = 16;  // polar: Gauss-Legendre nodes per ray
  int mc_budget = 4096;
  uint64_t seed = 1;
};

struct BallReport {
  Eigen::VectorXd x;
  Eigen::VectorXd delta;
  int n0 = 0;
  std::vector<int> J;
  double eta = 0.0;
  double volume = 0.0;        // Vol(Phi(B_{n0}(eta))), induced leaf measure
  double stderr_est = 0.0;    // Monte Carlo only
  double proxy = 0.0;         // ||minors(delta^d X(x))||_2 * Vol(B_{n0}(eta))
  double proxy_ratio = 0.0;   // volume / proxy
  QuadratureSpec quad;
  std::string method = "chart";
  uint64_t seed = 0;
};

BallReport ball_volume(const GradedSystem& sys, const Eigen::VectorXd& x,
                       const MultiRadius& delta, const QuadratureSpec& quad = {},
                       const ChartConfig& chart_cfg = {}, ChartCache* cache = nullptr);

struct DoublingReport {
  double ratio = 0.0;
  std::string method = "chart";  // "chart" or "cloud" when the chart misses the ball
  int capture_violations = 0;    // reachable endpoints the chart could not invert
  BallReport at_delta;
  BallReport at_double;
};

// volume(2 delta) / volume(delta) with matched quadrature. When sampled
// reachable endpoints at 2 delta escape the chart (the scaling hypotheses
// fail, e.g. the weakly-comparable counterexample), both volumes fall back to
// a reachable-cloud occupancy estimate.
DoublingReport doubling_ratio(const GradedSystem& sys, const Eigen::VectorXd& x,
                              const MultiRadius& delta, const QuadratureSpec& quad = {},
                              uint64_t seed = 7, ChartCache* cache = nullptr);

struct DistanceResult {
  double lo = 0.0;
  double hi = 0.0;
  bool infinite = false;      // off-leaf at every probed scale
  bool exceeds_unit = false;  // not reached within the unit multi-radius
  int probes = 0;
};

// rho_r(x,y) = inf { s : y in B(x, s r) }, bisected through chart membership
// at the B-tilde boundary |u| = min(1, eta). r must have max component 1.
DistanceResult cc_distance(const GradedSystem& sys, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, const MultiRadius& direction,
                           double tol = 1e-3, const MembershipConfig& cfg = {});

struct GeneratorComparisonReport {
  std::vector<double> deltas;
  std::vector<double> eta_prime;  // largest covered fraction radius per delta
  double min_eta_prime = 0.0;
  double coverage_fraction = 0.99;
  double mesh_fraction = 0.15;
  int cloud_size = 0;
  int probe_size = 0;
  uint64_t seed = 0;
};

// Measures the largest eta' (over a descending grid) such that sampled points
// of B_sys(x, eta' delta) are covered by the W-reachable cloud at delta.
GeneratorComparisonReport generator_comparison(const GradedSystem& sys_generated,
                                               const GradedSystem& generators,
                                               const Eigen::VectorXd& x,
                                               const std::vector<double>& deltas,
                                               int samples, uint64_t seed);

// Bracket-closure utility: words in the generators up to length max_order,
// with degrees summed per word; numerically zero or duplicate fields dropped.
GradedSystem bracket_closure(const GradedSystem& generators, int max_order);

// Occupancy-corrected extent product over the active axes; used by the
// doubling fallback.
double cloud_volume_estimate(const Eigen::MatrixXd& points, int bins = 16);

nlohmann::json ball_report_to_json(const BallReport& r);
nlohmann::json doubling_report_to_json(const DoublingReport& r);
nlohmann::json distance_result_to_json(const DistanceResult& r);
nlohmann::json generator_report_to_json(const GeneratorComparisonReport& r);
void write_cloud_csv(const ReachableCloud& cloud, const std::vector<std::string>& coords,
                     const std::string& path);

}  // namespace ccgeom
