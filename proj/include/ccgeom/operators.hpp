#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ccgeom/balls.hpp"
#include "ccgeom/chart.hpp"
#include "ccgeom/rng.hpp"

namespace ccgeom {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

// System restricted to a field subset (shared coordinates, domain, nu).
GradedSystem subsystem(const GradedSystem& sys, const std::vector<int>& fields);

struct AverageConfig {
  QuadratureSpec quad;
  ChartConfig chart;
  ChartCache* cache = nullptr;
};

// Chart-based average of f over Phi(B(eta)) weighted by the leaf density
// ||minors(dPhi)||_2, normalized by the same weights (f == 1 gives exactly 1).
double ball_average(const GradedSystem& sys, const Eigen::VectorXd& x,
                    const MultiRadius& delta, const ScalarFn& f,
                    const AverageConfig& cfg = {});

// y drawn uniformly w.r.t. the induced leaf measure on the chart ball,
// by rejection against the minor density.
Eigen::VectorXd sample_chart_ball_uniform(const Chart& chart, Rng& rng);

struct ComposeResult {
  double mean = 0.0;
  double stderr_est = 0.0;
  int domain_exits = 0;
  bool exit_flag = false;  // more than 1% of samples left the domain
  int budget = 0;
  double cube_radius = 0.0;
  uint64_t seed = 0;
};

// Monte Carlo average of f(e^{u_1 . Z^1} ... e^{u_nu . Z^nu} x) with u-blocks
// uniform in cubes of the given radius (family nu applied to x first).
ComposeResult compose_averages(const GradedSystem& sys,
                               const std::vector<std::vector<int>>& families,
                               const MultiRadius& delta, const Eigen::VectorXd& x,
                               const ScalarFn& f, int budget, uint64_t seed,
                               double cube_radius = 0.4,
                               const IntegratorConfig& cfg = IntegratorConfig::loose());

struct KernelEstimate {
  int bins = 0;
  int n0 = 0;
  double mass = 0.0;              // total histogram mass after normalization
  double diagonal = 0.0;          // kernel density near the diagonal, leaf measure
  double diag_times_vol = 0.0;    // diagonal * Vol(joint chart ball at delta)
  double diag_times_support = 0.0;  // diagonal * leaf volume of the occupied bins
  double support_radius = 0.0;    // max |u|/eta over inverted samples
  double support_fraction = 0.0;  // samples inverted into the enlarged joint chart
  int samples = 0;
  int histogram_chart_n0 = 0;
  uint64_t seed = 0;
  std::vector<double> bin_mass;     // flattened occupancy (row-major over dims)
  std::vector<double> bin_center;   // reserved for CSV output
};

// Histogram of the composition A_{Z^nu, delta} ... A_{Z^1, delta} through
// two-stage uniform ball sampling, recorded in the coordinates of the joint
// chart at the nu-enlarged radius.
KernelEstimate kernel_estimate(const GradedSystem& sys,
                               const std::vector<std::vector<int>>& families,
                               const MultiRadius& delta, const Eigen::VectorXd& x,
                               int bins, int budget, uint64_t seed,
                               ChartCache* cache = nullptr);

struct MaximalResult {
  std::vector<double> values;  // one per grid point
  int skipped = 0;             // per-(x, delta) chart failures
};

MaximalResult maximal_function(const GradedSystem& sys, const ScalarFn& f,
                               const std::vector<Eigen::VectorXd>& x_grid,
                               const std::vector<MultiRadius>& delta_set,
                               const AverageConfig& cfg = {});

struct ProductBoundReport {
  std::vector<double> joint;     // M f per grid point
  std::vector<double> composed;  // M_nu ... M_1 f per grid point
  double fitted_c = 0.0;         // max joint/composed over the grid
  int grid_points = 0;
  int mc_budget = 0;
  uint64_t seed = 0;
};

// Verifies M f(x) <= C * (M_nu ... M_1 f)(x) on the grid; the composed side
// nests Monte Carlo ball averages per family.
ProductBoundReport product_bound_check(const GradedSystem& sys,
                                       const std::vector<std::vector<int>>& families,
                                       const ScalarFn& f,
                                       const std::vector<Eigen::VectorXd>& x_grid,
                                       const std::vector<double>& delta_values,
                                       int mc_budget, uint64_t seed,
                                       ChartCache* cache = nullptr);

struct IntersectionReport {
  double vol_a = 0.0;
  double vol_b = 0.0;
  double vol_joint = 0.0;
  double vol_intersection = 0.0;
  double ratio = 0.0;  // vol_inter * vol_joint / (vol_a * vol_b)
  double fraction = 0.0;
  double fraction_stderr = 0.0;
  int budget = 0;
  uint64_t seed = 0;
};

// Monte Carlo Vol(B_A cap B_B) against the product formula; requires both
// families to span the same leaf through x.
IntersectionReport intersection_volume(const GradedSystem& sys,
                                       const std::vector<int>& family_a,
                                       const std::vector<int>& family_b,
                                       const Eigen::VectorXd& x, const MultiRadius& delta,
                                       int budget, uint64_t seed,
                                       ChartCache* cache = nullptr);

struct MetricCompositionReport {
  double rho_joint = 0.0;
  double composed = 0.0;
  double ratio = 0.0;  // composed / rho_joint
  bool infinite = false;
  int feasible_intermediates = 0;
};

// Estimates [(r_1^{-1} rho_1) o ... o (r_nu^{-1} rho_nu)](x, y) by Newton
// shooting through composed exponentials, against rho_r(x, y).
MetricCompositionReport metric_composition_check(
    const GradedSystem& sys, const std::vector<std::vector<int>>& families,
    const Eigen::VectorXd& x, const Eigen::VectorXd& y, const MultiRadius& r,
    double tol = 1e-3, int starts = 12, uint64_t seed = 99,
    ChartCache* cache = nullptr);

nlohmann::json kernel_to_json(const KernelEstimate& k);
nlohmann::json compose_to_json(const ComposeResult& c);
nlohmann::json intersection_to_json(const IntersectionReport& r);
nlohmann::json metric_to_json(const MetricCompositionReport& r);
nlohmann::json product_bound_to_json(const ProductBoundReport& r);
void write_kernel_csv(const KernelEstimate& k, const std::string& path);

}  // namespace ccgeom
