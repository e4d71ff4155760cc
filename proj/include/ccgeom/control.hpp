#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ccgeom/chart.hpp"

namespace ccgeom {

// Coefficients expressing the scaled candidate over the scaled basis columns
// via the Cramer row/column selection frozen at the center.
struct CramerCoefficients {
  Eigen::VectorXd c;        // q entries, non-basis indices 0
  std::vector<int> J;       // basis columns
  std::vector<int> I0;      // row subset maximizing |det M_{I,J}| at the center
  double leading_minor = 0.0;
};

CramerCoefficients cramer_coefficients(const GradedSystem& sys,
                                       const GradedVectorField& extra,
                                       const Eigen::VectorXd& x,
                                       const MultiRadius& delta);

struct ControlConfig {
  int ball_samples = 256;
  int segments = 16;
  double tau = 0.5;          // ball-radius fraction where coefficients are probed
  int order_m = 1;
  double fd_step = 1e-4;
  double growth_threshold = 10.0;  // not-controlled when sup grows by this factor
  double decay_threshold = 0.5;    // marginal when sup does not decay below this
  double sup_bound = 1e6;          // inconclusive above this
  uint64_t seed = 0xc0117801ull;
};

struct ControlProbe {
  Eigen::VectorXd x;
  Eigen::VectorXd delta;
  double sup_coeff = 0.0;    // sup over sampled ball points and basis indices
  double sup_dcoeff = 0.0;   // sup of order-m directional derivatives
  double p1_ratio = 1.0;     // |minors(dX)|inf / |minors(dX^)|inf at the center
  bool rank_grew = false;    // candidate increases the numerical rank
  bool ok = false;
  std::string note;
};

struct ControlReport {
  std::string condition = "P3+P1";
  std::vector<ControlProbe> probes;
  std::string verdict = "inconclusive";  // controlled | not-controlled | inconclusive
  bool marginal = false;                 // bounded but not decaying
  double sup_coeff = 0.0;
  double growth = 0.0;       // sup at the smallest radius / sup at the largest
  double kappa1_min = 1.0;
  int order_m = 1;
  double tau = 0.5;
  uint64_t seed = 0;
};

// Evaluates the Cramer coefficients of the scaled candidate over the scaled
// basis at sampled ball points for every (x, delta) probe, aggregates
// sup-norms and the P1 minor ratio, and issues a trend-based verdict.
// delta_grid must be ordered from the largest radius to the smallest.
ControlReport check_control(const GradedSystem& sys, const GradedVectorField& extra,
                            const std::vector<Eigen::VectorXd>& x_grid,
                            const std::vector<MultiRadius>& delta_grid,
                            const ControlConfig& cfg = {});

nlohmann::json control_report_to_json(const ControlReport& r);
void write_control_csv(const ControlReport& r, const std::string& path);

}  // namespace ccgeom
