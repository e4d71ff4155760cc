#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include "ccgeom/flows.hpp"
#include "ccgeom/geometry.hpp"

namespace ccgeom {

class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column basis of the scaled system at (x, delta): n0 is the numerical rank,
// J maximizes the sup-norm of the n0-minor vector over column subsets, ties
// broken by lexicographically smallest J.
struct BasisSelection {
  int n0 = 0;
  std::vector<int> J;
  double linf_minor = 0.0;
};

BasisSelection select_basis(const GradedSystem& sys, const Eigen::VectorXd& x,
                            const MultiRadius& delta, double rank_rel_tol = 1e-9);

struct ChartConfig {
  // 0 = adaptive: start at eta_start and halve until the diagnostics hold.
  // > 0 = fixed radius; diagnostic failure is an error instead.
  double eta_request = 0.0;
  double eta_start = 1.0;
  int max_halvings = 10;
  int validation_samples = 48;
  uint64_t seed = 0x9a737e5cull;
  IntegratorConfig ode;
  double pushforward_rel_tol = 1e-6;
  double pushforward_abs_tol = 1e-9;
  double rank_rel_tol = 1e-9;
};

struct ChartDiagnostics {
  double det_ratio_min = 1.0;
  double det_ratio_max = 1.0;
  double pushforward_max_rel = 0.0;
  int injectivity_collisions = 0;
  int samples = 0;
  bool domain_exit = false;
};

struct InvertResult {
  bool converged = false;   // landed on the chart: in-plane residual small, |u| < eta
  Eigen::VectorXd u;
  double in_plane_residual = 0.0;  // component of y - Phi(u) along the leaf
  double off_leaf_residual = 0.0;  // component orthogonal to the column span
  double u_norm = 0.0;
  int iterations = 0;
};

// The Frobenius scaling chart Phi(u) = e^{u . (delta^d X)_J} x at (x, delta).
// Construction validates the chart radius empirically (determinant-ratio
// window, pushforward identity, injectivity sampling); built charts are
// immutable and safe for concurrent evaluation.
class Chart {
 public:
  Chart(const GradedSystem& sys, Eigen::VectorXd x0, MultiRadius delta,
        BasisSelection basis, double eta, ChartConfig cfg);

  const GradedSystem& system() const { return scaled_.system(); }
  const ScaledSystem& scaled() const { return scaled_; }
  const Eigen::VectorXd& center() const { return x0_; }
  const MultiRadius& radius() const { return delta_; }
  const BasisSelection& basis() const { return basis_; }
  int n0() const { return basis_.n0; }
  double eta() const { return eta_; }
  double kappa() const { return 0.5; }  // the fixed contraction bound
  double det_ref() const { return det_ref_; }      // |det dPhi(0)| as minor l2
  double column_scale() const { return col_scale_; }  // largest scaled basis column at x0
  const ChartDiagnostics& diagnostics() const { return diag_; }
  const ChartConfig& config() const { return cfg_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& u) const;
  FlowWithJacobian forward_with_jacobian(const Eigen::VectorXd& u) const;

  // [Y_1 | ... | Y_q](u) = pinv(dPhi(u)) . (delta^d X)(Phi(u)), n0 x q.
  Eigen::MatrixXd pullback_frame(const Eigen::VectorXd& u) const;
  // A(u) with (Y_{J_1},...,Y_{J_{n0}}) = (I + A) grad_u, from the frame.
  Eigen::MatrixXd a_matrix(const Eigen::VectorXd& u) const;

  InvertResult invert(const Eigen::VectorXd& y, double newton_tol = 1e-9,
                      int max_newton = 60) const;

  ChartDiagnostics verify(int sample_count, uint64_t seed) const;
  void set_diagnostics(ChartDiagnostics d) { diag_ = std::move(d); }

  nlohmann::json diagnostics_json() const;

  // scratch access for modules building on the chart
  const FieldCombo& basis_combo() const { return combo_; }

 private:
  ScaledSystem scaled_;
  FieldCombo combo_;  // basis columns
  Eigen::VectorXd x0_;
  MultiRadius delta_;
  BasisSelection basis_;
  double eta_;
  double det_ref_;
  double col_scale_;
  ChartConfig cfg_;
  ChartDiagnostics diag_;
};

using ChartPtr = std::shared_ptr<const Chart>;

// Builds the chart, choosing eta adaptively unless cfg.eta_request > 0.
// Throws ChartError on rank collapse ("chart radius too large"), all-zero
// columns, or domain exit in fixed-radius mode.
ChartPtr build_chart(const GradedSystem& sys, const Eigen::VectorXd& x,
                     const MultiRadius& delta, const ChartConfig& cfg = {});

// Structure coefficients of the scaled basis fields along the chart:
// result[j](i,k) = ctilde_{i,j}^k(u), so C_u = sum_j u_j result[j].
using CtildeEvaluator =
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd& u)>;

// Default evaluator: minimum-norm least squares of the scaled basis bracket
// over the scaled basis columns at Phi(u); uses declared structure
// coefficients via the same projection when the system carries them.
CtildeEvaluator default_ctilde(const ChartPtr& chart);

struct OdeGridSpec {
  int directions = 16;  // quasi-uniform sphere sample
  int radii = 64;       // uniform radial nodes (plus the r = 0 node)
};

struct StructureOdeSolution {
  std::vector<Eigen::VectorXd> directions;
  Eigen::VectorXd radii;  // radii[0] = 0
  // a[d][r] = A at node radii[r] * directions[d]
  std::vector<std::vector<Eigen::MatrixXd>> a;
  double eta_ode = 0.0;       // radius satisfying the contraction smallness
  double measured_d = 0.0;    // sup ||C_u(r w)|| / r over the grid
  double kappa = 0.5;
  int iterations = 0;
  double final_residual = 0.0;          // sup ||TA - A|| after convergence
  std::vector<double> update_norms;     // sup ||A_{k+1} - A_k|| per iteration
  std::vector<double> update_ratios;    // rho-metric contraction ratios
  double sup_a = 0.0;                   // sup ||A|| over nodes
  double fitted_slope = 0.0;            // sup ||A(rw)|| / r
};

// Picard iteration for d_r(r A) = -A^2 - C_u A - C_u with A(0) = 0.
// Throws ChartError on detected non-contraction ("eta too large") or when
// max_iter is exhausted.
StructureOdeSolution solve_structure_ode(const ChartPtr& chart,
                                         const CtildeEvaluator& ctilde,
                                         const OdeGridSpec& grid = {},
                                         double tol = 1e-10, int max_iter = 60);

// sup over the solution grid of ||A_ode - A_frame|| where A_frame comes from
// the pinv pullback frame.
double ode_frame_discrepancy(const ChartPtr& chart, const StructureOdeSolution& sol);

// C^2 radial bump: 1 on |u| <= rho * eta, 0 outside the chart.
class BumpFunction {
 public:
  BumpFunction(ChartPtr chart, double rho);
  double operator()(const Eigen::VectorXd& y) const;
  double profile(double unorm) const;
  const ChartPtr& chart() const { return chart_; }
  double rho() const { return rho_; }

 private:
  ChartPtr chart_;
  double rho_;
};

// sup over a chart grid of |(delta^{d_j} X_j) phi| per field (reported, not
// asserted; the derivative is taken by central differences along the flow).
Eigen::VectorXd bump_derivative_sup(const BumpFunction& bump, int grid_samples,
                                    uint64_t seed);

// Deterministic quasi-uniform sphere sample (exact antipodal pair for n0 = 1,
// uniform angles for n0 = 2, Fibonacci sphere for n0 = 3).
std::vector<Eigen::VectorXd> quasi_uniform_directions(int n0, int count);

// Surface measure of S^{n-1} and volume of the unit ball in R^n.
double sphere_surface(int n);
double unit_ball_volume(int n);

// Keyed chart cache; operators and ball searches rebuild identical charts
// constantly.
class ChartCache {
 public:
  ChartPtr get(const GradedSystem& sys, const Eigen::VectorXd& x,
               const MultiRadius& delta, const ChartConfig& cfg = {});
  void clear();

 private:
  std::mutex mu_;
  std::map<std::string, ChartPtr> map_;
};

}  // namespace ccgeom
