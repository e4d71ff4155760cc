#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ccgeom/geometry.hpp"

namespace ccgeom {

struct IntegratorConfig {
  enum class Method { RK4Fixed, RK45 };
  Method method = Method::RK45;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double fixed_step = 0.01;
  int max_steps = 200000;

  static IntegratorConfig loose() {
    IntegratorConfig c;
    c.abs_tol = c.rel_tol = 1e-8;
    return c;
  }
};

struct FlowResult {
  Eigen::VectorXd endpoint;
  int accepted_steps = 0;
  double error_estimate = 0.0;
  bool left_domain = false;   // soft error: endpoint is the last in-domain state
  bool step_exhausted = false;
  double time_reached = 1.0;
  bool ok() const { return !left_domain && !step_exhausted; }
};

// A linear combination u . Z of scaled fields restricted to column subset J
// (empty J means all columns).
class FieldCombo {
 public:
  FieldCombo(const ScaledSystem& ss, std::vector<int> J = {});

  int n() const;
  int width() const { return static_cast<int>(J_.size()); }
  const std::vector<int>& subset() const { return J_; }
  const ScaledSystem& scaled() const { return *ss_; }

  Eigen::VectorXd combo_at(const Eigen::VectorXd& u, const Eigen::VectorXd& y) const;
  Eigen::MatrixXd combo_jacobian_at(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& y) const;
  Eigen::MatrixXd columns_at(const Eigen::VectorXd& y) const;  // n x width

 private:
  const ScaledSystem* ss_;
  std::vector<int> J_;
};

// e^{u . Z} x0: integrates y' = (u . Z)(y) over [0,1].
FlowResult exp_map(const FieldCombo& fields, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& x0, const IntegratorConfig& cfg);

// Endpoint plus d(endpoint)/du via the variational equation
// M' = (u . dZ)(y) M + Z(y), M(0) = 0, integrated alongside the state.
struct FlowWithJacobian {
  FlowResult flow;
  Eigen::MatrixXd jacobian;  // n x width
};
FlowWithJacobian exp_map_with_jacobian(const FieldCombo& fields, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& x0,
                                       const IntegratorConfig& cfg);

// Central finite-difference fallback for the same Jacobian.
Eigen::MatrixXd flow_jacobian_fd(const FieldCombo& fields, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                                 double h = 1e-5);

// f(e^{u_1 . Z^1} e^{u_2 . Z^2} ... e^{u_nu . Z^nu} x0): block nu is applied
// to x0 first, block 1 last (outermost).
FlowResult composed_exp(const std::vector<FieldCombo>& families,
                        const std::vector<Eigen::VectorXd>& u_blocks,
                        const Eigen::VectorXd& x0, const IntegratorConfig& cfg);

// Generic adaptive integration over t in [0,1] used by the flow maps; exposed
// for piecewise-constant control paths.
FlowResult integrate_ode(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& rhs,
    const Eigen::VectorXd& y0, const IntegratorConfig& cfg,
    const std::function<bool(const Eigen::VectorXd&)>& inside);

}  // namespace ccgeom
