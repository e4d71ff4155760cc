#include "ccgeom/flows.hpp"

#include <cmath>

namespace ccgeom {

FieldCombo::FieldCombo(const ScaledSystem& ss, std::vector<int> J)
    : ss_(&ss), J_(std::move(J)) {
  if (J_.empty()) {
    J_.resize(ss.system().q());
    for (size_t j = 0; j < J_.size(); ++j) J_[j] = static_cast<int>(j);
  }
}

int FieldCombo::n() const { return ss_->system().n(); }

Eigen::VectorXd FieldCombo::combo_at(const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& y) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n());
  for (int i = 0; i < width(); ++i) {
    if (u[i] == 0.0 || ss_->scale(J_[i]) == 0.0) continue;
    v += u[i] * ss_->column_at(J_[i], y);
  }
  return v;
}

Eigen::MatrixXd FieldCombo::combo_jacobian_at(const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& y) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n(), n());
  for (int i = 0; i < width(); ++i) {
    if (u[i] == 0.0 || ss_->scale(J_[i]) == 0.0) continue;
    J += u[i] * ss_->column_jacobian_at(J_[i], y);
  }
  return J;
}

Eigen::MatrixXd FieldCombo::columns_at(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd M(n(), width());
  for (int i = 0; i < width(); ++i) M.col(i) = ss_->column_at(J_[i], y);
  return M;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

}  // namespace

FlowResult integrate_ode(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& rhs,
    const Eigen::VectorXd& y0, const IntegratorConfig& cfg,
    const std::function<bool(const Eigen::VectorXd&)>& inside) {
  FlowResult res;
  res.endpoint = y0;
  if (inside && !inside(y0)) {
    res.left_domain = true;
    res.time_reached = 0.0;
    return res;
  }

  if (cfg.method == IntegratorConfig::Method::RK4Fixed) {
    int steps = std::max(1, static_cast<int>(std::ceil(1.0 / cfg.fixed_step)));
    double h = 1.0 / steps;
    Eigen::VectorXd y = y0;
    for (int s = 0; s < steps; ++s) {
      double t = s * h;
      Eigen::VectorXd k1 = rhs(t, y);
      Eigen::VectorXd k2 = rhs(t + h / 2, y + (h / 2) * k1);
      Eigen::VectorXd k3 = rhs(t + h / 2, y + (h / 2) * k2);
      Eigen::VectorXd k4 = rhs(t + h, y + h * k3);
      y += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
      ++res.accepted_steps;
      if (inside && !inside(y)) {
        res.left_domain = true;
        res.time_reached = (s + 1) * h;
        res.endpoint = y;
        return res;
      }
    }
    res.endpoint = y;
    res.time_reached = 1.0;
    return res;
  }

  // adaptive Dormand-Prince
  double t = 0.0;
  double h = 0.1;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1 = rhs(t, y);
  int attempts = 0;
  while (t < 1.0) {
    if (++attempts > cfg.max_steps) {
      res.step_exhausted = true;
      res.endpoint = y;
      res.time_reached = t;
      return res;
    }
    if (h > 1.0 - t) h = 1.0 - t;
    Eigen::VectorXd k2 = rhs(t + h / 5, y + h * (A21 * k1));
    Eigen::VectorXd k3 = rhs(t + 3 * h / 10, y + h * (A31 * k1 + A32 * k2));
    Eigen::VectorXd k4 = rhs(t + 4 * h / 5, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    Eigen::VectorXd k5 =
        rhs(t + 8 * h / 9, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    Eigen::VectorXd k6 =
        rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    Eigen::VectorXd ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    Eigen::VectorXd k7 = rhs(t + h, ynew);
    Eigen::VectorXd errv =
        h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double e = errv[i] / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0 || h <= 1e-14) {
      t += h;
      y = ynew;
      k1 = k7;  // FSAL
      ++res.accepted_steps;
      res.error_estimate += errv.norm();
      if (inside && !inside(y)) {
        res.left_domain = true;
        res.endpoint = y;
        res.time_reached = t;
        return res;
      }
    }
    double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, fac));
    if (h < 1e-14) h = 1e-14;
  }
  res.endpoint = y;
  res.time_reached = 1.0;
  return res;
}

FlowResult exp_map(const FieldCombo& fields, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& x0, const IntegratorConfig& cfg) {
  const Box& box = fields.scaled().system().domain();
  auto rhs = [&](double, const Eigen::VectorXd& y) { return fields.combo_at(u, y); };
  auto inside = [&](const Eigen::VectorXd& y) { return box.contains(y); };
  return integrate_ode(rhs, x0, cfg, inside);
}

FlowWithJacobian exp_map_with_jacobian(const FieldCombo& fields, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& x0,
                                       const IntegratorConfig& cfg) {
  int n = fields.n();
  int w = fields.width();
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + n * w);
  z0.head(n) = x0;

  auto rhs = [&](double, const Eigen::VectorXd& z) {
    Eigen::VectorXd y = z.head(n);
    Eigen::Map<const Eigen::MatrixXd> M(z.data() + n, n, w);
    Eigen::MatrixXd A = fields.combo_jacobian_at(u, y);
    Eigen::MatrixXd B = fields.columns_at(y);
    Eigen::VectorXd dz(n + n * w);
    dz.head(n) = fields.combo_at(u, y);
    Eigen::Map<Eigen::MatrixXd>(dz.data() + n, n, w) = A * M + B;
    return dz;
  };
  const Box& box = fields.scaled().system().domain();
  auto inside = [&](const Eigen::VectorXd& z) { return box.contains(z.head(n)); };

  FlowResult raw = integrate_ode(rhs, z0, cfg, inside);
  FlowWithJacobian out;
  out.flow = raw;
  out.flow.endpoint = raw.endpoint.head(n);
  out.jacobian = Eigen::Map<const Eigen::MatrixXd>(raw.endpoint.data() + n, n, w);
  return out;
}

Eigen::MatrixXd flow_jacobian_fd(const FieldCombo& fields, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                                 double h) {
  int n = fields.n();
  int w = fields.width();
  Eigen::MatrixXd J(n, w);
  for (int i = 0; i < w; ++i) {
    Eigen::VectorXd up = u, um = u;
    up[i] += h;
    um[i] -= h;
    Eigen::VectorXd fp = exp_map(fields, up, x0, cfg).endpoint;
    Eigen::VectorXd fm = exp_map(fields, um, x0, cfg).endpoint;
    J.col(i) = (fp - fm) / (2 * h);
  }
  return J;
}

FlowResult composed_exp(const std::vector<FieldCombo>& families,
                        const std::vector<Eigen::VectorXd>& u_blocks,
                        const Eigen::VectorXd& x0, const IntegratorConfig& cfg) {
  FlowResult res;
  res.endpoint = x0;
  // rightmost family applied first, per the composition
  // e^{u_1 . Z^1} ... e^{u_nu . Z^nu} x0
  for (int m = static_cast<int>(families.size()) - 1; m >= 0; --m) {
    FlowResult leg = exp_map(families[m], u_blocks[m], res.endpoint, cfg);
    res.accepted_steps += leg.accepted_steps;
    res.error_estimate += leg.error_estimate;
    res.endpoint = leg.endpoint;
    if (!leg.ok()) {
      res.left_domain = leg.left_domain;
      res.step_exhausted = leg.step_exhausted;
      res.time_reached = leg.time_reached;
      return res;
    }
  }
  return res;
}

}  // namespace ccgeom
