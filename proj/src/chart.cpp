#include "ccgeom/chart.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ccgeom/rng.hpp"

namespace ccgeom {

namespace {

constexpr double kKappa = 0.5;

double operator_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

}  // namespace

std::vector<Eigen::VectorXd> quasi_uniform_directions(int n0, int count) {
  std::vector<Eigen::VectorXd> dirs;
  if (n0 == 1) {
    dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
    dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return dirs;
  }
  if (n0 == 2) {
    for (int k = 0; k < count; ++k) {
      double a = 2.0 * M_PI * k / count;
      Eigen::VectorXd v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
    return dirs;
  }
  if (n0 == 3) {
    // Fibonacci sphere
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::VectorXd v(3);
      v << r * std::cos(ga * k), r * std::sin(ga * k), z;
      dirs.push_back(v);
    }
    return dirs;
  }
  Rng rng(0x5fe7e5ull);
  for (int k = 0; k < 2 * count; ++k) dirs.push_back(rng.sphere(n0));
  return dirs;
}

double sphere_surface(int n) {
  return 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
}

double unit_ball_volume(int n) { return sphere_surface(n) / n; }


BasisSelection select_basis(const GradedSystem& sys, const Eigen::VectorXd& x,
                            const MultiRadius& delta, double rank_rel_tol) {
  ScaledSystem ss(sys, delta);
  Eigen::MatrixXd M = ss.matrix_at(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) < 1e-300)
    throw ChartError("all scaled columns are numerically zero");
  double tol = numerical_rank_tol(sv, rank_rel_tol);
  int n0 = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++n0;

  MinorVector mv = minor_vector(M, n0);
  BasisSelection sel;
  sel.n0 = n0;
  double best = -1.0;
  for (size_t b = 0; b < mv.cols.size(); ++b) {
    double linf = mv.entries.col(b).cwiseAbs().maxCoeff();
    if (linf > best * (1.0 + 1e-12) + 1e-300) {
      best = linf;
      sel.J = mv.cols[b];
      sel.linf_minor = linf;
    }
  }
  return sel;
}

Chart::Chart(const GradedSystem& sys, Eigen::VectorXd x0, MultiRadius delta,
             BasisSelection basis, double eta, ChartConfig cfg)
    : scaled_(sys, delta),
      combo_(scaled_, basis.J),
      x0_(std::move(x0)),
      delta_(std::move(delta)),
      basis_(std::move(basis)),
      eta_(eta),
      cfg_(std::move(cfg)) {
  Eigen::MatrixXd C = combo_.columns_at(x0_);
  det_ref_ = minor_l2(C, basis_.n0);
  col_scale_ = 0.0;
  for (int i = 0; i < C.cols(); ++i) col_scale_ = std::max(col_scale_, C.col(i).norm());
}

Eigen::VectorXd Chart::forward(const Eigen::VectorXd& u) const {
  return exp_map(combo_, u, x0_, cfg_.ode).endpoint;
}

FlowWithJacobian Chart::forward_with_jacobian(const Eigen::VectorXd& u) const {
  return exp_map_with_jacobian(combo_, u, x0_, cfg_.ode);
}

Eigen::MatrixXd Chart::pullback_frame(const Eigen::VectorXd& u) const {
  FlowWithJacobian fj = forward_with_jacobian(u);
  Eigen::MatrixXd X = scaled_.matrix_at(fj.flow.endpoint);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fj.jacobian);
  return cod.solve(X);
}

Eigen::MatrixXd Chart::a_matrix(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd frame = pullback_frame(u);
  Eigen::MatrixXd F(basis_.n0, basis_.n0);
  for (int i = 0; i < basis_.n0; ++i) F.col(i) = frame.col(basis_.J[i]);
  return F.transpose() - Eigen::MatrixXd::Identity(basis_.n0, basis_.n0);
}

InvertResult Chart::invert(const Eigen::VectorXd& y, double newton_tol,
                           int max_newton) const {
  InvertResult out;
  out.u = Eigen::VectorXd::Zero(basis_.n0);
  const double scale = std::max(col_scale_ * std::max(eta_, 1.0), 1e-300);
  const double tol_len = newton_tol * scale;

  Eigen::VectorXd u = out.u;
  FlowWithJacobian fj = forward_with_jacobian(u);
  for (int it = 0; it < max_newton; ++it) {
    out.iterations = it + 1;
    Eigen::VectorXd r = y - fj.flow.endpoint;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fj.jacobian);
    Eigen::VectorXd du = cod.solve(r);
    double in_plane = (fj.jacobian * du).norm();
    if (in_plane <= tol_len) break;
    double cap = 0.35 * eta_;
    if (du.norm() > cap) du *= cap / du.norm();
    u += du;
    if (u.norm() > 1.5 * eta_) break;  // clearly outside the chart
    fj = forward_with_jacobian(u);
    if (!fj.flow.ok()) break;
  }

  Eigen::VectorXd r = y - fj.flow.endpoint;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fj.jacobian);
  Eigen::VectorXd w = cod.solve(r);
  Eigen::VectorXd parallel = fj.jacobian * w;
  out.u = u;
  out.u_norm = u.norm();
  out.in_plane_residual = parallel.norm();
  out.off_leaf_residual = (r - parallel).norm();
  out.converged = fj.flow.ok() && out.in_plane_residual <= tol_len &&
                  out.off_leaf_residual <= 1e-6 * scale && out.u_norm < eta_;
  return out;
}

ChartDiagnostics Chart::verify(int sample_count, uint64_t seed) const {
  ChartDiagnostics d;
  d.samples = sample_count;
  Rng rng(seed);
  std::vector<Eigen::VectorXd> us, ys;
  us.reserve(sample_count);
  for (int s = 0; s < sample_count; ++s)
    us.push_back(rng.ball(basis_.n0) * (eta_ / 1.05));
  // a few near-boundary probes
  for (int s = 0; s < std::max(4, sample_count / 8); ++s)
    us.push_back(rng.sphere(basis_.n0) * (eta_ / 1.02));

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (const auto& u : us) {
    FlowWithJacobian fj = forward_with_jacobian(u);
    if (!fj.flow.ok()) {
      d.domain_exit = true;
      ys.push_back(fj.flow.endpoint);
      continue;
    }
    ys.push_back(fj.flow.endpoint);
    double ratio = minor_l2(fj.jacobian, basis_.n0) / std::max(det_ref_, 1e-300);
    dmin = std::min(dmin, ratio);
    dmax = std::max(dmax, ratio);

    Eigen::MatrixXd X = scaled_.matrix_at(fj.flow.endpoint);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fj.jacobian);
    Eigen::MatrixXd frame = cod.solve(X);
    Eigen::MatrixXd push = fj.jacobian * frame;  // n x q
    for (int j = 0; j < X.cols(); ++j) {
      double res = (push.col(j) - X.col(j)).norm();
      double rel = res / (cfg_.pushforward_abs_tol / cfg_.pushforward_rel_tol +
                          X.col(j).norm());
      d.pushforward_max_rel = std::max(d.pushforward_max_rel, rel);
    }
  }
  d.det_ratio_min = std::isfinite(dmin) ? dmin : 0.0;
  d.det_ratio_max = dmax;

  const double mesh = 0.05 * eta_;
  const double image_tol = 1e-6 * std::max(col_scale_ * eta_, 1e-300);
  for (size_t i = 0; i < us.size(); ++i)
    for (size_t j = i + 1; j < us.size(); ++j) {
      if ((us[i] - us[j]).norm() > mesh && (ys[i] - ys[j]).norm() < image_tol)
        ++d.injectivity_collisions;
    }
  return d;
}

nlohmann::json Chart::diagnostics_json() const {
  nlohmann::json j;
  j["n0"] = basis_.n0;
  j["J"] = basis_.J;
  j["eta"] = eta_;
  j["kappa"] = kKappa;
  j["det_ref"] = det_ref_;
  j["linf_minor"] = basis_.linf_minor;
  j["det_ratio_min"] = diag_.det_ratio_min;
  j["det_ratio_max"] = diag_.det_ratio_max;
  j["pushforward_max_rel"] = diag_.pushforward_max_rel;
  j["injectivity_collisions"] = diag_.injectivity_collisions;
  j["validation_samples"] = diag_.samples;
  return j;
}

ChartPtr build_chart(const GradedSystem& sys, const Eigen::VectorXd& x,
                     const MultiRadius& delta, const ChartConfig& cfg) {
  BasisSelection basis = select_basis(sys, x, delta, cfg.rank_rel_tol);
  const bool fixed = cfg.eta_request > 0;
  double eta = fixed ? cfg.eta_request : cfg.eta_start;
  const double window_lo = std::pow(1.0 - kKappa, basis.n0) * 0.999;
  const double window_hi = std::pow(1.0 + kKappa, basis.n0) * 1.001;

  std::string last_fail = "unvalidated";
  for (int h = 0; h <= cfg.max_halvings; ++h) {
    auto chart = std::make_shared<Chart>(sys, x, delta, basis, eta, cfg);
    ChartDiagnostics d = chart->verify(cfg.validation_samples, cfg.seed);
    bool ok = true;
    if (d.domain_exit) {
      ok = false;
      last_fail = "domain exit";
    }
    if (d.det_ratio_min < window_lo || d.det_ratio_max > window_hi) {
      ok = false;
      last_fail = "determinant-ratio window violated";
      if (fixed && d.det_ratio_min < std::pow(1.0 - kKappa, basis.n0) / 4.0)
        throw ChartError("chart radius too large: rank collapse along the chart");
    }
    if (d.pushforward_max_rel > cfg.pushforward_rel_tol) {
      ok = false;
      last_fail = "pushforward identity violated";
    }
    if (d.injectivity_collisions > 0) {
      ok = false;
      last_fail = "injectivity collision at mesh resolution";
    }
    if (ok) {
      chart->set_diagnostics(d);
      return chart;
    }
    if (fixed) throw ChartError("chart validation failed: " + last_fail);
    eta *= 0.5;
  }
  throw ChartError("chart radius search exhausted: " + last_fail);
}

CtildeEvaluator default_ctilde(const ChartPtr& chart) {
  return [chart](const Eigen::VectorXd& u) {
    int n0 = chart->n0();
    const auto& J = chart->basis().J;
    const GradedSystem& sys = chart->system();
    const ScaledSystem& ss = chart->scaled();

    Eigen::VectorXd y = chart->forward(u);
    Eigen::MatrixXd M(sys.n(), n0);
    for (int i = 0; i < n0; ++i) M.col(i) = ss.column_at(J[i], y);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);

    std::vector<Eigen::MatrixXd> ct(n0, Eigen::MatrixXd::Zero(n0, n0));
    for (int i = 0; i < n0; ++i)
      for (int j = i + 1; j < n0; ++j) {
        Eigen::VectorXd b =
            ss.scale(J[i]) * ss.scale(J[j]) * sys.bracket_at(J[i], J[j], y);
        Eigen::VectorXd c = cod.solve(b);
        // ct[j](i,k) = ctilde_{i,j}^k, antisymmetric in (i,j)
        for (int k = 0; k < n0; ++k) {
          ct[j](i, k) = c[k];
          ct[i](j, k) = -c[k];
        }
      }
    return ct;
  };
}

StructureOdeSolution solve_structure_ode(const ChartPtr& chart,
                                         const CtildeEvaluator& ctilde,
                                         const OdeGridSpec& grid, double tol,
                                         int max_iter) {
  const int n0 = chart->n0();
  StructureOdeSolution sol;
  sol.kappa = kKappa;
  sol.directions = quasi_uniform_directions(n0, grid.directions);
  const int D = static_cast<int>(sol.directions.size());
  const int R = grid.radii;

  // Shrink eta_ode until the measured smallness condition
  // kappa^2 + D_meas * eta * (kappa + 1) / 2 <= kappa holds.
  double eta = chart->eta();
  std::vector<std::vector<Eigen::MatrixXd>> cu;  // per node C_u
  auto fill_nodes = [&](double eta_try) {
    sol.radii.resize(R + 1);
    for (int m = 0; m <= R; ++m) sol.radii[m] = eta_try * m / R;
    cu.assign(D, std::vector<Eigen::MatrixXd>(R + 1, Eigen::MatrixXd::Zero(n0, n0)));
    double dmax = 0.0;
    for (int d = 0; d < D; ++d)
      for (int m = 1; m <= R; ++m) {
        Eigen::VectorXd u = sol.radii[m] * sol.directions[d];
        auto ct = ctilde(u);
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n0, n0);
        for (int j = 0; j < n0; ++j) C += u[j] * ct[j];
        cu[d][m] = C;
        dmax = std::max(dmax, operator_norm(C) / sol.radii[m]);
      }
    return dmax;
  };

  double dmeas = fill_nodes(eta);
  for (int pass = 0; pass < 40; ++pass) {
    double lhs = kKappa * kKappa + dmeas * eta * (kKappa + 1.0) / 2.0;
    if (lhs <= kKappa || dmeas == 0.0) break;
    double eta_ok = (kKappa - kKappa * kKappa) * 2.0 / ((kKappa + 1.0) * dmeas);
    eta = std::min(0.75 * eta, 0.98 * eta_ok);
    if (eta < 1e-8) throw ChartError("structure ODE: eta too large (no admissible radius)");
    dmeas = fill_nodes(eta);
  }
  sol.eta_ode = eta;
  sol.measured_d = dmeas;

  sol.a.assign(D, std::vector<Eigen::MatrixXd>(R + 1, Eigen::MatrixXd::Zero(n0, n0)));
  auto apply_T = [&](const std::vector<std::vector<Eigen::MatrixXd>>& A) {
    std::vector<std::vector<Eigen::MatrixXd>> out(
        D, std::vector<Eigen::MatrixXd>(R + 1, Eigen::MatrixXd::Zero(n0, n0)));
    for (int d = 0; d < D; ++d) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n0, n0);
      Eigen::MatrixXd prev_g = Eigen::MatrixXd::Zero(n0, n0);  // g(0) = 0
      for (int m = 1; m <= R; ++m) {
        Eigen::MatrixXd g =
            -A[d][m] * A[d][m] - cu[d][m] * A[d][m] - cu[d][m];
        double h = sol.radii[m] - sol.radii[m - 1];
        S += h * 0.5 * (prev_g + g);
        out[d][m] = S / sol.radii[m];
        prev_g = g;
      }
    }
    return out;
  };

  double prev_rho = -1.0;
  int high_ratio_streak = 0;
  bool converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    auto next = apply_T(sol.a);
    double dsup = 0.0, drho = 0.0;
    for (int d = 0; d < D; ++d)
      for (int m = 1; m <= R; ++m) {
        double nn = operator_norm(next[d][m] - sol.a[d][m]);
        dsup = std::max(dsup, nn);
        drho = std::max(drho, nn / sol.radii[m]);
      }
    sol.a = std::move(next);
    sol.update_norms.push_back(dsup);
    if (prev_rho > 0) {
      double ratio = prev_rho > 1e-300 ? drho / prev_rho : 0.0;
      sol.update_ratios.push_back(ratio);
      high_ratio_streak = ratio > 0.95 ? high_ratio_streak + 1 : 0;
      if (high_ratio_streak >= 5)
        throw ChartError("structure ODE: non-contraction detected, eta too large");
    }
    prev_rho = drho;
    sol.iterations = it;
    if (dsup < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ChartError("structure ODE: Picard iteration exceeded max_iter");

  auto residual = apply_T(sol.a);
  for (int d = 0; d < D; ++d)
    for (int m = 0; m <= R; ++m) {
      sol.final_residual =
          std::max(sol.final_residual, operator_norm(residual[d][m] - sol.a[d][m]));
      double an = operator_norm(sol.a[d][m]);
      sol.sup_a = std::max(sol.sup_a, an);
      if (m > 0) sol.fitted_slope = std::max(sol.fitted_slope, an / sol.radii[m]);
    }
  return sol;
}

double ode_frame_discrepancy(const ChartPtr& chart, const StructureOdeSolution& sol) {
  double worst = 0.0;
  for (size_t d = 0; d < sol.directions.size(); ++d)
    for (int m = 1; m < static_cast<int>(sol.radii.size()); m += 4) {
      Eigen::VectorXd u = sol.radii[m] * sol.directions[d];
      Eigen::MatrixXd diff = chart->a_matrix(u) - sol.a[d][m];
      worst = std::max(worst, operator_norm(diff));
    }
  return worst;
}

BumpFunction::BumpFunction(ChartPtr chart, double rho) : chart_(std::move(chart)), rho_(rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("bump inner fraction must lie in (0,1)");
}

double BumpFunction::profile(double unorm) const {
  double inner = rho_ * chart_->eta();
  double outer = chart_->eta();
  if (unorm <= inner) return 1.0;
  if (unorm >= outer) return 0.0;
  double s = (unorm - inner) / (outer - inner);
  // quintic smoothstep keeps the profile C^2 at both junctions
  double step = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  return 1.0 - step;
}

double BumpFunction::operator()(const Eigen::VectorXd& y) const {
  InvertResult inv = chart_->invert(y, 1e-8);
  if (!inv.converged) return 0.0;
  return profile(inv.u_norm);
}

Eigen::VectorXd bump_derivative_sup(const BumpFunction& bump, int grid_samples,
                                    uint64_t seed) {
  const ChartPtr& chart = bump.chart();
  const GradedSystem& sys = chart->system();
  Eigen::VectorXd sup = Eigen::VectorXd::Zero(sys.q());
  Rng rng(seed);
  const double h = 1e-4;
  IntegratorConfig cfg = IntegratorConfig::loose();
  for (int s = 0; s < grid_samples; ++s) {
    Eigen::VectorXd u = rng.ball(chart->n0()) * (chart->eta() * 0.95);
    Eigen::VectorXd y = chart->forward(u);
    for (int j = 0; j < sys.q(); ++j) {
      if (chart->scaled().scale(j) == 0.0) continue;
      FieldCombo fc(chart->scaled(), {j});
      Eigen::VectorXd step = Eigen::VectorXd::Constant(1, h);
      Eigen::VectorXd yp = exp_map(fc, step, y, cfg).endpoint;
      Eigen::VectorXd ym = exp_map(fc, -step, y, cfg).endpoint;
      double der = (bump(yp) - bump(ym)) / (2 * h);
      sup[j] = std::max(sup[j], std::abs(der));
    }
  }
  return sup;
}

ChartPtr ChartCache::get(const GradedSystem& sys, const Eigen::VectorXd& x,
                         const MultiRadius& delta, const ChartConfig& cfg) {
  std::ostringstream key;
  key << sys.digest() << '|' << cfg.eta_request << '|' << cfg.eta_start << '|'
      << cfg.seed;
  key.precision(17);
  for (int i = 0; i < x.size(); ++i) key << '|' << x[i];
  key << '#';
  for (int i = 0; i < delta.delta.size(); ++i) key << '|' << delta.delta[i];
  std::string k = key.str();
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(k);
    if (it != map_.end()) return it->second;
  }
  ChartPtr chart = build_chart(sys, x, delta, cfg);
  std::lock_guard<std::mutex> lock(mu_);
  map_[k] = chart;
  return chart;
}

void ChartCache::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  map_.clear();
}

}  // namespace ccgeom
