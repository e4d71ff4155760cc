#include "ccgeom/control.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ccgeom/balls.hpp"
#include "ccgeom/rng.hpp"

namespace ccgeom {

namespace {

struct FrozenBasis {
  std::vector<int> J;
  std::vector<int> I0;
  int n0 = 0;
};

// coefficients of the scaled extra column over the scaled basis at y, using
// the rows I0 picked at the center (Cramer through an LU solve)
Eigen::VectorXd coeffs_at(const ScaledSystem& ss, const GradedVectorField& extra,
                          double extra_scale, const FrozenBasis& fb,
                          const Eigen::VectorXd& y) {
  Eigen::MatrixXd M(fb.n0, fb.n0);
  Eigen::VectorXd b(fb.n0);
  const GradedSystem& sys = ss.system();
  Eigen::MatrixXd X = sys.fields_at(y);
  std::map<std::string, double> pt;
  for (int i = 0; i < sys.n(); ++i) pt[sys.coords()[i]] = y[i];
  for (int a = 0; a < fb.n0; ++a) {
    for (int c = 0; c < fb.n0; ++c)
      M(a, c) = ss.scale(fb.J[c]) * X(fb.I0[a], fb.J[c]);
    b[a] = extra_scale * evaluate(extra.coefficients[fb.I0[a]], pt);
  }
  return M.partialPivLu().solve(b);
}

}  // namespace

CramerCoefficients cramer_coefficients(const GradedSystem& sys,
                                       const GradedVectorField& extra,
                                       const Eigen::VectorXd& x,
                                       const MultiRadius& delta) {
  BasisSelection basis = select_basis(sys, x, delta);
  ScaledSystem ss(sys, delta);
  Eigen::MatrixXd M = ss.matrix_at(x);

  // rows maximizing |det M_{I,J}| at the center
  Eigen::MatrixXd cols(sys.n(), basis.n0);
  for (int c = 0; c < basis.n0; ++c) cols.col(c) = M.col(basis.J[c]);
  MinorVector mv = minor_vector(cols, basis.n0);
  int best_row = 0;
  double best = -1;
  for (size_t a = 0; a < mv.rows.size(); ++a) {
    double v = std::abs(mv.entries(a, 0));
    if (v > best) {
      best = v;
      best_row = static_cast<int>(a);
    }
  }
  double col_scale = 0.0;
  for (int c = 0; c < basis.n0; ++c) col_scale = std::max(col_scale, cols.col(c).norm());
  if (best <= 1e-12 * std::pow(std::max(col_scale, 1e-300), basis.n0))
    throw std::runtime_error("degenerate leading minor in Cramer coefficients");

  FrozenBasis fb{basis.J, mv.rows[best_row], basis.n0};
  double extra_scale = scale_power(extra.degree, delta);
  Eigen::VectorXd cb = coeffs_at(ss, extra, extra_scale, fb, x);

  CramerCoefficients out;
  out.c = Eigen::VectorXd::Zero(sys.q());
  for (int i = 0; i < basis.n0; ++i) out.c[basis.J[i]] = cb[i];
  out.J = basis.J;
  out.I0 = fb.I0;
  out.leading_minor = mv.entries(best_row, 0);
  return out;
}

ControlReport check_control(const GradedSystem& sys, const GradedVectorField& extra,
                            const std::vector<Eigen::VectorXd>& x_grid,
                            const std::vector<MultiRadius>& delta_grid,
                            const ControlConfig& cfg) {
  ControlReport rep;
  rep.order_m = cfg.order_m;
  rep.tau = cfg.tau;
  rep.seed = cfg.seed;

  // per-radius sup over the x grid, in the order given (largest first)
  std::vector<double> sigma(delta_grid.size(), 0.0);
  Rng base(cfg.seed);

  for (size_t di = 0; di < delta_grid.size(); ++di) {
    const MultiRadius& delta = delta_grid[di];
    for (size_t xi = 0; xi < x_grid.size(); ++xi) {
      ControlProbe probe;
      probe.x = x_grid[xi];
      probe.delta = delta.delta;
      try {
        BasisSelection basis = select_basis(sys, probe.x, delta);
        ScaledSystem ss(sys, delta);
        Eigen::MatrixXd M = ss.matrix_at(probe.x);

        Eigen::MatrixXd cols(sys.n(), basis.n0);
        for (int c = 0; c < basis.n0; ++c) cols.col(c) = M.col(basis.J[c]);
        MinorVector mvJ = minor_vector(cols, basis.n0);
        int best_row = 0;
        double best = -1;
        for (size_t a = 0; a < mvJ.rows.size(); ++a)
          if (std::abs(mvJ.entries(a, 0)) > best) {
            best = std::abs(mvJ.entries(a, 0));
            best_row = static_cast<int>(a);
          }
        FrozenBasis fb{basis.J, mvJ.rows[best_row], basis.n0};

        double extra_scale = scale_power(extra.degree, delta);
        std::map<std::string, double> pt;
        for (int i = 0; i < sys.n(); ++i) pt[sys.coords()[i]] = probe.x[i];
        Eigen::VectorXd extra_col(sys.n());
        for (int i = 0; i < sys.n(); ++i)
          extra_col[i] = extra_scale * evaluate(extra.coefficients[i], pt);

        // P1: minor ratio of the augmented matrix and rank growth
        Eigen::MatrixXd Mhat(sys.n(), sys.q() + 1);
        Mhat.leftCols(sys.q()) = M;
        Mhat.col(sys.q()) = extra_col;
        probe.p1_ratio = minor_vector(M, basis.n0).linf() /
                         std::max(minor_vector(Mhat, basis.n0).linf(), 1e-300);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Mhat);
        double rtol = numerical_rank_tol(svd.singularValues());
        int rank_hat = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
          if (svd.singularValues()(i) > rtol) ++rank_hat;
        probe.rank_grew = rank_hat > basis.n0;

        // sup of coefficients over sampled ball points
        MultiRadius tau_delta = delta * cfg.tau;
        ReachableCloud cloud = sample_reachable(
            sys, probe.x, tau_delta, cfg.ball_samples, cfg.segments,
            base.split(di * 1000 + xi).next_u64());
        std::vector<Eigen::VectorXd> pts;
        pts.push_back(probe.x);
        for (int p = 0; p < cloud.points.cols(); ++p) pts.push_back(cloud.points.col(p));

        IntegratorConfig icfg = IntegratorConfig::loose();
        for (const auto& y : pts) {
          Eigen::VectorXd c = coeffs_at(ss, extra, extra_scale, fb, y);
          probe.sup_coeff = std::max(probe.sup_coeff, c.cwiseAbs().maxCoeff());
          if (cfg.order_m >= 1) {
            // first-order directional derivatives along the scaled basis
            for (int b = 0; b < fb.n0; ++b) {
              FieldCombo fc(ss, {fb.J[b]});
              Eigen::VectorXd h = Eigen::VectorXd::Constant(1, cfg.fd_step);
              Eigen::VectorXd yp = exp_map(fc, h, y, icfg).endpoint;
              Eigen::VectorXd ym = exp_map(fc, -h, y, icfg).endpoint;
              Eigen::VectorXd dc =
                  (coeffs_at(ss, extra, extra_scale, fb, yp) -
                   coeffs_at(ss, extra, extra_scale, fb, ym)) /
                  (2 * cfg.fd_step);
              probe.sup_dcoeff = std::max(probe.sup_dcoeff, dc.cwiseAbs().maxCoeff());
            }
          }
        }
        probe.ok = true;
      } catch (const std::exception& e) {
        probe.note = e.what();
      }
      if (probe.ok) {
        sigma[di] = std::max(sigma[di], probe.sup_coeff);
        rep.kappa1_min = std::min(rep.kappa1_min, probe.p1_ratio);
        rep.sup_coeff = std::max(rep.sup_coeff, probe.sup_coeff);
      }
      rep.probes.push_back(std::move(probe));
    }
  }

  int evaluated = 0;
  for (const auto& p : rep.probes)
    if (p.ok) ++evaluated;
  if (evaluated == 0 || sigma.front() == 0.0) {
    rep.verdict = "inconclusive";
    return rep;
  }
  rep.growth = sigma.back() / sigma.front();
  if (rep.growth >= cfg.growth_threshold) {
    rep.verdict = "not-controlled";
  } else if (rep.sup_coeff <= cfg.sup_bound) {
    rep.verdict = "controlled";
    rep.marginal = rep.growth > cfg.decay_threshold;
  } else {
    rep.verdict = "inconclusive";
  }
  return rep;
}

nlohmann::json control_report_to_json(const ControlReport& r) {
  nlohmann::json j;
  j["condition"] = r.condition;
  j["verdict"] = r.verdict;
  j["marginal"] = r.marginal;
  j["sup_coeff"] = r.sup_coeff;
  j["growth"] = r.growth;
  j["kappa1_min"] = r.kappa1_min;
  j["order_m"] = r.order_m;
  j["tau"] = r.tau;
  j["seed"] = r.seed;
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : r.probes) {
    nlohmann::json pj;
    pj["x"] = std::vector<double>(p.x.data(), p.x.data() + p.x.size());
    pj["delta"] = std::vector<double>(p.delta.data(), p.delta.data() + p.delta.size());
    pj["sup_coeff"] = p.sup_coeff;
    pj["sup_dcoeff"] = p.sup_dcoeff;
    pj["p1_ratio"] = p.p1_ratio;
    pj["rank_grew"] = p.rank_grew;
    pj["ok"] = p.ok;
    if (!p.note.empty()) pj["note"] = p.note;
    probes.push_back(pj);
  }
  j["probes"] = probes;
  return j;
}

void write_control_csv(const ControlReport& r, const std::string& path) {
  std::ofstream out(path);
  out << "probe,sup_coeff,sup_dcoeff,p1_ratio,rank_grew,ok\n";
  out.precision(17);
  for (size_t i = 0; i < r.probes.size(); ++i) {
    const auto& p = r.probes[i];
    out << i << ',' << p.sup_coeff << ',' << p.sup_dcoeff << ',' << p.p1_ratio << ','
        << (p.rank_grew ? 1 : 0) << ',' << (p.ok ? 1 : 0) << '\n';
  }
}

}  // namespace ccgeom
