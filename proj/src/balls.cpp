#include "ccgeom/balls.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ccgeom/parallel.hpp"
#include "ccgeom/rng.hpp"

namespace ccgeom {

namespace {

// 16-point Gauss-Legendre on [-1, 1]
const double kGlx[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
const double kGlw[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

ChartPtr chart_for(const GradedSystem& sys, const Eigen::VectorXd& x,
                   const MultiRadius& delta, const ChartConfig& cfg, ChartCache* cache) {
  if (cache) return cache->get(sys, x, delta, cfg);
  return build_chart(sys, x, delta, cfg);
}

}  // namespace

ReachableCloud sample_reachable(const GradedSystem& sys, const Eigen::VectorXd& x,
                                const MultiRadius& delta, int paths, int segments,
                                uint64_t seed, double constraint_norm,
                                const IntegratorConfig& cfg) {
  ScaledSystem ss(sys, delta);
  FieldCombo combo(ss);
  const int q = sys.q();

  ReachableCloud cloud;
  cloud.segments = segments;
  cloud.constraint_norm = constraint_norm;
  cloud.seed = seed;
  Eigen::MatrixXd pts(sys.n(), paths);
  std::vector<int> ok(paths, 0);

  Rng base(seed);
  parallel_for(paths, [&](int p) {
    Rng rng = base.split(p);
    // Half of the paths keep a single control draw for the whole interval
    // (radially extreme), half re-draw per segment (fills the interior);
    // both are admissible.
    bool straight = rng.uniform() < 0.5;
    Eigen::VectorXd v = rng.ball(q) * constraint_norm;
    Eigen::VectorXd y = x;
    bool alive = true;
    for (int m = 0; m < segments && alive; ++m) {
      if (m > 0 && !straight) v = rng.ball(q) * constraint_norm;
      FlowResult leg = exp_map(combo, v / segments, y, cfg);
      if (!leg.ok()) alive = false;
      y = leg.endpoint;
    }
    pts.col(p) = y;
    ok[p] = alive ? 1 : 0;
  });

  int kept = 0;
  for (int p = 0; p < paths; ++p)
    if (ok[p]) ++kept;
  cloud.points.resize(sys.n(), kept);
  int w = 0;
  for (int p = 0; p < paths; ++p)
    if (ok[p]) cloud.points.col(w++) = pts.col(p);
  cloud.discarded = paths - kept;
  return cloud;
}

MembershipReport ball_membership(const GradedSystem& sys, const Eigen::VectorXd& x,
                                 const MultiRadius& delta, const Eigen::VectorXd& y,
                                 const MembershipConfig& cfg) {
  ChartPtr chart = chart_for(sys, x, delta, cfg.chart, cfg.cache);
  MembershipReport rep;
  rep.eta = chart->eta();
  rep.invert = chart->invert(y, cfg.newton_tol);
  const double scale =
      std::max(chart->column_scale() * std::max(chart->eta(), 1.0), 1e-300);
  if (rep.invert.converged && rep.invert.u_norm < cfg.rho_in * chart->eta()) {
    rep.verdict = Membership::In;
  } else if (rep.invert.off_leaf_residual > 1e-6 * scale ||
             (!rep.invert.converged && rep.invert.u_norm >= chart->eta())) {
    rep.verdict = Membership::Out;
  } else {
    rep.verdict = Membership::Uncertain;
  }
  return rep;
}

BallReport ball_volume(const GradedSystem& sys, const Eigen::VectorXd& x,
                       const MultiRadius& delta, const QuadratureSpec& quad,
                       const ChartConfig& chart_cfg, ChartCache* cache) {
  ChartPtr chart = chart_for(sys, x, delta, chart_cfg, cache);
  const int n0 = chart->n0();
  const double eta = chart->eta();

  BallReport rep;
  rep.x = x;
  rep.delta = delta.delta;
  rep.n0 = n0;
  rep.J = chart->basis().J;
  rep.eta = eta;
  rep.quad = quad;
  rep.seed = quad.seed;

  QuadratureSpec::Kind kind = quad.kind;
  if (kind == QuadratureSpec::Kind::Polar && n0 >= 4)
    kind = QuadratureSpec::Kind::MonteCarlo;  // explicit polar grids stop at 3-D

  if (kind == QuadratureSpec::Kind::Polar) {
    auto dirs = quasi_uniform_directions(n0, quad.directions);
    const double wdir = sphere_surface(n0) / static_cast<double>(dirs.size());
    std::vector<double> partial(dirs.size(), 0.0);
    parallel_for(static_cast<int>(dirs.size()), [&](int d) {
      double acc = 0.0;
      for (int g = 0; g < quad.radial_nodes && g < 16; ++g) {
        double r = 0.5 * eta * (kGlx[g] + 1.0);
        double w = 0.5 * eta * kGlw[g];
        Eigen::VectorXd u = r * dirs[d];
        FlowWithJacobian fj = chart->forward_with_jacobian(u);
        double density = fj.flow.ok() ? minor_l2(fj.jacobian, n0) : 0.0;
        acc += w * density * std::pow(r, n0 - 1);
      }
      partial[d] = acc;
    });
    double vol = 0.0;
    for (double p : partial) vol += p;
    rep.volume = wdir * vol;
    rep.stderr_est = 0.0;
    rep.method = "chart-polar";
  } else {
    Rng base(quad.seed);
    const int N = quad.mc_budget;
    std::vector<double> vals(N, 0.0);
    parallel_for(N, [&](int i) {
      Rng rng = base.split(i);
      Eigen::VectorXd u = rng.ball(n0) * eta;
      FlowWithJacobian fj = chart->forward_with_jacobian(u);
      vals[i] = fj.flow.ok() ? minor_l2(fj.jacobian, n0) : 0.0;
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= N;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= std::max(1, N - 1);
    double ball = unit_ball_volume(n0) * std::pow(eta, n0);
    rep.volume = mean * ball;
    rep.stderr_est = std::sqrt(var / N) * ball;
    rep.method = "chart-mc";
  }

  ScaledSystem ss(sys, delta);
  rep.proxy = minor_l2(ss.matrix_at(x), n0) * unit_ball_volume(n0) * std::pow(eta, n0);
  rep.proxy_ratio = rep.proxy > 0 ? rep.volume / rep.proxy : 0.0;
  return rep;
}

double cloud_volume_estimate(const Eigen::MatrixXd& points, int bins) {
  const int n = static_cast<int>(points.rows());
  const int N = static_cast<int>(points.cols());
  if (N == 0) return 0.0;
  Eigen::VectorXd lo = points.rowwise().minCoeff();
  Eigen::VectorXd hi = points.rowwise().maxCoeff();
  std::vector<int> active;
  double extent_product = 1.0;
  for (int i = 0; i < n; ++i) {
    double e = hi[i] - lo[i];
    if (e > 1e-13 * (1.0 + std::abs(lo[i]) + std::abs(hi[i]))) {
      active.push_back(i);
      extent_product *= e;
    }
  }
  if (active.empty()) return 0.0;
  std::unordered_set<uint64_t> cells;
  for (int p = 0; p < N; ++p) {
    uint64_t id = 0;
    for (int i : active) {
      double t = (points(i, p) - lo[i]) / (hi[i] - lo[i]);
      int c = std::min(bins - 1, static_cast<int>(t * bins));
      id = id * static_cast<uint64_t>(bins) + static_cast<uint64_t>(c);
    }
    cells.insert(id);
  }
  double fill =
      static_cast<double>(cells.size()) / std::pow(double(bins), double(active.size()));
  return fill * extent_product;
}

DoublingReport doubling_ratio(const GradedSystem& sys, const Eigen::VectorXd& x,
                              const MultiRadius& delta, const QuadratureSpec& quad,
                              uint64_t seed, ChartCache* cache) {
  MultiRadius dbl = delta * 2.0;
  DoublingReport rep;

  // Capture check at the larger radius: reachable endpoints must invert into
  // the chart, otherwise the scaling theory does not describe this ball and we
  // measure the reachable set directly.
  ChartConfig ccfg;
  bool chart_ok = true;
  try {
    ChartPtr big = chart_for(sys, x, dbl, ccfg, cache);
    ReachableCloud probe = sample_reachable(sys, x, dbl, 192, 16, seed ^ 0xabcd);
    const double scale =
        std::max(big->column_scale() * std::max(big->eta(), 1.0), 1e-300);
    for (int p = 0; p < probe.points.cols(); ++p) {
      InvertResult inv = big->invert(probe.points.col(p), 1e-8);
      bool out = inv.off_leaf_residual > 1e-6 * scale ||
                 (!inv.converged && inv.u_norm >= big->eta());
      if (out) ++rep.capture_violations;
    }
    chart_ok = rep.capture_violations == 0;
  } catch (const ChartError&) {
    chart_ok = false;
  }

  if (chart_ok) {
    rep.at_delta = ball_volume(sys, x, delta, quad, ccfg, cache);
    rep.at_double = ball_volume(sys, x, dbl, quad, ccfg, cache);
    rep.ratio = rep.at_delta.volume > 0 ? rep.at_double.volume / rep.at_delta.volume : 0.0;
    rep.method = "chart";
  } else {
    const int paths = 4096;
    ReachableCloud c1 = sample_reachable(sys, x, delta, paths, 32, seed);
    ReachableCloud c2 = sample_reachable(sys, x, dbl, paths, 32, seed);
    double v1 = cloud_volume_estimate(c1.points);
    double v2 = cloud_volume_estimate(c2.points);
    rep.at_delta.x = x;
    rep.at_delta.delta = delta.delta;
    rep.at_delta.volume = v1;
    rep.at_delta.method = "cloud";
    rep.at_delta.seed = seed;
    rep.at_double.x = x;
    rep.at_double.delta = dbl.delta;
    rep.at_double.volume = v2;
    rep.at_double.method = "cloud";
    rep.at_double.seed = seed;
    rep.ratio = v1 > 0 ? v2 / v1 : 0.0;
    rep.method = "cloud";
  }
  return rep;
}

DistanceResult cc_distance(const GradedSystem& sys, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y, const MultiRadius& direction,
                           double tol, const MembershipConfig& cfg) {
  double rmax = direction.delta.maxCoeff();
  if (std::abs(rmax - 1.0) > 1e-12)
    throw std::invalid_argument("distance direction must have max component 1");

  DistanceResult res;
  if ((y - x).norm() == 0.0) return res;

  struct Probe {
    bool inside = false;
    bool off_leaf = false;
  };
  auto probe = [&](double s) -> Probe {
    ++res.probes;
    Probe pr;
    MultiRadius d;
    d.delta = direction.delta * s;
    ChartPtr chart;
    try {
      chart = chart_for(sys, x, d, cfg.chart, cfg.cache);
    } catch (const ChartError&) {
      return pr;  // unreachable scale: treat as outside
    }
    InvertResult inv = chart->invert(y, cfg.newton_tol);
    const double scale =
        std::max(chart->column_scale() * std::max(chart->eta(), 1.0), 1e-300);
    double bound = std::min(1.0, chart->eta());
    pr.off_leaf = inv.off_leaf_residual > 1e-6 * scale;
    pr.inside = !pr.off_leaf && inv.in_plane_residual <= cfg.newton_tol * scale * 10 &&
                inv.u_norm < bound;
    return pr;
  };

  Probe top = probe(1.0);
  if (!top.inside) {
    bool all_off_leaf = top.off_leaf;
    for (double s : {0.5, 0.25})
      all_off_leaf = all_off_leaf && probe(s).off_leaf;
    res.infinite = all_off_leaf;
    res.exceeds_unit = !all_off_leaf;
    res.lo = 1.0;
    res.hi = std::numeric_limits<double>::infinity();
    return res;
  }

  double hi = 1.0, lo = 0.0;
  // find a definite outside bracket
  for (double s = 0.5; s > 1e-8; s *= 0.5) {
    if (!probe(s).inside) {
      lo = s;
      hi = 2 * s;
      break;
    }
    hi = s;
  }
  if (lo == 0.0) {  // y indistinguishable from x at every probed scale
    res.lo = 0.0;
    res.hi = hi;
    return res;
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (probe(mid).inside)
      hi = mid;
    else
      lo = mid;
  }
  res.lo = lo;
  res.hi = hi;
  return res;
}

GradedSystem bracket_closure(const GradedSystem& generators, int max_order) {
  struct Cand {
    std::vector<ExprPtr> coeffs;
    Eigen::VectorXd degree;
    Eigen::VectorXd sig;  // stacked values at sample points
  };
  const auto& coords = generators.coords();
  const int n = generators.n();
  Rng rng(0xb9acce7ull);
  std::vector<Eigen::VectorXd> samples;
  for (int s = 0; s < 6; ++s) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
      x[i] = rng.uniform(generators.domain().min[i], generators.domain().max[i]);
    samples.push_back(x);
  }
  auto signature = [&](const std::vector<ExprPtr>& coeffs) {
    Eigen::VectorXd sig(n * static_cast<int>(samples.size()));
    for (size_t s = 0; s < samples.size(); ++s) {
      std::map<std::string, double> pt;
      for (int i = 0; i < n; ++i) pt[coords[i]] = samples[s][i];
      for (int i = 0; i < n; ++i)
        sig[static_cast<int>(s) * n + i] = evaluate(coeffs[i], pt);
    }
    return sig;
  };

  std::vector<Cand> all;  // accepted fields
  std::vector<Cand> frontier;
  for (int j = 0; j < generators.q(); ++j) {
    Cand c{generators.field(j).coefficients, generators.field(j).degree.components,
           Eigen::VectorXd()};
    c.sig = signature(c.coeffs);
    all.push_back(c);
    frontier.push_back(c);
  }

  for (int level = 2; level <= max_order; ++level) {
    std::vector<Cand> next;
    for (int g = 0; g < generators.q(); ++g) {
      for (const auto& w : frontier) {
        GradedVectorField lhs{generators.field(g).coefficients,
                              generators.field(g).degree};
        GradedVectorField rhs{w.coeffs, FormalDegree{w.degree}};
        Cand c;
        c.coeffs = commutator(lhs, rhs, coords);
        c.degree = generators.field(g).degree.components + w.degree;
        c.sig = signature(c.coeffs);
        if (c.sig.norm() < 1e-12) continue;
        bool dup = false;
        for (const auto& e : all)
          if ((e.degree - c.degree).norm() < 1e-12 &&
              std::min((e.sig - c.sig).norm(), (e.sig + c.sig).norm()) <=
                  1e-10 * (1.0 + e.sig.norm()))
            dup = true;
        if (dup) continue;
        all.push_back(c);
        next.push_back(c);
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }

  std::vector<GradedVectorField> fields;
  for (const auto& c : all)
    fields.push_back(GradedVectorField{c.coeffs, FormalDegree{c.degree}});
  return GradedSystem(n, generators.nu(), coords, std::move(fields),
                      generators.domain());
}

GeneratorComparisonReport generator_comparison(const GradedSystem& sys_generated,
                                               const GradedSystem& generators,
                                               const Eigen::VectorXd& x,
                                               const std::vector<double>& deltas,
                                               int samples, uint64_t seed) {
  GeneratorComparisonReport rep;
  rep.deltas = deltas;
  rep.seed = seed;
  rep.cloud_size = samples;
  rep.probe_size = std::max(64, samples / 16);

  Rng base(seed);
  for (size_t di = 0; di < deltas.size(); ++di) {
    MultiRadius dW;
    dW.delta = Eigen::VectorXd::Constant(generators.nu(), deltas[di]);
    ReachableCloud wcloud = sample_reachable(generators, x, dW, samples, 32,
                                             base.split(2 * di).next_u64());
    // per-axis half extents for the normalized coverage metric
    Eigen::VectorXd ext = Eigen::VectorXd::Constant(x.size(), 1e-300);
    for (int p = 0; p < wcloud.points.cols(); ++p)
      ext = ext.cwiseMax((wcloud.points.col(p) - x).cwiseAbs());

    double found = 0.0;
    for (double ep = 1.0; ep >= 0.049; ep -= 0.05) {
      MultiRadius dX;
      dX.delta = Eigen::VectorXd::Constant(sys_generated.nu(), ep * deltas[di]);
      // probes sit strictly inside their ball; the claim measured here is the
      // inner containment B(x, eta' delta) within the W-reachable set
      ReachableCloud probe =
          sample_reachable(sys_generated, x, dX, rep.probe_size, 32,
                           base.split(2 * di + 1).next_u64(), 0.95);
      int covered = 0;
      for (int p = 0; p < probe.points.cols(); ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < wcloud.points.cols(); ++c) {
          double d = 0.0;
          for (int i = 0; i < x.size(); ++i) {
            double diff = std::abs(probe.points(i, p) - wcloud.points(i, c)) / ext[i];
            d = std::max(d, diff);
            if (d >= best) break;
          }
          best = std::min(best, d);
          if (best <= rep.mesh_fraction) break;
        }
        if (best <= rep.mesh_fraction) ++covered;
      }
      double frac = probe.points.cols() > 0
                        ? static_cast<double>(covered) / probe.points.cols()
                        : 0.0;
      if (frac >= rep.coverage_fraction) {
        found = ep;
        break;
      }
    }
    rep.eta_prime.push_back(found);
  }
  rep.min_eta_prime = rep.eta_prime.empty()
                          ? 0.0
                          : *std::min_element(rep.eta_prime.begin(), rep.eta_prime.end());
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json ball_report_to_json(const BallReport& r) {
  nlohmann::json j;
  j["x"] = std::vector<double>(r.x.data(), r.x.data() + r.x.size());
  j["delta"] = std::vector<double>(r.delta.data(), r.delta.data() + r.delta.size());
  j["n0"] = r.n0;
  j["J"] = r.J;
  j["eta"] = r.eta;
  j["volume"] = r.volume;
  j["stderr"] = r.stderr_est;
  j["proxy"] = r.proxy;
  j["proxy_ratio"] = r.proxy_ratio;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["quadrature"]["kind"] =
      r.quad.kind == QuadratureSpec::Kind::Polar ? "polar" : "monte-carlo";
  j["quadrature"]["directions"] = r.quad.directions;
  j["quadrature"]["radial_nodes"] = r.quad.radial_nodes;
  j["quadrature"]["mc_budget"] = r.quad.mc_budget;
  return j;
}

nlohmann::json doubling_report_to_json(const DoublingReport& r) {
  nlohmann::json j;
  j["ratio"] = r.ratio;
  j["method"] = r.method;
  j["capture_violations"] = r.capture_violations;
  j["at_delta"] = ball_report_to_json(r.at_delta);
  j["at_double"] = ball_report_to_json(r.at_double);
  return j;
}

nlohmann::json distance_result_to_json(const DistanceResult& r) {
  nlohmann::json j;
  j["lo"] = r.lo;
  j["hi"] = std::isfinite(r.hi) ? nlohmann::json(r.hi) : nlohmann::json("inf");
  j["infinite"] = r.infinite;
  j["exceeds_unit"] = r.exceeds_unit;
  j["probes"] = r.probes;
  return j;
}

nlohmann::json generator_report_to_json(const GeneratorComparisonReport& r) {
  nlohmann::json j;
  j["deltas"] = r.deltas;
  j["eta_prime"] = r.eta_prime;
  j["min_eta_prime"] = r.min_eta_prime;
  j["coverage_fraction"] = r.coverage_fraction;
  j["mesh_fraction"] = r.mesh_fraction;
  j["cloud_size"] = r.cloud_size;
  j["probe_size"] = r.probe_size;
  j["seed"] = r.seed;
  return j;
}

void write_cloud_csv(const ReachableCloud& cloud, const std::vector<std::string>& coords,
                     const std::string& path) {
  std::ofstream out(path);
  for (size_t i = 0; i < coords.size(); ++i)
    out << coords[i] << (i + 1 < coords.size() ? ',' : '\n');
  out.precision(17);
  for (int p = 0; p < cloud.points.cols(); ++p)
    for (int i = 0; i < cloud.points.rows(); ++i)
      out << cloud.points(i, p) << (i + 1 < cloud.points.rows() ? ',' : '\n');
}

}  // namespace ccgeom
