#include "ccgeom/operators.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ccgeom/parallel.hpp"

namespace ccgeom {

GradedSystem subsystem(const GradedSystem& sys, const std::vector<int>& fields) {
  std::vector<GradedVectorField> fs;
  for (int j : fields) fs.push_back(sys.field(j));
  return GradedSystem(sys.n(), sys.nu(), sys.coords(), std::move(fs), sys.domain());
}

namespace {

ChartPtr chart_for(const GradedSystem& sys, const Eigen::VectorXd& x,
                   const MultiRadius& delta, const ChartConfig& cfg, ChartCache* cache) {
  if (cache) return cache->get(sys, x, delta, cfg);
  return build_chart(sys, x, delta, cfg);
}

// light validation for charts built per sample inside Monte Carlo loops
ChartConfig sampling_chart_config() {
  ChartConfig cfg;
  cfg.validation_samples = 8;
  cfg.ode = IntegratorConfig::loose();
  return cfg;
}

}  // namespace

double ball_average(const GradedSystem& sys, const Eigen::VectorXd& x,
                    const MultiRadius& delta, const ScalarFn& f,
                    const AverageConfig& cfg) {
  ChartPtr chart = chart_for(sys, x, delta, cfg.chart, cfg.cache);
  const int n0 = chart->n0();
  const double eta = chart->eta();

  double num = 0.0, den = 0.0;
  QuadratureSpec::Kind kind = cfg.quad.kind;
  if (kind == QuadratureSpec::Kind::Polar && n0 >= 4)
    kind = QuadratureSpec::Kind::MonteCarlo;

  if (kind == QuadratureSpec::Kind::Polar) {
    auto dirs = quasi_uniform_directions(n0, cfg.quad.directions);
    // 16-node Gauss-Legendre per ray through ball_volume's nodes
    static const double glx[16] = {
        -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
        -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
        -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
        0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
        0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
        0.9894009349916499};
    static const double glw[16] = {
        0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
        0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
        0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
        0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
        0.0271524594117541};
    for (const auto& dir : dirs) {
      for (int g = 0; g < 16; ++g) {
        double r = 0.5 * eta * (glx[g] + 1.0);
        double w = 0.5 * eta * glw[g];
        Eigen::VectorXd u = r * dir;
        FlowWithJacobian fj = chart->forward_with_jacobian(u);
        if (!fj.flow.ok()) continue;
        double density = minor_l2(fj.jacobian, n0) * std::pow(r, n0 - 1) * w;
        num += density * f(fj.flow.endpoint);
        den += density;
      }
    }
  } else {
    Rng base(cfg.quad.seed);
    const int N = cfg.quad.mc_budget;
    std::vector<double> nums(N, 0.0), dens(N, 0.0);
    parallel_for(N, [&](int i) {
      Rng rng = base.split(i);
      Eigen::VectorXd u = rng.ball(n0) * eta;
      FlowWithJacobian fj = chart->forward_with_jacobian(u);
      if (!fj.flow.ok()) return;
      double density = minor_l2(fj.jacobian, n0);
      nums[i] = density * f(fj.flow.endpoint);
      dens[i] = density;
    });
    for (int i = 0; i < N; ++i) {
      num += nums[i];
      den += dens[i];
    }
  }
  if (den <= 0) throw ChartError("ball average: empty quadrature");
  return num / den;
}

Eigen::VectorXd sample_chart_ball_uniform(const Chart& chart, Rng& rng) {
  const int n0 = chart.n0();
  const double eta = chart.eta();
  // estimate the density sup on a probe set, with margin
  double sup = 0.0;
  auto dirs = quasi_uniform_directions(n0, 8);
  for (const auto& dir : dirs)
    for (double frac : {0.35, 0.7, 0.99}) {
      FlowWithJacobian fj = chart.forward_with_jacobian(frac * eta * dir);
      if (fj.flow.ok()) sup = std::max(sup, minor_l2(fj.jacobian, n0));
    }
  sup *= 1.5;
  for (int attempt = 0; attempt < 500; ++attempt) {
    Eigen::VectorXd u = rng.ball(n0) * eta;
    FlowWithJacobian fj = chart.forward_with_jacobian(u);
    if (!fj.flow.ok()) continue;
    double density = minor_l2(fj.jacobian, n0);
    if (rng.uniform() * sup <= density) return fj.flow.endpoint;
  }
  throw ChartError("chart ball sampling: rejection loop exhausted");
}

ComposeResult compose_averages(const GradedSystem& sys,
                               const std::vector<std::vector<int>>& families,
                               const MultiRadius& delta, const Eigen::VectorXd& x,
                               const ScalarFn& f, int budget, uint64_t seed,
                               double cube_radius, const IntegratorConfig& cfg) {
  ScaledSystem ss(sys, delta);
  std::vector<FieldCombo> combos;
  for (const auto& fam : families) combos.emplace_back(ss, fam);

  ComposeResult out;
  out.budget = budget;
  out.cube_radius = cube_radius;
  out.seed = seed;

  Rng base(seed);
  std::vector<double> vals(budget, 0.0);
  std::vector<int> ok(budget, 0);
  parallel_for(budget, [&](int i) {
    Rng rng = base.split(i);
    std::vector<Eigen::VectorXd> ublocks;
    for (const auto& fam : families) {
      Eigen::VectorXd u(fam.size());
      for (size_t k = 0; k < fam.size(); ++k)
        u[k] = rng.uniform(-cube_radius, cube_radius);
      ublocks.push_back(u);
    }
    FlowResult fr = composed_exp(combos, ublocks, x, cfg);
    if (!fr.ok()) return;
    vals[i] = f(fr.endpoint);
    ok[i] = 1;
  });

  int kept = 0;
  double mean = 0.0;
  for (int i = 0; i < budget; ++i)
    if (ok[i]) {
      mean += vals[i];
      ++kept;
    }
  out.domain_exits = budget - kept;
  out.exit_flag = out.domain_exits > budget / 100;
  if (kept == 0) throw ChartError("composed average: all samples left the domain");
  mean /= kept;
  double var = 0.0;
  for (int i = 0; i < budget; ++i)
    if (ok[i]) var += (vals[i] - mean) * (vals[i] - mean);
  var /= std::max(1, kept - 1);
  out.mean = mean;
  out.stderr_est = std::sqrt(var / kept);
  return out;
}

KernelEstimate kernel_estimate(const GradedSystem& sys,
                               const std::vector<std::vector<int>>& families,
                               const MultiRadius& delta, const Eigen::VectorXd& x,
                               int bins, int budget, uint64_t seed, ChartCache* cache) {
  const int nu = static_cast<int>(families.size());
  std::vector<GradedSystem> subs;
  for (const auto& fam : families) subs.push_back(subsystem(sys, fam));

  // enlarged joint chart for the histogram coordinates
  MultiRadius enlarged = delta * static_cast<double>(nu);
  ChartConfig joint_cfg;
  ChartPtr joint = chart_for(sys, x, enlarged, joint_cfg, cache);
  const int n0 = joint->n0();
  const double eta = joint->eta();

  KernelEstimate k;
  k.bins = bins;
  k.n0 = n0;
  k.samples = budget;
  k.seed = seed;
  k.histogram_chart_n0 = n0;

  ChartConfig leg_cfg = sampling_chart_config();
  ChartCache local_cache;
  ChartCache* leg_cache = cache ? cache : &local_cache;

  const int total_bins = static_cast<int>(std::round(std::pow(bins, n0)));
  std::vector<double> counts(total_bins, 0.0);
  std::vector<Eigen::VectorXd> us;
  us.reserve(budget);

  Rng base(seed);
  int inverted = 0;
  for (int i = 0; i < budget; ++i) {
    Rng rng = base.split(i);
    Eigen::VectorXd z = x;
    bool alive = true;
    // family nu acts on x first (it is the outermost averaging operator)
    for (int m = nu - 1; m >= 0 && alive; --m) {
      try {
        ChartPtr leg = leg_cache->get(subs[m], z, delta, leg_cfg);
        z = sample_chart_ball_uniform(*leg, rng);
      } catch (const ChartError&) {
        alive = false;
      }
    }
    if (!alive) continue;
    InvertResult inv = joint->invert(z, 1e-7);
    if (!inv.converged) continue;
    ++inverted;
    k.support_radius = std::max(k.support_radius, inv.u_norm / eta);
    us.push_back(inv.u);
    Eigen::VectorXd t = inv.u / eta;  // in [-1, 1]^{n0}
    int id = 0;
    for (int d = 0; d < n0; ++d) {
      int c = std::min(bins - 1, static_cast<int>((t[d] + 1.0) * 0.5 * bins));
      c = std::max(0, c);
      id = id * bins + c;
    }
    counts[id] += 1.0;
  }
  k.support_fraction = static_cast<double>(inverted) / budget;

  double total = 0.0;
  for (double c : counts) total += c;
  if (total > 0)
    for (double& c : counts) c /= total;
  k.mass = 0.0;
  for (double c : counts) k.mass += c;
  k.bin_mass = counts;

  // diagonal density: mass near u = 0 over the bin volume, divided by the
  // chart Jacobian to land in leaf measure
  if (inverted > 0) {
    const double w = 0.15 * eta;  // half-width of the central window
    int central = 0;
    for (const auto& u : us)
      if (u.lpNorm<Eigen::Infinity>() <= w) ++central;
    double p_u = central / (static_cast<double>(inverted) * std::pow(2 * w, n0));
    k.diagonal = p_u / std::max(joint->det_ref(), 1e-300);

    QuadratureSpec q;
    BallReport ball = ball_volume(sys, x, delta, q, joint_cfg, cache);
    k.diag_times_vol = k.diagonal * ball.volume;

    Eigen::MatrixXd U(n0, static_cast<int>(us.size()));
    for (size_t i = 0; i < us.size(); ++i) U.col(static_cast<int>(i)) = us[i];
    double support_leaf_vol = cloud_volume_estimate(U) * joint->det_ref();
    k.diag_times_support = k.diagonal * support_leaf_vol;
  }
  return k;
}

MaximalResult maximal_function(const GradedSystem& sys, const ScalarFn& f,
                               const std::vector<Eigen::VectorXd>& x_grid,
                               const std::vector<MultiRadius>& delta_set,
                               const AverageConfig& cfg) {
  MaximalResult res;
  auto absf = [&](const Eigen::VectorXd& y) { return std::abs(f(y)); };
  for (const auto& x : x_grid) {
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& d : delta_set) {
      try {
        best = std::max(best, ball_average(sys, x, d, absf, cfg));
        any = true;
      } catch (const ChartError&) {
        ++res.skipped;
      }
    }
    res.values.push_back(any ? best : std::numeric_limits<double>::quiet_NaN());
  }
  return res;
}

namespace {

// nested composed maximal M_nu(...(M_1 f)) via Monte Carlo ball averages
double composed_maximal(const GradedSystem& sys,
                        const std::vector<GradedSystem>& subs,
                        const std::vector<std::vector<MultiRadius>>& deltas,
                        const ScalarFn& f, const Eigen::VectorXd& x, int level,
                        int budget, Rng rng, ChartCache* cache) {
  if (level < 0) return std::abs(f(x));
  ChartConfig cfg = sampling_chart_config();
  double best = 0.0;
  for (const auto& d : deltas[level]) {
    ChartPtr chart;
    try {
      chart = cache->get(subs[level], x, d, cfg);
    } catch (const ChartError&) {
      continue;
    }
    double num = 0.0, den = 0.0;
    for (int i = 0; i < budget; ++i) {
      Rng sub = rng.split(static_cast<uint64_t>(level) * 100003 + i);
      Eigen::VectorXd u = sub.ball(chart->n0()) * chart->eta();
      FlowWithJacobian fj = chart->forward_with_jacobian(u);
      if (!fj.flow.ok()) continue;
      double density = minor_l2(fj.jacobian, chart->n0());
      double inner = composed_maximal(sys, subs, deltas, f, fj.flow.endpoint,
                                      level - 1, std::max(8, budget / 2), sub, cache);
      num += density * inner;
      den += density;
    }
    if (den > 0) best = std::max(best, num / den);
  }
  return best;
}

}  // namespace

ProductBoundReport product_bound_check(const GradedSystem& sys,
                                       const std::vector<std::vector<int>>& families,
                                       const ScalarFn& f,
                                       const std::vector<Eigen::VectorXd>& x_grid,
                                       const std::vector<double>& delta_values,
                                       int mc_budget, uint64_t seed,
                                       ChartCache* cache) {
  const int nu = static_cast<int>(families.size());
  std::vector<GradedSystem> subs;
  for (const auto& fam : families) subs.push_back(subsystem(sys, fam));

  // joint radii: all combinations of the per-family values on the diagonal
  // grid (delta_i applied to every family component simultaneously keeps the
  // grid small while exercising anisotropy through the family structure)
  std::vector<MultiRadius> joint_set;
  for (double a : delta_values)
    for (double b : delta_values) {
      MultiRadius d;
      d.delta = Eigen::VectorXd::Constant(sys.nu(), a);
      if (sys.nu() >= 2) d.delta[1] = b;
      joint_set.push_back(d);
      if (sys.nu() < 2) break;
    }

  std::vector<std::vector<MultiRadius>> per_family(nu);
  for (int m = 0; m < nu; ++m)
    for (double a : delta_values) {
      MultiRadius d;
      d.delta = Eigen::VectorXd::Constant(sys.nu(), a);
      per_family[m].push_back(d);
    }

  ProductBoundReport rep;
  rep.grid_points = static_cast<int>(x_grid.size());
  rep.mc_budget = mc_budget;
  rep.seed = seed;

  ChartCache local;
  ChartCache* cc = cache ? cache : &local;
  AverageConfig avg_cfg;
  avg_cfg.quad.kind = QuadratureSpec::Kind::MonteCarlo;
  avg_cfg.quad.mc_budget = mc_budget;
  avg_cfg.cache = cc;
  avg_cfg.chart = sampling_chart_config();

  Rng base(seed);
  for (size_t xi = 0; xi < x_grid.size(); ++xi) {
    double joint = 0.0;
    bool any = false;
    auto absf = [&](const Eigen::VectorXd& y) { return std::abs(f(y)); };
    for (const auto& d : joint_set) {
      try {
        avg_cfg.quad.seed = base.split(xi).next_u64();
        joint = std::max(joint, ball_average(sys, x_grid[xi], d, absf, avg_cfg));
        any = true;
      } catch (const ChartError&) {
      }
    }
    double comp = composed_maximal(sys, subs, per_family, f, x_grid[xi], nu - 1,
                                   mc_budget, base.split(1000 + xi), cc);
    rep.joint.push_back(any ? joint : 0.0);
    rep.composed.push_back(comp);
    if (comp > 0 && any) rep.fitted_c = std::max(rep.fitted_c, joint / comp);
  }
  return rep;
}

IntersectionReport intersection_volume(const GradedSystem& sys,
                                       const std::vector<int>& family_a,
                                       const std::vector<int>& family_b,
                                       const Eigen::VectorXd& x, const MultiRadius& delta,
                                       int budget, uint64_t seed, ChartCache* cache) {
  GradedSystem sub_a = subsystem(sys, family_a);
  GradedSystem sub_b = subsystem(sys, family_b);

  // both families must generate the same leaf through x
  auto rank_of = [&](const GradedSystem& s) {
    Eigen::MatrixXd M = s.fields_at(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    double tol = numerical_rank_tol(svd.singularValues());
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > tol) ++r;
    return r;
  };
  int ra = rank_of(sub_a), rb = rank_of(sub_b), rj = rank_of(sys);
  if (ra != rb || ra != rj)
    throw std::runtime_error("intersection volume: families generate different leaves");

  ChartConfig cfg;
  ChartCache local;
  ChartCache* cc = cache ? cache : &local;
  ChartPtr chart_a = cc->get(sub_a, x, delta, cfg);
  ChartPtr chart_b = cc->get(sub_b, x, delta, cfg);
  ChartPtr chart_j = cc->get(sys, x, delta, cfg);

  QuadratureSpec q;
  IntersectionReport rep;
  rep.budget = budget;
  rep.seed = seed;
  rep.vol_a = ball_volume(sub_a, x, delta, q, cfg, cc).volume;
  rep.vol_b = ball_volume(sub_b, x, delta, q, cfg, cc).volume;
  rep.vol_joint = ball_volume(sys, x, delta, q, cfg, cc).volume;

  Rng base(seed);
  int hits = 0;
  for (int i = 0; i < budget; ++i) {
    Rng rng = base.split(i);
    Eigen::VectorXd z = sample_chart_ball_uniform(*chart_a, rng);
    InvertResult inv = chart_b->invert(z, 1e-8);
    if (inv.converged) ++hits;
  }
  rep.fraction = static_cast<double>(hits) / budget;
  rep.fraction_stderr = std::sqrt(rep.fraction * (1.0 - rep.fraction) / budget);
  rep.vol_intersection = rep.vol_a * rep.fraction;
  rep.ratio = rep.vol_a * rep.vol_b > 0
                  ? rep.vol_intersection * rep.vol_joint / (rep.vol_a * rep.vol_b)
                  : 0.0;
  return rep;
}

MetricCompositionReport metric_composition_check(
    const GradedSystem& sys, const std::vector<std::vector<int>>& families,
    const Eigen::VectorXd& x, const Eigen::VectorXd& y, const MultiRadius& r,
    double tol, int starts, uint64_t seed, ChartCache* cache) {
  const int nu = static_cast<int>(families.size());
  MetricCompositionReport rep;

  MembershipConfig mcfg;
  ChartCache local;
  mcfg.cache = cache ? cache : &local;

  DistanceResult joint = cc_distance(sys, x, y, r, tol, mcfg);
  if (joint.infinite || joint.exceeds_unit) {
    rep.infinite = true;
    return rep;
  }
  rep.rho_joint = 0.5 * (joint.lo + joint.hi);

  std::vector<GradedSystem> subs;
  for (const auto& fam : families) subs.push_back(subsystem(sys, fam));
  auto family_distance = [&](int m, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    MultiRadius ones;
    ones.delta = Eigen::VectorXd::Ones(sys.nu());
    return cc_distance(subs[m], a, b, ones, tol, mcfg);
  };

  if (nu == 1) {
    DistanceResult d = family_distance(0, x, y);
    rep.composed = d.infinite ? std::numeric_limits<double>::infinity()
                              : 0.5 * (d.lo + d.hi) / r.delta[0];
    rep.feasible_intermediates = 1;
    rep.ratio = rep.composed / std::max(rep.rho_joint, 1e-300);
    return rep;
  }

  // Newton shooting: solve e^{u_2 . Z^2}(e^{u_1 . Z^1} x) = y so that the
  // intermediate w = e^{u_1 . Z^1} x is family-1-reachable from x and y is
  // family-2-reachable from w; the composed distance is then minimized over
  // the feasible intermediates found. Implemented for nu = 2 (the examples
  // exercised here).
  if (nu != 2)
    throw std::invalid_argument("metric composition implemented for nu <= 2");

  ScaledSystem ss(sys, r);
  FieldCombo c1(ss, families[0]);
  FieldCombo c2(ss, families[1]);
  const int q1 = c1.width(), q2 = c2.width();
  IntegratorConfig icfg = IntegratorConfig::loose();

  double best = std::numeric_limits<double>::infinity();
  Rng base(seed);
  double shoot_scale = std::max(rep.rho_joint, tol);
  for (int s = 0; s < starts; ++s) {
    Rng rng = base.split(s);
    Eigen::VectorXd u(q1 + q2);
    for (int i = 0; i < q1 + q2; ++i)
      u[i] = s == 0 ? 0.0 : rng.uniform(-shoot_scale, shoot_scale);
    bool converged = false;
    Eigen::VectorXd w = x;
    for (int it = 0; it < 40; ++it) {
      FlowResult leg1 = exp_map(c1, u.head(q1), x, icfg);
      if (!leg1.ok()) break;
      w = leg1.endpoint;
      FlowWithJacobian leg2 = exp_map_with_jacobian(c2, u.tail(q2), w, icfg);
      if (!leg2.flow.ok()) break;
      Eigen::VectorXd res = y - leg2.flow.endpoint;
      double scale = std::max(1e-300, (y - x).norm());
      if (res.norm() <= 1e-9 * (1.0 + scale)) {
        converged = true;
        break;
      }
      Eigen::MatrixXd J(sys.n(), q1 + q2);
      J.rightCols(q2) = leg2.jacobian;
      // transport of dw/du1 through leg 2 by finite differences
      const double h = 1e-6 * std::max(1.0, shoot_scale);
      for (int i = 0; i < q1; ++i) {
        Eigen::VectorXd up = u.head(q1);
        up[i] += h;
        FlowResult wp = exp_map(c1, up, x, icfg);
        FlowResult ep = exp_map(c2, u.tail(q2), wp.endpoint, icfg);
        J.col(i) = (ep.endpoint - leg2.flow.endpoint) / h;
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
      Eigen::VectorXd du = cod.solve(res);
      double cap = 2.0 * shoot_scale + 1.0;
      if (du.norm() > cap) du *= cap / du.norm();
      u += du;
    }
    if (!converged) continue;
    ++rep.feasible_intermediates;
    DistanceResult d1 = family_distance(0, x, w);
    DistanceResult d2 = family_distance(1, w, y);
    if (d1.infinite || d2.infinite || d1.exceeds_unit || d2.exceeds_unit) continue;
    double total = 0.5 * (d1.lo + d1.hi) / r.delta[0] + 0.5 * (d2.lo + d2.hi) / r.delta[1];
    best = std::min(best, total);
  }
  rep.composed = best;
  rep.ratio = best / std::max(rep.rho_joint, 1e-300);
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json kernel_to_json(const KernelEstimate& k) {
  nlohmann::json j;
  j["bins"] = k.bins;
  j["n0"] = k.n0;
  j["mass"] = k.mass;
  j["diagonal"] = k.diagonal;
  j["diag_times_vol"] = k.diag_times_vol;
  j["diag_times_support"] = k.diag_times_support;
  j["support_radius"] = k.support_radius;
  j["support_fraction"] = k.support_fraction;
  j["samples"] = k.samples;
  j["seed"] = k.seed;
  return j;
}

nlohmann::json compose_to_json(const ComposeResult& c) {
  nlohmann::json j;
  j["mean"] = c.mean;
  j["stderr"] = c.stderr_est;
  j["domain_exits"] = c.domain_exits;
  j["exit_flag"] = c.exit_flag;
  j["budget"] = c.budget;
  j["cube_radius"] = c.cube_radius;
  j["seed"] = c.seed;
  return j;
}

nlohmann::json intersection_to_json(const IntersectionReport& r) {
  nlohmann::json j;
  j["vol_a"] = r.vol_a;
  j["vol_b"] = r.vol_b;
  j["vol_joint"] = r.vol_joint;
  j["vol_intersection"] = r.vol_intersection;
  j["ratio"] = r.ratio;
  j["fraction"] = r.fraction;
  j["fraction_stderr"] = r.fraction_stderr;
  j["budget"] = r.budget;
  j["seed"] = r.seed;
  return j;
}

nlohmann::json metric_to_json(const MetricCompositionReport& r) {
  nlohmann::json j;
  j["rho_joint"] = r.rho_joint;
  j["composed"] = r.composed;
  j["ratio"] = r.ratio;
  j["infinite"] = r.infinite;
  j["feasible_intermediates"] = r.feasible_intermediates;
  return j;
}

nlohmann::json product_bound_to_json(const ProductBoundReport& r) {
  nlohmann::json j;
  j["joint"] = r.joint;
  j["composed"] = r.composed;
  j["fitted_c"] = r.fitted_c;
  j["grid_points"] = r.grid_points;
  j["mc_budget"] = r.mc_budget;
  j["seed"] = r.seed;
  return j;
}

void write_kernel_csv(const KernelEstimate& k, const std::string& path) {
  std::ofstream out(path);
  out << "bin_id,mass\n";
  out.precision(17);
  for (size_t i = 0; i < k.bin_mass.size(); ++i)
    if (k.bin_mass[i] > 0) out << i << ',' << k.bin_mass[i] << '\n';
}

}  // namespace ccgeom
