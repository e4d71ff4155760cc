// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgeom/balls.hpp"
#include "ccgeom/control.hpp"
#include "ccgeom/examples.hpp"
#include "ccgeom/operators.hpp"
#include "ccgeom/rng.hpp"

using namespace ccgeom;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (detail.empty()) detail = what;
  }
};

MultiRadius radius(std::initializer_list<double> vals) {
  MultiRadius r;
  r.delta.resize(static_cast<int>(vals.size()));
  int i = 0;
  for (double v : vals) r.delta[i++] = v;
  return r;
}

MultiRadius uniform_radius(int nu, double v) {
  MultiRadius r;
  r.delta = Eigen::VectorXd::Constant(nu, v);
  return r;
}

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

std::string fmt(double v) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Cauchy-Binet identity: 200 random matrices, relative error <= 1e-9.

Criterion criterion_cauchy_binet() {
  Criterion c;
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + int(rng.next_u64() % 5);
    int n0 = 1 + int(rng.next_u64() % n);
    Eigen::MatrixXd M(n, n0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n0; ++j) M(i, j) = rng.uniform(-2, 2);
    double g = gram_volume(M);
    double m = minor_vector(M, n0).l2();
    double err = std::abs(m - g) / (1.0 + g);
    worst = std::max(worst, err);
  }
  if (worst > 1e-9) c.fail("worst relative error " + fmt(worst));
  c.note("worst relative error " + fmt(worst));
  return c;
}

// ---------------------------------------------------------------------------
// 2. Symbolic-vs-FD differentiation: 1000 random expressions, error <= 1e-6.

ExprPtr random_expr(Rng& rng, const std::vector<std::string>& vars, int depth) {
  double pick = rng.uniform();
  if (depth <= 0 || pick < 0.25) {
    if (rng.uniform() < 0.5) return Expr::constant(rng.uniform(-2.0, 2.0));
    return Expr::variable(vars[rng.next_u64() % vars.size()]);
  }
  if (pick < 0.40)
    return Expr::add(random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
  if (pick < 0.55)
    return Expr::sub(random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
  if (pick < 0.72)
    return Expr::mul(random_expr(rng, vars, depth - 1), random_expr(rng, vars, depth - 1));
  if (pick < 0.80)
    return Expr::div(random_expr(rng, vars, depth - 1),
                     Expr::add(Expr::constant(rng.uniform(1.0, 3.0)),
                               Expr::mul(Expr::variable(vars[0]), Expr::variable(vars[0]))));
  if (pick < 0.88)
    return Expr::pow(random_expr(rng, vars, depth - 1), 1 + int(rng.next_u64() % 3));
  auto arg = random_expr(rng, vars, depth - 1);
  if (rng.uniform() < 0.34) return Expr::call("exp", Expr::mul(Expr::constant(0.3), arg));
  return Expr::call(rng.next_u64() % 2 ? "sin" : "cos", arg);
}

Criterion criterion_symbolic_fd() {
  Criterion c;
  Rng rng(2002);
  std::vector<std::string> vars{"x", "y"};
  int checked = 0, trials = 0;
  double worst = 0.0;
  while (checked < 1000 && trials < 20000) {
    ++trials;
    auto e = random_expr(rng, vars, 5);
    std::map<std::string, double> pt{{"x", rng.uniform(-1.5, 1.5)},
                                     {"y", rng.uniform(-1.5, 1.5)}};
    double v, d;
    try {
      v = evaluate(e, pt);
      d = evaluate(differentiate(e, "x"), pt);
    } catch (...) {
      continue;
    }
    if (!std::isfinite(v) || !std::isfinite(d) || std::abs(v) > 1e6 || std::abs(d) > 1e6)
      continue;
    auto ph = pt, mh = pt;
    ph["x"] += 1e-5;
    mh["x"] -= 1e-5;
    double fd = (evaluate(e, ph) - evaluate(e, mh)) / 2e-5;
    if (!std::isfinite(fd)) continue;
    ++checked;
    double err = std::abs(d - fd) / (1.0 + std::abs(v) + std::abs(d));
    worst = std::max(worst, err);
    if (err > 1e-6) c.fail("expression " + to_string(e) + " error " + fmt(err));
  }
  if (checked < 1000) c.fail("only " + std::to_string(checked) + " usable expressions");
  c.note(std::to_string(checked) + " expressions, worst error " + fmt(worst));
  return c;
}

// ---------------------------------------------------------------------------
// 3. Structure ODE on heisenberg-left at delta = 0.1.

Criterion criterion_structure_ode() {
  Criterion c;
  GradedSystem heis = builtin("heisenberg-left");
  ChartPtr chart = build_chart(heis, vec({0, 0, 0}), radius({0.1}));
  StructureOdeSolution sol =
      solve_structure_ode(chart, default_ctilde(chart), {16, 64}, 1e-10, 60);
  if (sol.iterations > 30)
    c.fail("Picard took " + std::to_string(sol.iterations) + " iterations");
  if (sol.final_residual >= 1e-8)
    c.fail("final residual " + fmt(sol.final_residual));
  for (double r : sol.update_ratios)
    if (r > 0.75 + 1e-9) c.fail("update ratio " + fmt(r) + " above 3/4");
  if (sol.sup_a > 0.5 + 1e-12) c.fail("sup ||A|| = " + fmt(sol.sup_a));
  double disc = ode_frame_discrepancy(chart, sol);
  if (disc > 1e-5) c.fail("ODE vs pinv frame discrepancy " + fmt(disc));
  c.note("iters " + std::to_string(sol.iterations) + ", residual " +
         fmt(sol.final_residual) + ", sup||A|| " + fmt(sol.sup_a) + ", frame diff " +
         fmt(disc));
  return c;
}

// ---------------------------------------------------------------------------
// 4 + 5. Pushforward identity and determinant comparability on
// heisenberg-left, grushin, r4-cos-sin at delta in {0.5, 0.1, 0.02}.

void pushforward_and_window(Criterion& push, Criterion& window) {
  struct Case {
    std::string name;
    Eigen::VectorXd x;
  };
  std::vector<Case> cases = {{"heisenberg-left", vec({0, 0, 0})},
                             {"grushin", vec({0, 0})},
                             {"r4-cos-sin", vec({0, 0, 0, 0})}};
  double worst_push = 0.0;
  for (const auto& cs : cases) {
    GradedSystem sys = builtin(cs.name);
    for (double d : {0.5, 0.1, 0.02}) {
      ChartPtr chart = build_chart(sys, cs.x, uniform_radius(sys.nu(), d));
      const int n0 = chart->n0();
      const double lo = std::pow(0.5, n0), hi = std::pow(1.5, n0);
      Rng rng(3003);
      for (int s = 0; s < 100; ++s) {
        Eigen::VectorXd u = rng.ball(n0) * (chart->eta() / 1.1);
        FlowWithJacobian fj = chart->forward_with_jacobian(u);
        if (!fj.flow.ok()) {
          push.fail(cs.name + " left the domain inside the chart");
          continue;
        }
        Eigen::MatrixXd X = chart->scaled().matrix_at(fj.flow.endpoint);
        Eigen::MatrixXd frame = chart->pullback_frame(u);
        Eigen::MatrixXd diff = fj.jacobian * frame - X;
        for (int j = 0; j < X.cols(); ++j) {
          double rel = diff.col(j).norm() / (1e-3 + X.col(j).norm());
          worst_push = std::max(worst_push, rel);
          if (diff.col(j).norm() > 1e-6 * X.col(j).norm() + 1e-9)
            push.fail(cs.name + " at delta " + fmt(d) + ": residual " +
                      fmt(diff.col(j).norm()) + " on field " + std::to_string(j));
        }
        double ratio = minor_l2(fj.jacobian, n0) / chart->det_ref();
        if (ratio < lo * 0.999 || ratio > hi * 1.001)
          window.fail(cs.name + " at delta " + fmt(d) + ": det ratio " + fmt(ratio) +
                      " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
      }
    }
  }
  push.note("worst relative residual " + fmt(worst_push));
  window.note("all samples inside [(1/2)^n0, (3/2)^n0]");
}

// ---------------------------------------------------------------------------
// 6. Volume scaling slopes: heisenberg 4.00 +- 0.05, grushin 3.00 +- 0.05.

Criterion criterion_volume_slopes() {
  Criterion c;
  ChartCache cache;
  QuadratureSpec quad;
  auto slope = [&](const GradedSystem& sys, const Eigen::VectorXd& x) {
    std::vector<double> lx, ly;
    for (double d : {0.1, 0.056, 0.032, 0.018, 0.01}) {
      BallReport r = ball_volume(sys, x, radius({d}), quad, {}, &cache);
      lx.push_back(std::log(d));
      ly.push_back(std::log(r.volume));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
  };
  GradedSystem heis = builtin("heisenberg-left");
  double sh = slope(heis, vec({0, 0, 0}));
  if (std::abs(sh - 4.0) > 0.05) c.fail("heisenberg slope " + fmt(sh));
  GradedSystem gr = builtin("grushin");
  double sg = slope(gr, vec({0, 0}));
  if (std::abs(sg - 3.0) > 0.05) c.fail("grushin slope " + fmt(sg));
  c.note("heisenberg " + fmt(sh) + ", grushin " + fmt(sg));
  return c;
}

// ---------------------------------------------------------------------------
// 7. Doubling: euclidean 2^n +- 2%, heisenberg 16 +- 10%, counterexample
// strictly increasing over eps and > 1e3 at eps = 0.25.

Criterion criterion_doubling() {
  Criterion c;
  ChartCache cache;
  QuadratureSpec quad;
  for (int n : {1, 2, 3}) {
    GradedSystem eucl = builtin("euclidean(" + std::to_string(n) + ")");
    DoublingReport r =
        doubling_ratio(eucl, Eigen::VectorXd::Zero(n), radius({0.1}), quad, 71, &cache);
    double want = std::pow(2.0, n);
    if (std::abs(r.ratio - want) > 0.02 * want)
      c.fail("euclidean(" + std::to_string(n) + ") ratio " + fmt(r.ratio));
  }
  GradedSystem heis = builtin("heisenberg-left");
  DoublingReport rh = doubling_ratio(heis, vec({0, 0, 0}), radius({0.1}), quad, 71, &cache);
  if (std::abs(rh.ratio - 16.0) > 1.6) c.fail("heisenberg ratio " + fmt(rh.ratio));

  GradedSystem wc = builtin("weakly-comparable-counterexample");
  std::vector<double> ratios;
  for (double eps : {0.5, 0.35, 0.25}) {
    DoublingReport r =
        doubling_ratio(wc, vec({0, 0}), radius({eps, eps, 0}), quad, 71, &cache);
    if (r.method != "cloud")
      c.fail("counterexample at eps " + fmt(eps) + " unexpectedly used the chart");
    ratios.push_back(r.ratio);
  }
  if (!(ratios[0] < ratios[1] && ratios[1] < ratios[2]))
    c.fail("counterexample ratios not strictly increasing: " + fmt(ratios[0]) + ", " +
           fmt(ratios[1]) + ", " + fmt(ratios[2]));
  if (ratios[2] <= 1e3) c.fail("counterexample ratio at eps=0.25 is " + fmt(ratios[2]));
  c.note("heisenberg " + fmt(rh.ratio) + "; counterexample " + fmt(ratios[0]) + " -> " +
         fmt(ratios[1]) + " -> " + fmt(ratios[2]));
  return c;
}

// ---------------------------------------------------------------------------
// 8. Control verdicts.

Criterion criterion_control() {
  Criterion c;
  {
    GradedSystem line = builtin("control-line");
    GradedSystem base = subsystem(line, {0, 1});
    std::vector<Eigen::VectorXd> xs;
    for (double x : {-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9}) xs.push_back(vec({x}));
    std::vector<MultiRadius> ds = {radius({0.1}), radius({0.03}), radius({0.01}),
                                   radius({0.003})};
    ControlReport rep = check_control(base, line.field(2), xs, ds);
    if (rep.verdict != "controlled")
      c.fail("control-line verdict '" + rep.verdict + "'");
    if (rep.sup_coeff > 2.0) c.fail("control-line sup coefficient " + fmt(rep.sup_coeff));
    c.note("control-line sup " + fmt(rep.sup_coeff));
  }
  {
    std::vector<MultiRadius> ds;
    for (int k = 0; k <= 6; ++k) ds.push_back(uniform_radius(2, std::pow(10.0, -k)));
    ControlConfig cfg;
    cfg.ball_samples = 32;
    int checked = 0;
    for (double cd1 = 0.0; cd1 <= 1.51; cd1 += 0.25)
      for (double cd2 = 0.0; cd2 <= 1.51; cd2 += 0.25) {
        if (cd1 == 0.0 && cd2 == 0.0) continue;
        GradedSystem all = builtin("degree-line(1,1," + std::to_string(cd1) + "," +
                                   std::to_string(cd2) + ")");
        GradedSystem base = subsystem(all, {0, 1});
        ControlReport r = check_control(base, all.field(2), {vec({0.0})}, ds, cfg);
        ++checked;
        double sum = cd1 + cd2;
        std::string tag = "(" + fmt(cd1) + "," + fmt(cd2) + ")";
        if (std::abs(sum - 1.0) < 1e-9) {
          if (r.verdict != "controlled" || !r.marginal)
            c.fail(tag + " expected controlled+marginal, got " + r.verdict +
                   (r.marginal ? " (marginal)" : ""));
        } else if (sum > 1.0) {
          if (r.verdict != "controlled") c.fail(tag + " expected controlled, got " + r.verdict);
        } else {
          if (r.verdict != "not-controlled")
            c.fail(tag + " expected not-controlled, got " + r.verdict);
        }
      }
    if (c.detail.find("degree-line") == std::string::npos)
      c.detail += "; degree-line battery " + std::to_string(checked) + " probes";
  }
  return c;
}

// ---------------------------------------------------------------------------
// 9. Unit-operator sandwich on heisenberg-two-param.

Criterion criterion_sandwich() {
  Criterion c;
  GradedSystem h2 = builtin("heisenberg-two-param");
  ChartCache cache;
  AverageConfig acfg;
  acfg.cache = &cache;
  acfg.quad.kind = QuadratureSpec::Kind::MonteCarlo;
  acfg.quad.mc_budget = 384;

  std::vector<ScalarFn> fs;
  std::vector<std::string> fnames = {
      "1",          "1+x*x",       "(1+x)^2",         "y*y+t*t",  "2+x+y",
      "1+x*x*y*y",  "(1-y)^2+t*t", "3+t",             "x*x+y*y",  "(1+t)^2+x*x"};
  for (const auto& s : fnames) {
    ExprPtr e = parse(s);
    auto ce = std::make_shared<CompiledExpr>(e, h2.coords());
    fs.push_back([ce](const Eigen::VectorXd& y) {
      return ce->eval(std::span<const double>(y.data(), y.size()));
    });
  }

  Rng rng(9009);
  std::vector<Eigen::VectorXd> centers;
  for (int i = 0; i < 20; ++i)
    centers.push_back(vec({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                           rng.uniform(-0.1, 0.1)}));
  MultiRadius delta = uniform_radius(2, 0.2);
  MultiRadius inner = uniform_radius(2, 0.05);  // lambda_3 fraction 1/4

  auto fit = [&](int budget, double* c_inner, double* c_outer) {
    double ci = 0.0, co = 0.0;
    int idx = 0;
    for (const auto& x : centers) {
      for (size_t k = 0; k < fs.size(); ++k) {
        acfg.quad.seed = 17 + idx;
        double a_in = ball_average(h2, x, inner, fs[k], acfg);
        double a_out = ball_average(h2, x, delta, fs[k], acfg);
        ComposeResult mid = compose_averages(h2, {{0, 1, 2}, {3, 4, 5}}, delta, x,
                                             fs[k], budget, 23 + idx);
        if (mid.mean <= 0 || a_out <= 0) {
          ci = co = std::numeric_limits<double>::infinity();
          continue;
        }
        ci = std::max(ci, a_in / mid.mean);
        co = std::max(co, mid.mean / a_out);
        ++idx;
      }
    }
    *c_inner = ci;
    *c_outer = co;
  };

  double ci1, co1, ci2, co2;
  fit(1200, &ci1, &co1);
  fit(2400, &ci2, &co2);
  if (!std::isfinite(ci1) || !std::isfinite(co1)) c.fail("non-finite fitted constants");
  double drift_i = std::abs(ci2 - ci1) / ci1;
  double drift_o = std::abs(co2 - co1) / co1;
  if (drift_i >= 0.20) c.fail("inner constant drift " + fmt(drift_i));
  if (drift_o >= 0.20) c.fail("outer constant drift " + fmt(drift_o));
  c.note("c_inner " + fmt(ci1) + " -> " + fmt(ci2) + ", c_outer " + fmt(co1) + " -> " +
         fmt(co2));
  return c;
}

// ---------------------------------------------------------------------------
// 10. Kernel diagonal on heisenberg-two-param.

Criterion criterion_kernel() {
  Criterion c;
  GradedSystem h2 = builtin("heisenberg-two-param");
  ChartCache cache;
  std::vector<MultiRadius> grid = {radius({0.2, 0.2}), radius({0.25, 0.12}),
                                   radius({0.12, 0.25})};
  for (const auto& d : grid) {
    KernelEstimate k = kernel_estimate(h2, {{0, 1, 2}, {3, 4, 5}}, d, vec({0, 0, 0}),
                                       9, 4000, 1017, &cache);
    std::string tag = "delta (" + fmt(d.delta[0]) + "," + fmt(d.delta[1]) + ")";
    if (std::abs(k.mass - 1.0) > 1e-6) c.fail(tag + " mass " + fmt(k.mass));
    if (k.support_fraction < 1.0)
      c.fail(tag + " support fraction " + fmt(k.support_fraction));
    if (k.diag_times_vol < 0.1 || k.diag_times_vol > 10.0)
      c.fail(tag + " diagonal * volume " + fmt(k.diag_times_vol));
    if (c.detail.empty() || c.pass)
      c.note("diag*vol " + fmt(k.diag_times_vol) + " at the first grid point");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 11. Intersection volume.

GradedSystem euclidean_two_param_axes() {
  auto f = [](const char* a, const char* b, double d1, double d2) {
    GradedVectorField fld;
    fld.coefficients = {parse(a), parse(b)};
    fld.degree.components = vec({d1, d2});
    return fld;
  };
  Box box;
  box.min = vec({-2, -2});
  box.max = vec({2, 2});
  return GradedSystem(2, 2, {"x", "y"},
                      {f("1", "0", 1, 0), f("0", "1", 1, 0), f("1", "0", 0, 1),
                       f("0", "1", 0, 1)},
                      box);
}

Criterion criterion_intersection() {
  Criterion c;
  GradedSystem axes = euclidean_two_param_axes();
  IntersectionReport r = intersection_volume(axes, {0, 1}, {2, 3}, vec({0, 0}),
                                             radius({0.3, 0.2}), 4096, 1101);
  if (std::abs(r.ratio - 1.0) > 0.03)
    c.fail("euclidean axes ratio " + fmt(r.ratio));
  c.note("euclidean ratio " + fmt(r.ratio));

  GradedSystem h2 = builtin("heisenberg-two-param");
  for (double d1 : {0.3, 0.2, 0.1})
    for (double d2 : {0.3, 0.2, 0.1}) {
      IntersectionReport rh = intersection_volume(h2, {0, 1, 2}, {3, 4, 5},
                                                  vec({0, 0, 0}), radius({d1, d2}),
                                                  1024, 1102);
      if (rh.ratio < 0.1 || rh.ratio > 10.0)
        c.fail("heisenberg (" + fmt(d1) + "," + fmt(d2) + ") ratio " + fmt(rh.ratio));
    }
  return c;
}

// ---------------------------------------------------------------------------
// 12. Maximal product bound with one grid refinement.

Criterion criterion_product_bound() {
  Criterion c;
  auto f = [](const Eigen::VectorXd& y) {
    return (1 + y[0]) * (1 + y[0]) + y[1] * y[1];
  };

  {
    GradedSystem axes = euclidean_two_param_axes();
    std::vector<Eigen::VectorXd> base = {vec({0, 0}), vec({0.4, -0.2}), vec({-0.3, 0.5})};
    std::vector<Eigen::VectorXd> refined = base;
    refined.push_back(vec({0.2, 0.3}));
    refined.push_back(vec({-0.5, -0.4}));
    refined.push_back(vec({0.6, 0.1}));
    ProductBoundReport a =
        product_bound_check(axes, {{0, 1}, {2, 3}}, f, base, {0.1, 0.2, 0.4}, 96, 1201);
    ProductBoundReport b = product_bound_check(axes, {{0, 1}, {2, 3}}, f, refined,
                                               {0.1, 0.2, 0.4}, 96, 1201);
    for (double v : b.composed)
      if (!(v > 0)) c.fail("euclidean composed maximal vanished");
    double drift = std::abs(b.fitted_c - a.fitted_c) / std::max(a.fitted_c, 1e-12);
    if (drift >= 0.20) c.fail("euclidean fitted C drift " + fmt(drift));
    c.note("euclidean C " + fmt(a.fitted_c) + " -> " + fmt(b.fitted_c));
  }
  {
    GradedSystem h2 = builtin("heisenberg-two-param");
    auto fh = [](const Eigen::VectorXd& y) {
      return (1 + y[0]) * (1 + y[0]) + y[1] * y[1] + y[2] * y[2];
    };
    std::vector<Eigen::VectorXd> base = {vec({0, 0, 0}), vec({0.1, 0.1, 0}),
                                         vec({-0.15, 0.05, 0.02})};
    std::vector<Eigen::VectorXd> refined = base;
    refined.push_back(vec({0.05, -0.1, -0.02}));
    refined.push_back(vec({-0.05, 0.15, 0.01}));
    refined.push_back(vec({0.12, 0.02, -0.01}));
    ProductBoundReport a = product_bound_check(h2, {{0, 1, 2}, {3, 4, 5}}, fh, base,
                                               {0.3, 0.2, 0.1}, 64, 1202);
    ProductBoundReport b = product_bound_check(h2, {{0, 1, 2}, {3, 4, 5}}, fh, refined,
                                               {0.3, 0.2, 0.1}, 64, 1202);
    for (double v : b.composed)
      if (!(v > 0)) c.fail("heisenberg composed maximal vanished");
    double drift = std::abs(b.fitted_c - a.fitted_c) / std::max(a.fitted_c, 1e-12);
    if (drift >= 0.20) c.fail("heisenberg fitted C drift " + fmt(drift));
    c.detail += "; heisenberg C " + fmt(a.fitted_c) + " -> " + fmt(b.fitted_c);
  }
  return c;
}

// ---------------------------------------------------------------------------
// 13. Generator comparison: Heisenberg generators against the generated list.

Criterion criterion_generators() {
  Criterion c;
  GradedSystem heis = builtin("heisenberg-left");
  GradedSystem gens(heis.n(), heis.nu(), heis.coords(), {heis.field(0), heis.field(1)},
                    heis.domain());
  GeneratorComparisonReport r = generator_comparison(
      heis, gens, vec({0, 0, 0}), {0.4, 0.2, 0.1, 0.05}, 3000, 1313);
  std::string etas;
  for (double e : r.eta_prime) etas += fmt(e) + " ";
  if (r.min_eta_prime < 0.1)
    c.fail("eta' dropped to " + fmt(r.min_eta_prime) + " (grid: " + etas + ")");
  double max_eta = *std::max_element(r.eta_prime.begin(), r.eta_prime.end());
  if (r.min_eta_prime < 0.4 * max_eta)
    c.fail("eta' not stable across the grid: " + etas);
  c.note("eta' grid: " + etas);
  return c;
}

// ---------------------------------------------------------------------------
// 14. CLI reproducibility: byte-identical reports modulo the timestamp.

std::string run_scrubbed(const std::string& args, const std::string& tag, int* code) {
  std::string path = "/tmp/ccgeom_acc_" + tag + ".json";
  std::string cmd = std::string(CC_GEOM_BIN) + " " + args + " --out " + path;
  int rc = std::system(cmd.c_str());
  *code = WEXITSTATUS(rc);
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\"") != std::string::npos) continue;
    out += line + "\n";
  }
  return out;
}

Criterion criterion_cli() {
  Criterion c;
  std::vector<std::pair<std::string, std::string>> cmds = {
      {"list", "list-builtins --seed 3"},
      {"chart", "chart --system builtin:heisenberg-left --point 0,0,0 --delta 0.1 --seed 3"},
      {"ode", "ode --system builtin:heisenberg-left --point 0,0,0 --delta 0.1 --seed 3"},
      {"volume", "volume --system builtin:heisenberg-left --point 0,0,0 --delta 0.1 --seed 3"},
      {"doubling", "doubling --system 'builtin:euclidean(2)' --point 0,0 --delta 0.1 --seed 3"},
      {"distance",
       "distance --system 'builtin:euclidean(2)' --point 0,0 --y 0.3,0.2 --seed 3"},
      {"membership",
       "membership --system builtin:heisenberg-left --point 0,0,0 --delta 0.2 --y "
       "0.05,0.05,0 --seed 3"},
      {"control",
       "control --system 'builtin:degree-line(1,1,0.4,0.4)' --delta 1,1 --delta "
       "0.01,0.01 --delta 0.0001,0.0001 --seed 3"},
      {"average",
       "average --system builtin:heisenberg-left --point 0,0,0 --delta 0.1 --function "
       "1+x*x --seed 3"},
      {"compose",
       "compose --system 'builtin:euclidean(2)' --family 0 --family 1 --point 0,0 "
       "--delta 0.2 --function 1+x1 --budget 400 --seed 3"},
      {"kernel",
       "kernel --system 'builtin:euclidean(2)' --family 0 --family 1 --point 0,0 "
       "--delta 0.2 --budget 600 --seed 3"},
      {"maxfn",
       "maxfn --system 'builtin:euclidean(2)' --point 0,0 --delta 0.1 --delta 0.2 "
       "--function 1+x1*x1 --seed 3"},
      {"intersect",
       "intersect --system builtin:heisenberg-two-param --family 0,1,2 --family 3,4,5 "
       "--point 0,0,0 --delta 0.2,0.2 --budget 256 --seed 3"},
      {"metric",
       "metric --system 'builtin:euclidean(2)' --family 0,1 --point 0,0 --y 0.2,0.1 "
       "--seed 3"},
      {"generators",
       "generators --generators builtin:heisenberg-left --point 0,0,0 --delta 0.2 "
       "--samples 300 --seed 3"},
  };
  for (const auto& [tag, args] : cmds) {
    int rc1 = 0, rc2 = 0;
    std::string a = run_scrubbed(args, tag + "_1", &rc1);
    std::string b = run_scrubbed(args, tag + "_2", &rc2);
    if (rc1 != 0 || rc2 != 0) {
      c.fail(tag + " exited with " + std::to_string(rc1) + "/" + std::to_string(rc2));
      continue;
    }
    if (a.empty() || a != b) c.fail(tag + " reports differ between reruns");
  }
  c.note(std::to_string(cmds.size()) + " subcommands byte-identical");
  return c;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Entry {
    int id;
    std::string name;
    std::function<Criterion()> run;
  };

  Criterion push, window;
  bool push_window_ran = false;
  auto ensure_push_window = [&]() {
    if (!push_window_ran) {
      pushforward_and_window(push, window);
      push_window_ran = true;
    }
  };

  std::vector<Entry> entries = {
      {1, "Cauchy-Binet identity", criterion_cauchy_binet},
      {2, "symbolic vs finite-difference derivatives", criterion_symbolic_fd},
      {3, "structure ODE Picard solve", criterion_structure_ode},
      {4, "pushforward identity dPhi(Y_j) = X_j",
       [&]() {
         ensure_push_window();
         return push;
       }},
      {5, "Jacobian determinant comparability window",
       [&]() {
         ensure_push_window();
         return window;
       }},
      {6, "volume scaling slopes", criterion_volume_slopes},
      {7, "doubling ratios and the counterexample", criterion_doubling},
      {8, "control verdicts", criterion_control},
      {9, "unit-operator sandwich", criterion_sandwich},
      {10, "kernel diagonal and support", criterion_kernel},
      {11, "intersection volume formula", criterion_intersection},
      {12, "maximal product bound", criterion_product_bound},
      {13, "generator-ball comparison", criterion_generators},
      {14, "CLI reproducibility", criterion_cli},
  };

  int failures = 0;
  for (auto& e : entries) {
    auto t0 = Clock::now();
    Criterion c;
    try {
      c = e.run();
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail = std::string("exception: ") + ex.what();
    }
    auto t1 = Clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    printf("%s criterion %2d: %s [%.1fs]%s%s\n", c.pass ? "PASS" : "FAIL", e.id,
           e.name.c_str(), secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    fflush(stdout);
    if (!c.pass) ++failures;
  }
  if (failures) printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
