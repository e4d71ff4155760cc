// cc-geom: command-line front end for the Carnot-Caratheodory geometry library.
// Loads a system (builtin catalog or JSON file), runs one computation, and
// writes a machine-readable report. Exit codes: 0 success, 1 computation
// error (the error is serialized into the report), 2 usage error.

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ccgeom/balls.hpp"
#include "ccgeom/control.hpp"
#include "ccgeom/examples.hpp"
#include "ccgeom/operators.hpp"
#include "ccgeom/parallel.hpp"
#include "ccgeom/report.hpp"

using namespace ccgeom;
using nlohmann::json;

namespace {

Eigen::VectorXd parse_components(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

std::vector<int> parse_indices(const std::string& s) {
  std::vector<int> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stoi(tok));
  return vals;
}

GradedSystem load_system(const std::string& source) {
  if (source.rfind("builtin:", 0) == 0) return builtin(source.substr(8));
  return load_system_file(source);
}

struct Options {
  std::string system;
  std::string generators;
  std::vector<std::string> points;
  std::vector<std::string> deltas;
  std::vector<std::string> families;
  std::string y;
  std::string direction;
  std::string function = "1";
  std::string out = "-";
  std::string csv;
  uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  int budget = 4096;
  int bins = 9;
  int samples = 4096;
  int extra = -1;
  int order = 3;
  double eta = 0.0;
  double tol = 1e-3;
  double cube = 0.4;
};

ScalarFn make_function(const GradedSystem& sys, const std::string& text) {
  ExprPtr e = parse(text);
  auto compiled = std::make_shared<CompiledExpr>(e, sys.coords());
  return [compiled](const Eigen::VectorXd& y) {
    return compiled->eval(std::span<const double>(y.data(), y.size()));
  };
}

MultiRadius delta_for(const GradedSystem& sys, const std::string& text) {
  MultiRadius d;
  d.delta = parse_components(text);
  if (d.delta.size() == 1 && sys.nu() > 1)
    d.delta = Eigen::VectorXd::Constant(sys.nu(), d.delta[0]);
  if (d.delta.size() != sys.nu())
    throw std::invalid_argument("--delta needs " + std::to_string(sys.nu()) +
                                " components");
  return d;
}

Eigen::VectorXd point_for(const GradedSystem& sys, const std::string& text) {
  Eigen::VectorXd x = parse_components(text);
  if (x.size() != sys.n())
    throw std::invalid_argument("--point needs " + std::to_string(sys.n()) +
                                " components");
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cc-geom: multi-parameter Carnot-Caratheodory geometry toolkit"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub, bool needs_system = true) {
    if (needs_system)
      sub->add_option("--system", opt.system,
                      "system source: builtin:<name> or a JSON file path")
          ->required();
    sub->add_option("--point", opt.points,
                    "point, comma-separated components (repeatable)");
    sub->add_option("--delta", opt.deltas,
                    "radius, comma-separated components (repeatable)");
    sub->add_option("--seed", opt.seed, "random seed (drawn and echoed if absent)")
        ->each([&](const std::string&) { opt.seed_given = true; });
    sub->add_option("--threads", opt.threads, "cap on internal parallelism");
    sub->add_option("--out", opt.out, "report path, '-' or 'json' for stdout");
    sub->add_option("--csv", opt.csv, "optional CSV output path (grids/histograms)");
  };

  CLI::App* c_list = app.add_subcommand("list-builtins", "print the example catalog");
  add_common(c_list, false);

  CLI::App* c_chart = app.add_subcommand("chart", "build and verify a scaling chart");
  add_common(c_chart);
  c_chart->add_option("--eta", opt.eta, "fixed chart radius (0 = adaptive)");

  CLI::App* c_ode = app.add_subcommand("ode", "solve the structure ODE on a chart");
  add_common(c_ode);
  c_ode->add_option("--tol", opt.tol, "Picard stopping tolerance");

  CLI::App* c_vol = app.add_subcommand("volume", "chart-based ball volume");
  add_common(c_vol);

  CLI::App* c_dbl = app.add_subcommand("doubling", "volume ratio at delta vs 2 delta");
  add_common(c_dbl);

  CLI::App* c_dist = app.add_subcommand("distance", "Carnot-Caratheodory distance");
  add_common(c_dist);
  c_dist->add_option("--y", opt.y, "target point")->required();
  c_dist->add_option("--direction", opt.direction, "radius direction (max component 1)");
  c_dist->add_option("--tol", opt.tol, "bisection tolerance");

  CLI::App* c_mem = app.add_subcommand("membership", "tri-valued ball membership");
  add_common(c_mem);
  c_mem->add_option("--y", opt.y, "query point")->required();

  CLI::App* c_ctl =
      app.add_subcommand("control", "control verdict for a candidate field");
  add_common(c_ctl);
  c_ctl->add_option("--extra", opt.extra,
                    "candidate field index (default: last field of the system)");

  CLI::App* c_avg = app.add_subcommand("average", "ball average of a function");
  add_common(c_avg);
  c_avg->add_option("--function", opt.function, "integrand expression");

  CLI::App* c_cmp = app.add_subcommand("compose", "composed cube average over families");
  add_common(c_cmp);
  c_cmp->add_option("--function", opt.function, "integrand expression");
  c_cmp->add_option("--family", opt.families, "field indices per family (repeatable)");
  c_cmp->add_option("--budget", opt.budget, "Monte Carlo budget");
  c_cmp->add_option("--cube", opt.cube, "cube radius for the coefficient blocks");

  CLI::App* c_ker = app.add_subcommand("kernel", "composed-operator kernel histogram");
  add_common(c_ker);
  c_ker->add_option("--family", opt.families, "field indices per family (repeatable)");
  c_ker->add_option("--budget", opt.budget, "Monte Carlo budget");
  c_ker->add_option("--bins", opt.bins, "histogram bins per chart dimension");

  CLI::App* c_max = app.add_subcommand("maxfn", "maximal function over a radius set");
  add_common(c_max);
  c_max->add_option("--function", opt.function, "integrand expression");

  CLI::App* c_int =
      app.add_subcommand("intersect", "intersection volume of two family balls");
  add_common(c_int);
  c_int->add_option("--family", opt.families, "field indices per family (exactly two)");
  c_int->add_option("--budget", opt.budget, "Monte Carlo budget");

  CLI::App* c_met = app.add_subcommand("metric", "composed-metric comparison");
  add_common(c_met);
  c_met->add_option("--family", opt.families, "field indices per family (repeatable)");
  c_met->add_option("--y", opt.y, "target point")->required();
  c_met->add_option("--direction", opt.direction, "radius direction (max component 1)");
  c_met->add_option("--tol", opt.tol, "bisection tolerance");

  CLI::App* c_gen = app.add_subcommand("generators", "generator-ball comparison");
  add_common(c_gen, false);
  c_gen->add_option("--system", opt.system,
                    "generated system (default: bracket closure of the generators)");
  c_gen->add_option("--generators", opt.generators, "generator system source")
      ->required();
  c_gen->add_option("--samples", opt.samples, "cloud size per radius");
  c_gen->add_option("--order", opt.order, "bracket order when generating the system");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  thread_cap() = opt.threads;
  if (!opt.seed_given) {
    std::random_device rd;
    opt.seed = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  json rep = report_envelope(sub);
  rep["seed"] = opt.seed;
  rep["threads"] = opt.threads;
  json inputs;
  if (!opt.system.empty()) inputs["system"] = opt.system;
  if (!opt.generators.empty()) inputs["generators"] = opt.generators;
  if (!opt.points.empty()) inputs["point"] = opt.points;
  if (!opt.deltas.empty()) inputs["delta"] = opt.deltas;
  if (!opt.y.empty()) inputs["y"] = opt.y;
  if (!opt.families.empty()) inputs["family"] = opt.families;
  inputs["function"] = opt.function;
  rep["inputs"] = inputs;

  try {
    if (sub == "list-builtins") {
      json out = json::array();
      for (const auto& e : list_builtins())
        out.push_back({{"name", e.name}, {"summary", e.summary}});
      rep["results"] = out;
      write_report(rep, opt.out);
      return 0;
    }

    GradedSystem sys = load_system(sub == "generators" && opt.system.empty()
                                       ? opt.generators
                                       : opt.system);
    ChartCache cache;

    auto first_point = [&]() {
      if (opt.points.empty())
        return Eigen::VectorXd((sys.domain().min + sys.domain().max) / 2.0);
      return point_for(sys, opt.points.front());
    };
    auto first_delta = [&]() {
      if (opt.deltas.empty()) return delta_for(sys, "0.1");
      return delta_for(sys, opt.deltas.front());
    };
    auto family_lists = [&]() {
      std::vector<std::vector<int>> fams;
      for (const auto& f : opt.families) fams.push_back(parse_indices(f));
      return fams;
    };

    if (sub == "chart" || sub == "ode") {
      ChartConfig ccfg;
      if (opt.eta > 0) ccfg.eta_request = opt.eta;
      ChartPtr chart = build_chart(sys, first_point(), first_delta(), ccfg);
      json res;
      res["chart"] = chart->diagnostics_json();
      if (sub == "ode") {
        StructureOdeSolution sol =
            solve_structure_ode(chart, default_ctilde(chart), {}, 1e-10, 60);
        json ode;
        ode["eta_ode"] = sol.eta_ode;
        ode["measured_d"] = sol.measured_d;
        ode["kappa"] = sol.kappa;
        ode["iterations"] = sol.iterations;
        ode["final_residual"] = sol.final_residual;
        ode["update_norms"] = sol.update_norms;
        ode["update_ratios"] = sol.update_ratios;
        ode["sup_a"] = sol.sup_a;
        ode["fitted_slope"] = sol.fitted_slope;
        ode["frame_discrepancy"] = ode_frame_discrepancy(chart, sol);
        res["ode"] = ode;
      }
      rep["results"] = res;
    } else if (sub == "volume") {
      QuadratureSpec quad;
      quad.seed = opt.seed;
      BallReport r = ball_volume(sys, first_point(), first_delta(), quad, {}, &cache);
      rep["results"] = ball_report_to_json(r);
    } else if (sub == "doubling") {
      QuadratureSpec quad;
      quad.seed = opt.seed;
      DoublingReport r =
          doubling_ratio(sys, first_point(), first_delta(), quad, opt.seed, &cache);
      rep["results"] = doubling_report_to_json(r);
      if (!opt.csv.empty()) {
        // one row per endpoint of the reachable cloud at delta
        ReachableCloud cloud =
            sample_reachable(sys, first_point(), first_delta(), 2048, 32, opt.seed);
        write_cloud_csv(cloud, sys.coords(), opt.csv);
      }
    } else if (sub == "distance") {
      MultiRadius dir;
      dir.delta = opt.direction.empty() ? Eigen::VectorXd::Ones(sys.nu())
                                        : parse_components(opt.direction);
      MembershipConfig mcfg;
      mcfg.cache = &cache;
      DistanceResult r =
          cc_distance(sys, first_point(), point_for(sys, opt.y), dir, opt.tol, mcfg);
      rep["results"] = distance_result_to_json(r);
      rep["tolerances"] = {{"bisection", opt.tol}};
    } else if (sub == "membership") {
      MembershipConfig mcfg;
      mcfg.cache = &cache;
      MembershipReport r =
          ball_membership(sys, first_point(), first_delta(), point_for(sys, opt.y), mcfg);
      json res;
      res["verdict"] = r.verdict == Membership::In
                           ? "IN"
                           : (r.verdict == Membership::Out ? "OUT" : "UNCERTAIN");
      res["eta"] = r.eta;
      res["u_norm"] = r.invert.u_norm;
      res["in_plane_residual"] = r.invert.in_plane_residual;
      res["off_leaf_residual"] = r.invert.off_leaf_residual;
      rep["results"] = res;
    } else if (sub == "control") {
      int extra_idx = opt.extra >= 0 ? opt.extra : sys.q() - 1;
      std::vector<int> base_idx;
      for (int j = 0; j < sys.q(); ++j)
        if (j != extra_idx) base_idx.push_back(j);
      GradedSystem base = subsystem(sys, base_idx);
      std::vector<Eigen::VectorXd> xs;
      for (const auto& p : opt.points) xs.push_back(point_for(base, p));
      if (xs.empty()) xs.push_back((base.domain().min + base.domain().max) / 2.0);
      std::vector<MultiRadius> ds;
      for (const auto& d : opt.deltas) ds.push_back(delta_for(base, d));
      if (ds.empty())
        for (int k = 0; k <= 6; ++k) {
          MultiRadius d;
          d.delta = Eigen::VectorXd::Constant(base.nu(), std::pow(10.0, -k));
          ds.push_back(d);
        }
      ControlConfig ccfg;
      ccfg.seed = opt.seed;
      ControlReport r = check_control(base, sys.field(extra_idx), xs, ds, ccfg);
      rep["results"] = control_report_to_json(r);
      if (!opt.csv.empty()) write_control_csv(r, opt.csv);
    } else if (sub == "average") {
      AverageConfig acfg;
      acfg.cache = &cache;
      acfg.quad.seed = opt.seed;
      double a = ball_average(sys, first_point(), first_delta(),
                              make_function(sys, opt.function), acfg);
      rep["results"] = {{"average", a}};
    } else if (sub == "compose") {
      ComposeResult r = compose_averages(sys, family_lists(), first_delta(),
                                         first_point(), make_function(sys, opt.function),
                                         opt.budget, opt.seed, opt.cube);
      rep["results"] = compose_to_json(r);
    } else if (sub == "kernel") {
      KernelEstimate k = kernel_estimate(sys, family_lists(), first_delta(),
                                         first_point(), opt.bins, opt.budget, opt.seed,
                                         &cache);
      rep["results"] = kernel_to_json(k);
      if (!opt.csv.empty()) write_kernel_csv(k, opt.csv);
    } else if (sub == "maxfn") {
      AverageConfig acfg;
      acfg.cache = &cache;
      acfg.quad.seed = opt.seed;
      std::vector<Eigen::VectorXd> xs;
      for (const auto& p : opt.points) xs.push_back(point_for(sys, p));
      if (xs.empty()) xs.push_back((sys.domain().min + sys.domain().max) / 2.0);
      std::vector<MultiRadius> ds;
      for (const auto& d : opt.deltas) ds.push_back(delta_for(sys, d));
      if (ds.empty()) ds.push_back(delta_for(sys, "0.1"));
      MaximalResult m =
          maximal_function(sys, make_function(sys, opt.function), xs, ds, acfg);
      rep["results"] = {{"values", m.values}, {"skipped", m.skipped}};
      if (!opt.csv.empty()) {
        std::ofstream out(opt.csv);
        out << "point_index,value\n";
        out.precision(17);
        for (size_t i = 0; i < m.values.size(); ++i)
          out << i << ',' << m.values[i] << '\n';
      }
    } else if (sub == "intersect") {
      auto fams = family_lists();
      if (fams.size() != 2)
        throw std::invalid_argument("intersect needs exactly two --family lists");
      IntersectionReport r = intersection_volume(
          sys, fams[0], fams[1], first_point(), first_delta(), opt.budget, opt.seed,
          &cache);
      rep["results"] = intersection_to_json(r);
    } else if (sub == "metric") {
      MultiRadius dir;
      dir.delta = opt.direction.empty() ? Eigen::VectorXd::Ones(sys.nu())
                                        : parse_components(opt.direction);
      MetricCompositionReport r = metric_composition_check(
          sys, family_lists(), first_point(), point_for(sys, opt.y), dir, opt.tol, 12,
          opt.seed, &cache);
      rep["results"] = metric_to_json(r);
    } else if (sub == "generators") {
      GradedSystem gens = load_system(opt.generators);
      GradedSystem generated =
          opt.system.empty() ? bracket_closure(gens, opt.order) : sys;
      std::vector<double> ds;
      for (const auto& d : opt.deltas) ds.push_back(std::stod(d));
      if (ds.empty()) ds = {0.4, 0.2, 0.1};
      GeneratorComparisonReport r = generator_comparison(generated, gens, first_point(),
                                                         ds, opt.samples, opt.seed);
      rep["results"] = generator_report_to_json(r);
    }
  } catch (const std::exception& e) {
    rep["error"] = e.what();
    write_report(rep, opt.out);
    return 1;
  }

  write_report(rep, opt.out);
  return 0;
}
