#include "ccgeom/examples.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ccgeom {

namespace {

GradedVectorField make_field(const std::vector<std::string>& coeffs,
                             const std::vector<double>& degree) {
  GradedVectorField f;
  for (const auto& c : coeffs) f.coefficients.push_back(parse(c));
  f.degree.components =
      Eigen::Map<const Eigen::VectorXd>(degree.data(), degree.size());
  return f;
}

Box box(int n, double half) {
  Box b;
  b.min = Eigen::VectorXd::Constant(n, -half);
  b.max = Eigen::VectorXd::Constant(n, half);
  return b;
}

std::vector<std::vector<std::vector<ExprPtr>>> zero_structure(int q) {
  auto zero = Expr::constant(0);
  return std::vector<std::vector<std::vector<ExprPtr>>>(
      q, std::vector<std::vector<ExprPtr>>(q, std::vector<ExprPtr>(q, zero)));
}

GradedSystem euclidean(int n) {
  std::vector<std::string> coords;
  std::vector<GradedVectorField> fields;
  for (int i = 0; i < n; ++i) coords.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> c(n, "0");
    c[i] = "1";
    fields.push_back(make_field(c, {1.0}));
  }
  return GradedSystem(n, 1, coords, fields, box(n, 2.0));
}

GradedSystem heisenberg_left() {
  std::vector<GradedVectorField> fields = {
      make_field({"1", "0", "2*y"}, {1.0}),    // X_L
      make_field({"0", "1", "-2*x"}, {1.0}),   // Y_L
      make_field({"0", "0", "1"}, {2.0}),      // T
  };
  auto c = zero_structure(3);
  c[0][1][2] = Expr::constant(-4);  // [X_L, Y_L] = -4 T
  c[1][0][2] = Expr::constant(4);
  return GradedSystem(3, 1, {"x", "y", "t"}, fields, box(3, 2.0), c);
}

GradedSystem heisenberg_two_param() {
  std::vector<GradedVectorField> fields = {
      make_field({"1", "0", "2*y"}, {1.0, 0.0}),    // X_L
      make_field({"0", "1", "-2*x"}, {1.0, 0.0}),   // Y_L
      make_field({"0", "0", "1"}, {2.0, 0.0}),      // T
      make_field({"1", "0", "-2*y"}, {0.0, 1.0}),   // X_R
      make_field({"0", "1", "2*x"}, {0.0, 1.0}),    // Y_R
      make_field({"0", "0", "1"}, {0.0, 2.0}),      // T
  };
  auto c = zero_structure(6);
  c[0][1][2] = Expr::constant(-4);  // [X_L, Y_L] = -4 T
  c[1][0][2] = Expr::constant(4);
  c[3][4][2] = Expr::constant(4);   // [X_R, Y_R] = +4 T
  c[4][3][2] = Expr::constant(-4);
  return GradedSystem(3, 2, {"x", "y", "t"}, fields, box(3, 2.0), c);
}

GradedSystem grushin() {
  std::vector<GradedVectorField> fields = {
      make_field({"1", "0"}, {1.0}),
      make_field({"0", "x"}, {1.0}),
      make_field({"0", "1"}, {2.0}),
  };
  auto c = zero_structure(3);
  c[0][1][2] = Expr::constant(1);  // [d_x, x d_y] = d_y
  c[1][0][2] = Expr::constant(-1);
  return GradedSystem(2, 1, {"x", "y"}, fields, box(2, 2.0), c);
}

GradedSystem r4_cos_sin() {
  std::vector<GradedVectorField> fields = {
      make_field({"1", "cos(s)", "0", "0"}, {1, 0}),
      make_field({"0", "0", "1", "cos(x)"}, {0, 1}),
      make_field({"0", "sin(s)", "0", "-sin(x)"}, {1, 1}),
      make_field({"0", "0", "0", "cos(x)"}, {2, 1}),
      make_field({"0", "cos(s)", "0", "0"}, {1, 2}),
      make_field({"0", "0", "0", "sin(x)"}, {3, 1}),
      make_field({"0", "sin(s)", "0", "0"}, {1, 3}),
  };
  return GradedSystem(4, 2, {"x", "y", "s", "t"}, fields, box(4, 2.0));
}

GradedSystem weakly_comparable_counterexample() {
  std::vector<GradedVectorField> fields = {
      make_field({"1", "0"}, {1, 0, 0}),
      make_field({"0", "exp(-1/(x*x))"}, {0, 1, 0}),
      make_field({"0", "1"}, {0, 0, 1}),
  };
  return GradedSystem(2, 3, {"x", "y"}, fields, box(2, 2.0));
}

GradedSystem control_line() {
  // candidate (x d_x, 1.5) listed last
  std::vector<GradedVectorField> fields = {
      make_field({"1"}, {2.0}),
      make_field({"x^2"}, {1.0}),
      make_field({"x"}, {1.5}),
  };
  return GradedSystem(1, 1, {"x"}, fields, box(1, 1.0));
}

GradedSystem degree_line(double a, double b, double c, double d) {
  std::vector<GradedVectorField> fields = {
      make_field({"1"}, {a, 0.0}),
      make_field({"1"}, {0.0, b}),
      make_field({"1"}, {c, d}),  // candidate listed last
  };
  return GradedSystem(1, 2, {"x"}, fields, box(1, 1.0));
}

std::vector<double> parse_args(const std::string& name, const std::string& inner,
                               size_t expect) {
  std::vector<double> vals;
  std::stringstream ss(inner);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.size() != expect)
    throw std::invalid_argument("builtin '" + name + "' expects " +
                                std::to_string(expect) + " argument(s)");
  return vals;
}

}  // namespace

std::vector<ExampleInfo> list_builtins() {
  return {
      {"euclidean(n)", "commuting coordinate fields, degree 1 each"},
      {"heisenberg-left", "left-invariant Heisenberg list (X_L,1),(Y_L,1),(T,2)"},
      {"heisenberg-two-param",
       "left and right Heisenberg lists with two-parameter degrees"},
      {"grushin", "(d_x,1),(x d_y,1),(d_y,2): rank drop along x = 0"},
      {"r4-cos-sin", "seven-field two-parameter list on R^4 with cos/sin coefficients"},
      {"weakly-comparable-counterexample",
       "(d_x,(1,0,0)),(e^{-1/x^2} d_y,(0,1,0)),(d_y,(0,0,1)): doubling fails"},
      {"control-line", "(d_x,2),(x^2 d_x,1) with candidate (x d_x,1.5)"},
      {"degree-line(a,b,c,d)",
       "(d_x,(a,0)),(d_x,(0,b)) with candidate (d_x,(c,d))"},
  };
}

GradedSystem builtin(const std::string& name) {
  std::string base = name;
  std::string inner;
  auto lp = name.find('(');
  if (lp != std::string::npos) {
    if (name.back() != ')')
      throw std::invalid_argument("malformed builtin name: " + name);
    base = name.substr(0, lp);
    inner = name.substr(lp + 1, name.size() - lp - 2);
  }
  if (base == "euclidean") {
    auto a = parse_args(base, inner, 1);
    int n = static_cast<int>(a[0]);
    if (n < 1 || n > 6) throw std::invalid_argument("euclidean(n) needs 1 <= n <= 6");
    return euclidean(n);
  }
  if (base == "heisenberg-left") return heisenberg_left();
  if (base == "heisenberg-two-param") return heisenberg_two_param();
  if (base == "grushin") return grushin();
  if (base == "r4-cos-sin") return r4_cos_sin();
  if (base == "weakly-comparable-counterexample") return weakly_comparable_counterexample();
  if (base == "control-line") return control_line();
  if (base == "degree-line") {
    auto a = parse_args(base, inner, 4);
    return degree_line(a[0], a[1], a[2], a[3]);
  }
  throw std::invalid_argument("unknown builtin system: " + name);
}

}  // namespace ccgeom
