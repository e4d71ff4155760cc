#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccgeom {

// Small arithmetic expression language for vector-field coefficients.
// Grammar: + - * / ^ (integer exponents only), unary minus, sin/cos/exp,
// parentheses, named variables, decimal literals. Nodes are immutable and
// shared; safe for concurrent reads.

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
public:
  enum class Kind { Constant, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

  Kind kind() const { return kind_; }
  double constant_value() const { return value_; }
  const std::string& name() const { return name_; }  // variable or function name
  int exponent() const { return exponent_; }
  const ExprPtr& child(int i) const { return children_[i]; }
  int child_count() const { return static_cast<int>(children_.size()); }

  static ExprPtr constant(double v);
  static ExprPtr variable(std::string name);
  static ExprPtr negate(ExprPtr u);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
  static ExprPtr mul(ExprPtr a, ExprPtr b);
  static ExprPtr div(ExprPtr a, ExprPtr b);
  static ExprPtr pow(ExprPtr base, int k);
  static ExprPtr call(const std::string& fn, ExprPtr arg);

private:
  Kind kind_;
  double value_ = 0.0;
  int exponent_ = 0;
  std::string name_;
  std::vector<ExprPtr> children_;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  size_t offset() const { return offset_; }

private:
  size_t offset_;
};

ExprPtr parse(std::string_view text);

double evaluate(const ExprPtr& e, const std::map<std::string, double>& point);

// Exact symbolic partial derivative with trivial constant folding.
ExprPtr differentiate(const ExprPtr& e, const std::string& var);

std::string to_string(const ExprPtr& e);

void collect_variables(const ExprPtr& e, std::set<std::string>& out);

// Postfix program over positional coordinate slots, for fast evaluation in
// inner loops. Unbound variables are rejected at compile time.
class CompiledExpr {
public:
  CompiledExpr() = default;
  CompiledExpr(const ExprPtr& e, const std::vector<std::string>& coords);

  double eval(std::span<const double> vars) const;
  bool is_zero() const { return ops_.empty(); }  // compiled from constant 0

private:
  enum class Op : uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };
  struct Instr {
    Op op;
    int arg = 0;  // variable slot or integer exponent
    double c = 0.0;
  };
  std::vector<Instr> ops_;
};

}  // namespace ccgeom
