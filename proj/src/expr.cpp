#include "ccgeom/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace ccgeom {

namespace {

bool is_const(const ExprPtr& e, double v) {
  return e->kind() == Expr::Kind::Constant && e->constant_value() == v;
}

}  // namespace

ExprPtr Expr::constant(double v) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Constant;
  e->value_ = v;
  return e;
}

ExprPtr Expr::variable(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Variable;
  e->name_ = std::move(name);
  return e;
}

ExprPtr Expr::negate(ExprPtr u) {
  if (u->kind() == Kind::Constant) return constant(-u->constant_value());
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Negate;
  e->children_ = {std::move(u)};
  return e;
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  if (a->kind() == Kind::Constant && b->kind() == Kind::Constant)
    return constant(a->constant_value() + b->constant_value());
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Add;
  e->children_ = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::sub(ExprPtr a, ExprPtr b) {
  if (is_const(b, 0)) return a;
  if (a->kind() == Kind::Constant && b->kind() == Kind::Constant)
    return constant(a->constant_value() - b->constant_value());
  if (is_const(a, 0)) return negate(std::move(b));
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Sub;
  e->children_ = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::mul(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0) || is_const(b, 0)) return constant(0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (a->kind() == Kind::Constant && b->kind() == Kind::Constant)
    return constant(a->constant_value() * b->constant_value());
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Mul;
  e->children_ = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::div(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0)) return constant(0);
  if (is_const(b, 1)) return a;
  if (a->kind() == Kind::Constant && b->kind() == Kind::Constant &&
      b->constant_value() != 0)
    return constant(a->constant_value() / b->constant_value());
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Div;
  e->children_ = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::pow(ExprPtr base, int k) {
  if (k == 0) return constant(1);
  if (k == 1) return base;
  if (base->kind() == Kind::Constant)
    return constant(std::pow(base->constant_value(), double(k)));
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Pow;
  e->exponent_ = k;
  e->children_ = {std::move(base)};
  return e;
}

ExprPtr Expr::call(const std::string& fn, ExprPtr arg) {
  auto e = std::make_shared<Expr>();
  e->kind_ = Kind::Call;
  e->name_ = fn;
  e->children_ = {std::move(arg)};
  return e;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent.
//   expr   := term { ('+'|'-') term }
//   term   := unary { ('*'|'/') unary }
//   unary  := '-' unary | power
//   power  := atom [ '^' unary ]           (right-associative)
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
// The exponent subtree must fold to an integer constant; fractional powers
// are rejected here so differentiation stays total.
// ---------------------------------------------------------------------------

namespace {

class Parser {
public:
  explicit Parser(std::string_view s) : s_(s) {}

  ExprPtr run() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  std::string_view s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr parse_expr() {
    auto e = parse_term();
    for (;;) {
      if (eat('+'))
        e = Expr::add(e, parse_term());
      else if (eat('-'))
        e = Expr::sub(e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    auto e = parse_unary();
    for (;;) {
      if (eat('*'))
        e = Expr::mul(e, parse_unary());
      else if (eat('/'))
        e = Expr::div(e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    if (eat('-')) return Expr::negate(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    auto base = parse_atom();
    if (!eat('^')) return base;
    size_t at = pos_;
    auto expo = parse_unary();
    if (expo->kind() != Expr::Kind::Constant)
      throw ParseError("exponent must fold to an integer constant", at);
    double v = expo->constant_value();
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw ParseError("fractional exponents are not supported", at);
    return Expr::pow(base, static_cast<int>(v));
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      if (!eat(')')) fail("unbalanced parentheses");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const char* begin = s_.data() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("invalid number literal");
    pos_ += static_cast<size_t>(end - begin);
    return Expr::constant(v);
  }

  ExprPtr parse_name() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    if (peek() == '(') {
      if (name != "sin" && name != "cos" && name != "exp") {
        pos_ = start;
        fail("unknown function '" + name + "'");
      }
      eat('(');
      auto arg = parse_expr();
      if (!eat(')')) fail("unbalanced parentheses");
      return Expr::call(name, arg);
    }
    return Expr::variable(std::move(name));
  }
};

}  // namespace

ExprPtr parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty expression", 0);
  return Parser(text).run();
}

// ---------------------------------------------------------------------------

double evaluate(const ExprPtr& e, const std::map<std::string, double>& point) {
  switch (e->kind()) {
    case Expr::Kind::Constant:
      return e->constant_value();
    case Expr::Kind::Variable: {
      auto it = point.find(e->name());
      if (it == point.end())
        throw std::runtime_error("unbound variable '" + e->name() + "'");
      return it->second;
    }
    case Expr::Kind::Negate:
      return -evaluate(e->child(0), point);
    case Expr::Kind::Add:
      return evaluate(e->child(0), point) + evaluate(e->child(1), point);
    case Expr::Kind::Sub:
      return evaluate(e->child(0), point) - evaluate(e->child(1), point);
    case Expr::Kind::Mul:
      return evaluate(e->child(0), point) * evaluate(e->child(1), point);
    case Expr::Kind::Div:
      return evaluate(e->child(0), point) / evaluate(e->child(1), point);
    case Expr::Kind::Pow:
      return std::pow(evaluate(e->child(0), point), double(e->exponent()));
    case Expr::Kind::Call: {
      double a = evaluate(e->child(0), point);
      if (e->name() == "sin") return std::sin(a);
      if (e->name() == "cos") return std::cos(a);
      return std::exp(a);
    }
  }
  return 0;  // unreachable
}

ExprPtr differentiate(const ExprPtr& e, const std::string& var) {
  switch (e->kind()) {
    case Expr::Kind::Constant:
      return Expr::constant(0);
    case Expr::Kind::Variable:
      return Expr::constant(e->name() == var ? 1 : 0);
    case Expr::Kind::Negate:
      return Expr::negate(differentiate(e->child(0), var));
    case Expr::Kind::Add:
      return Expr::add(differentiate(e->child(0), var), differentiate(e->child(1), var));
    case Expr::Kind::Sub:
      return Expr::sub(differentiate(e->child(0), var), differentiate(e->child(1), var));
    case Expr::Kind::Mul: {
      const auto& u = e->child(0);
      const auto& v = e->child(1);
      return Expr::add(Expr::mul(differentiate(u, var), v),
                       Expr::mul(u, differentiate(v, var)));
    }
    case Expr::Kind::Div: {
      const auto& u = e->child(0);
      const auto& v = e->child(1);
      auto num = Expr::sub(Expr::mul(differentiate(u, var), v),
                           Expr::mul(u, differentiate(v, var)));
      return Expr::div(num, Expr::pow(v, 2));
    }
    case Expr::Kind::Pow: {
      const auto& u = e->child(0);
      int k = e->exponent();
      return Expr::mul(Expr::mul(Expr::constant(k), Expr::pow(u, k - 1)),
                       differentiate(u, var));
    }
    case Expr::Kind::Call: {
      const auto& u = e->child(0);
      auto du = differentiate(u, var);
      if (e->name() == "sin") return Expr::mul(Expr::call("cos", u), du);
      if (e->name() == "cos") return Expr::negate(Expr::mul(Expr::call("sin", u), du));
      return Expr::mul(Expr::call("exp", u), du);
    }
  }
  return Expr::constant(0);  // unreachable
}

std::string to_string(const ExprPtr& e) {
  switch (e->kind()) {
    case Expr::Kind::Constant: {
      char buf[32];
      snprintf(buf, sizeof buf, "%.17g", e->constant_value());
      std::string s(buf);
      if (s[0] == '-') return "(" + s + ")";
      return s;
    }
    case Expr::Kind::Variable:
      return e->name();
    case Expr::Kind::Negate:
      return "(-" + to_string(e->child(0)) + ")";
    case Expr::Kind::Add:
      return "(" + to_string(e->child(0)) + "+" + to_string(e->child(1)) + ")";
    case Expr::Kind::Sub:
      return "(" + to_string(e->child(0)) + "-" + to_string(e->child(1)) + ")";
    case Expr::Kind::Mul:
      return "(" + to_string(e->child(0)) + "*" + to_string(e->child(1)) + ")";
    case Expr::Kind::Div:
      return "(" + to_string(e->child(0)) + "/" + to_string(e->child(1)) + ")";
    case Expr::Kind::Pow:
      return "(" + to_string(e->child(0)) + "^" + (e->exponent() < 0 ? "(" : "") +
             std::to_string(e->exponent()) + (e->exponent() < 0 ? ")" : "") + ")";
    case Expr::Kind::Call:
      return e->name() + "(" + to_string(e->child(0)) + ")";
  }
  return "";
}

void collect_variables(const ExprPtr& e, std::set<std::string>& out) {
  if (e->kind() == Expr::Kind::Variable) out.insert(e->name());
  for (int i = 0; i < e->child_count(); ++i) collect_variables(e->child(i), out);
}

// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const ExprPtr& e, const std::vector<std::string>& coords) {
  if (is_const(e, 0)) return;  // empty program means identically zero
  struct Walk {
    const std::vector<std::string>& coords;
    std::vector<Instr>& ops;
    void go(const ExprPtr& n) {
      switch (n->kind()) {
        case Expr::Kind::Constant:
          ops.push_back({Op::Const, 0, n->constant_value()});
          break;
        case Expr::Kind::Variable: {
          int slot = -1;
          for (size_t i = 0; i < coords.size(); ++i)
            if (coords[i] == n->name()) slot = static_cast<int>(i);
          if (slot < 0)
            throw std::runtime_error("variable '" + n->name() +
                                     "' is not a system coordinate");
          ops.push_back({Op::Var, slot, 0});
          break;
        }
        case Expr::Kind::Negate:
          go(n->child(0));
          ops.push_back({Op::Neg, 0, 0});
          break;
        case Expr::Kind::Add:
          go(n->child(0));
          go(n->child(1));
          ops.push_back({Op::Add, 0, 0});
          break;
        case Expr::Kind::Sub:
          go(n->child(0));
          go(n->child(1));
          ops.push_back({Op::Sub, 0, 0});
          break;
        case Expr::Kind::Mul:
          go(n->child(0));
          go(n->child(1));
          ops.push_back({Op::Mul, 0, 0});
          break;
        case Expr::Kind::Div:
          go(n->child(0));
          go(n->child(1));
          ops.push_back({Op::Div, 0, 0});
          break;
        case Expr::Kind::Pow:
          go(n->child(0));
          ops.push_back({Op::Pow, n->exponent(), 0});
          break;
        case Expr::Kind::Call:
          go(n->child(0));
          if (n->name() == "sin")
            ops.push_back({Op::Sin, 0, 0});
          else if (n->name() == "cos")
            ops.push_back({Op::Cos, 0, 0});
          else
            ops.push_back({Op::Exp, 0, 0});
          break;
      }
    }
  };
  Walk w{coords, ops_};
  w.go(e);
}

double CompiledExpr::eval(std::span<const double> vars) const {
  if (ops_.empty()) return 0.0;
  double stack[64];
  int top = -1;
  for (const auto& in : ops_) {
    switch (in.op) {
      case Op::Const:
        stack[++top] = in.c;
        break;
      case Op::Var:
        stack[++top] = vars[in.arg];
        break;
      case Op::Neg:
        stack[top] = -stack[top];
        break;
      case Op::Add:
        --top;
        stack[top] += stack[top + 1];
        break;
      case Op::Sub:
        --top;
        stack[top] -= stack[top + 1];
        break;
      case Op::Mul:
        --top;
        stack[top] *= stack[top + 1];
        break;
      case Op::Div:
        --top;
        stack[top] /= stack[top + 1];
        break;
      case Op::Pow:
        stack[top] = std::pow(stack[top], double(in.arg));
        break;
      case Op::Sin:
        stack[top] = std::sin(stack[top]);
        break;
      case Op::Cos:
        stack[top] = std::cos(stack[top]);
        break;
      case Op::Exp:
        stack[top] = std::exp(stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace ccgeom
