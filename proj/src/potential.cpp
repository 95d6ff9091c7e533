#include "graphnls/potential.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace graphnls {

namespace {

using Kind = PotentialExpr::Kind;
using Node = PotentialExpr::Node;
using NodePtr = PotentialExpr::NodePtr;

NodePtr make(Kind k, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

// expr   := term (('+' | '-') term)*
// term   := unary (('*' | '/') unary)*
// unary  := ('-' | '+') unary | power
// power  := primary ('^' unary)?
// primary:= number | 'x' | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(pos_, "empty expression");
    NodePtr root = expr();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(pos_, std::string("unexpected '") + src_[pos_] + "'");
    return root;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, {lhs, term()});
      else if (accept('-')) lhs = make(Kind::Sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, {lhs, unary()});
      else if (accept('/')) lhs = make(Kind::Div, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Negate, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError(pos_, "unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!accept(')')) throw ParseError(pos_, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }

  NodePtr literal() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) digits();
      else pos_ = save;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError(start, "malformed number");
    return number(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return make(Kind::Variable);
    static constexpr Func funcs[] = {Func::Exp, Func::Sin, Func::Cos, Func::Sech, Func::Sqrt, Func::Abs};
    for (Func f : funcs) {
      if (name != func_name(f)) continue;
      if (!accept('(')) throw ParseError(pos_, "expected '(' after function '" + std::string(name) + "'");
      NodePtr arg = expr();
      if (!accept(')')) throw ParseError(pos_, "expected ')'");
      auto n = std::make_shared<Node>();
      n->kind = Kind::Call;
      n->func = f;
      n->args = {arg};
      return n;
    }
    throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
  }
};

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

double eval(const Node& n, double x) {
  switch (n.kind) {
    case Kind::Number: return n.value;
    case Kind::Variable: return x;
    case Kind::Negate: return -eval(*n.args[0], x);
    case Kind::Add: return checked(eval(*n.args[0], x) + eval(*n.args[1], x), "addition");
    case Kind::Sub: return checked(eval(*n.args[0], x) - eval(*n.args[1], x), "subtraction");
    case Kind::Mul: return checked(eval(*n.args[0], x) * eval(*n.args[1], x), "multiplication");
    case Kind::Div: {
      const double num = eval(*n.args[0], x);
      const double den = eval(*n.args[1], x);
      if (den == 0.0) throw EvalError("division by zero");
      return checked(num / den, "division");
    }
    case Kind::Pow: return checked(std::pow(eval(*n.args[0], x), eval(*n.args[1], x)), "power");
    case Kind::Call: {
      const double a = eval(*n.args[0], x);
      switch (n.func) {
        case Func::Exp: return checked(std::exp(a), "exp");
        case Func::Sin: return checked(std::sin(a), "sin");
        case Func::Cos: return checked(std::cos(a), "cos");
        case Func::Sech: return 1.0 / std::cosh(a);
        case Func::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of negative argument");
          return std::sqrt(a);
        case Func::Abs: return std::abs(a);
      }
    }
  }
  throw EvalError("corrupt expression tree");
}

void print(const Node& n, std::string& out) {
  auto binary = [&](const char* op) {
    out += '(';
    print(*n.args[0], out);
    out += op;
    print(*n.args[1], out);
    out += ')';
  };
  switch (n.kind) {
    case Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += '(';
      out += buf;
      out += ')';
      return;
    }
    case Kind::Variable: out += 'x'; return;
    case Kind::Negate:
      out += "(-";
      print(*n.args[0], out);
      out += ')';
      return;
    case Kind::Add: binary(" + "); return;
    case Kind::Sub: binary(" - "); return;
    case Kind::Mul: binary(" * "); return;
    case Kind::Div: binary(" / "); return;
    case Kind::Pow: binary(" ^ "); return;
    case Kind::Call:
      out += func_name(n.func);
      out += '(';
      print(*n.args[0], out);
      out += ')';
      return;
  }
}

}  // namespace

std::string_view func_name(Func f) {
  switch (f) {
    case Func::Exp: return "exp";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Sech: return "sech";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
  }
  return "?";
}

PotentialExpr::PotentialExpr() : root_(number(0.0)) {}

double PotentialExpr::operator()(double x) const {
  if (!std::isfinite(x)) throw EvalError("evaluation point is not finite");
  return checked(eval(*root_, x), "expression");
}

std::string PotentialExpr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

bool PotentialExpr::is_zero_constant() const { return root_->kind == Kind::Number && root_->value == 0.0; }

PotentialExpr parse_potential(std::string_view src) { return PotentialExpr(Parser(src).parse()); }

PotentialExpr parse_potential_or_zero(std::string_view src) {
  for (char c : src)
    if (!std::isspace(static_cast<unsigned char>(c))) return parse_potential(src);
  return PotentialExpr();
}

}  // namespace graphnls
