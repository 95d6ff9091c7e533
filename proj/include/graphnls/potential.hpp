#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphnls {

/// Syntax error in a potential expression; offset is the byte position in the source.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation produced a non-finite value.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Func { Exp, Sin, Cos, Sech, Sqrt, Abs };

/// Expression tree over literals, the edge coordinate x, + - * / ^, unary minus and
/// a fixed set of functions. Nodes are immutable and shared.
class PotentialExpr {
 public:
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

  struct Node {
    Kind kind;
    double value = 0.0;  // Number
    Func func = Func::Exp;  // Call
    std::vector<std::shared_ptr<const Node>> args;
  };
  using NodePtr = std::shared_ptr<const Node>;

  PotentialExpr();  // constant zero
  explicit PotentialExpr(NodePtr root) : root_(std::move(root)) {}

  double operator()(double x) const;
  const Node& root() const { return *root_; }
  /// Fully parenthesised form; parse(to_string()) evaluates identically.
  std::string to_string() const;
  bool is_zero_constant() const;

 private:
  NodePtr root_;
};

PotentialExpr parse_potential(std::string_view src);

/// Empty or blank source means W = 0.
PotentialExpr parse_potential_or_zero(std::string_view src);

std::string_view func_name(Func f);

/// Positive and negative parts W = W+ - W-, pointwise.
struct SignSplit {
  double positive;
  double negative;
};
inline SignSplit split_sign(double w) { return {w > 0.0 ? w : 0.0, w < 0.0 ? -w : 0.0}; }

}  // namespace graphnls
