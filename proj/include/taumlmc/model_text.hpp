#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taumlmc/model.hpp"

namespace taumlmc {

/// Arithmetic over real literals and the system size N:
/// + - * / ^, unary minus and parentheses. `^` is right-associative.
class Expression {
 public:
  /// `column` is the 1-based column of `text` within its line, for diagnostics.
  static Expression parse(std::string_view text, std::size_t line, std::size_t column);
  static Expression constant(double value);

  double evaluate(double N) const;

  /// Source text with whitespace removed.
  const std::string& text() const noexcept { return text_; }

  bool operator==(const Expression& other) const { return text_ == other.text_; }

 private:
  struct Node {
    char op = 0;  // 'c' constant, 'N', 'u' unary minus, or a binary operator
    double value = 0.0;
    int lhs = -1;
    int rhs = -1;
  };
  friend class ExpressionParser;

  double eval(int node, double N) const;

  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct ReactionTemplate {
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> outputs;
  Expression rate;
  bool operator==(const ReactionTemplate&) const = default;
};

/// A parsed model file. Rates and initial counts may depend on N, so one file
/// describes the whole family of models indexed by the system size.
struct ModelTemplate {
  std::vector<std::string> species;
  std::vector<ReactionTemplate> reactions;
  std::vector<std::optional<Expression>> init;  // absent means 0
  std::optional<double> N;                      // `scaling N = ...`
  std::vector<double> alpha;                    // defaults to 0

  /// Model at the file's own N (1 when the file sets none).
  Model instantiate() const;

  /// Model at system size N: rates and initial counts re-evaluated at N.
  /// Throws InvalidArgument if a rate is not positive or an initial count is
  /// not a nonnegative integer.
  Model instantiate(double N) const;

  bool operator==(const ModelTemplate&) const = default;
};

/// Parses the line-oriented model format:
///   species <name>...
///   init <name> = <expr>
///   [reaction] <lhs> -> <rhs> @ <expr>
///   scaling N = <real>
///   alpha <name> = <real>
/// Sides are `+`/space separated terms `[<int>] <name>`; `0` or nothing is the
/// empty complex. `#` starts a comment.
ModelTemplate parse_model(std::string_view text);

/// Canonical text that parse_model reads back to an equal template.
std::string serialize_model(const ModelTemplate& model);

/// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace taumlmc
