#include "taumlmc/model_text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <system_error>

#include "taumlmc/error.hpp"

namespace taumlmc {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

// Recursive descent over the whitespace-free expression text.
class ExpressionParser {
 public:
  ExpressionParser(std::string_view source, std::size_t line, std::size_t column, Expression& out)
      : line_(line), out_(out) {
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (source[i] == ' ' || source[i] == '\t' || source[i] == '\r') continue;
      text_.push_back(source[i]);
      columns_.push_back(column + i);
    }
    columns_.push_back(column + source.size());
  }

  void run() {
    if (text_.empty()) fail("expected an expression");
    out_.root_ = sum();
    if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    out_.text_ = text_;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_, columns_[std::min(pos_, columns_.size() - 1)], message);
  }

  int add(Expression::Node node) {
    out_.nodes_.push_back(node);
    return static_cast<int>(out_.nodes_.size() - 1);
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int sum() {
    int lhs = product();
    for (;;) {
      if (accept('+')) {
        lhs = add({'+', 0.0, lhs, product()});
      } else if (accept('-')) {
        lhs = add({'-', 0.0, lhs, product()});
      } else {
        return lhs;
      }
    }
  }

  int product() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = add({'*', 0.0, lhs, unary()});
      } else if (accept('/')) {
        lhs = add({'/', 0.0, lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return add({'u', 0.0, unary(), -1});
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    const int base = primary();
    if (accept('^')) return add({'^', 0.0, base, unary()});
    return base;
  }

  int primary() {
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    if (accept('(')) {
      const int inner = sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (accept('N')) return add({'N', 0.0, -1, -1});
    const char c = text_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') {
      double value = 0.0;
      const char* begin = text_.data() + pos_;
      const auto [end, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
      if (ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return add({'c', value, -1, -1});
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string text_;
  std::vector<std::size_t> columns_;
  std::size_t pos_ = 0;
  std::size_t line_;
  Expression& out_;
};

Expression Expression::parse(std::string_view text, std::size_t line, std::size_t column) {
  Expression e;
  ExpressionParser(text, line, column, e).run();
  return e;
}

Expression Expression::constant(double value) {
  return parse(format_double(value), 0, 1);
}

double Expression::evaluate(double N) const { return eval(root_, N); }

double Expression::eval(int node, double N) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  switch (n.op) {
    case 'c':
      return n.value;
    case 'N':
      return N;
    case 'u':
      return -eval(n.lhs, N);
    case '+':
      return eval(n.lhs, N) + eval(n.rhs, N);
    case '-':
      return eval(n.lhs, N) - eval(n.rhs, N);
    case '*':
      return eval(n.lhs, N) * eval(n.rhs, N);
    case '/':
      return eval(n.lhs, N) / eval(n.rhs, N);
    case '^':
      return std::pow(eval(n.lhs, N), eval(n.rhs, N));
  }
  return std::nan("");
}

namespace {

bool is_name_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t number) : line_(line), number_(number) {}

  std::size_t column() const { return pos_ + 1; }
  std::size_t number() const { return number_; }
  bool at_end() {
    skip_space();
    return pos_ >= line_.size();
  }

  void skip_space() {
    while (pos_ < line_.size() && is_space(line_[pos_])) ++pos_;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(number_, column(), message);
  }

  std::string word() {
    skip_space();
    if (pos_ >= line_.size() || !is_name_start(line_[pos_])) fail("expected a name");
    const std::size_t start = pos_;
    while (pos_ < line_.size() && is_name_char(line_[pos_])) ++pos_;
    return std::string(line_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= line_.size() || line_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  /// Remainder of the line and the column where it starts.
  std::pair<std::string_view, std::size_t> rest() {
    skip_space();
    const std::size_t start = pos_;
    pos_ = line_.size();
    return {line_.substr(start), start + 1};
  }

  double literal() {
    const auto [text, col] = rest();
    double value = 0.0;
    std::size_t end = text.size();
    while (end > 0 && is_space(text[end - 1])) --end;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + end, value);
    if (ec != std::errc() || ptr != text.data() + end || end == 0) {
      throw ParseError(number_, col, "expected a real number");
    }
    return value;
  }

  std::string_view line() const { return line_; }
  void seek(std::size_t pos) { pos_ = pos; }

 private:
  std::string_view line_;
  std::size_t number_;
  std::size_t pos_ = 0;
};

struct Declared {
  const std::vector<std::string>& species;

  std::size_t index(const LineParser& p, const std::string& name, std::size_t column) const {
    for (std::size_t i = 0; i < species.size(); ++i) {
      if (species[i] == name) return i;
    }
    throw UnknownSpecies(p.number(), column, "unknown species '" + name + "'");
  }
};

// One side of a reaction: terms "[<int>] <name>" separated by '+' or spaces.
std::vector<std::int64_t> parse_side(std::string_view side, std::size_t line, std::size_t offset,
                                     const std::vector<std::string>& species) {
  std::vector<std::int64_t> counts(species.size(), 0);
  std::size_t i = 0;
  bool empty_marker = false;
  bool any_term = false;
  while (i < side.size()) {
    const char c = side[i];
    if (is_space(c) || c == '+') {
      ++i;
      continue;
    }
    const std::size_t term_col = offset + i;
    std::int64_t coefficient = 1;
    bool has_number = false;
    if (c >= '0' && c <= '9') {
      const auto [ptr, ec] = std::from_chars(side.data() + i, side.data() + side.size(), coefficient);
      if (ec != std::errc()) throw ParseError(line, term_col, "malformed coefficient");
      i = static_cast<std::size_t>(ptr - side.data());
      has_number = true;
      while (i < side.size() && is_space(side[i])) ++i;
    }
    if (i < side.size() && is_name_start(side[i])) {
      const std::size_t name_col = offset + i;
      const std::size_t start = i;
      while (i < side.size() && is_name_char(side[i])) ++i;
      const std::string name(side.substr(start, i - start));
      std::size_t index = species.size();
      for (std::size_t s = 0; s < species.size(); ++s) {
        if (species[s] == name) index = s;
      }
      if (index == species.size()) {
        throw UnknownSpecies(line, name_col, "unknown species '" + name + "'");
      }
      if (coefficient < 0) throw ParseError(line, term_col, "negative coefficient");
      counts[index] += coefficient;
      any_term = true;
    } else if (has_number && coefficient == 0) {
      empty_marker = true;
    } else {
      throw ParseError(line, offset + i, "expected a species name");
    }
  }
  if (empty_marker && any_term) {
    throw ParseError(line, offset, "'0' cannot be combined with species");
  }
  return counts;
}

struct PendingCheck {
  std::size_t line;
  std::size_t column;
};

}  // namespace

ModelTemplate parse_model(std::string_view text) {
  ModelTemplate model;
  std::vector<bool> init_set;
  std::vector<bool> alpha_set;
  std::vector<PendingCheck> rate_positions;
  std::vector<PendingCheck> init_positions;
  std::size_t line_count = 0;

  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    ++line_count;
    std::string_view raw = text.substr(begin, end - begin);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    begin = end + 1;

    LineParser p(raw, line_count);
    if (p.at_end()) continue;
    const Declared declared{model.species};
    const bool is_reaction_line = raw.find("->") != std::string_view::npos;
    const std::size_t keyword_col = p.column();
    std::string keyword;
    if (is_name_start(raw[keyword_col - 1])) keyword = p.word();

    if (keyword == "species") {
      while (!p.at_end()) {
        const std::size_t col = p.column();
        const std::string name = p.word();
        for (const auto& existing : model.species) {
          if (existing == name) {
            throw DuplicateSpecies(line_count, col, "species '" + name + "' declared twice");
          }
        }
        model.species.push_back(name);
        init_set.push_back(false);
        alpha_set.push_back(false);
        model.init.emplace_back();
        model.alpha.push_back(0.0);
        p.skip_space();
        if (p.column() <= raw.size() && raw[p.column() - 1] == ',') p.seek(p.column());
      }
    } else if (keyword == "init" || keyword == "alpha") {
      const std::size_t col = p.column() + 1;
      const std::string name = p.word();
      const std::size_t i = declared.index(p, name, col);
      p.expect('=');
      if (keyword == "init") {
        if (init_set[i]) p.fail("initial count of '" + name + "' set twice");
        const auto [expr, expr_col] = p.rest();
        model.init[i] = Expression::parse(expr, line_count, expr_col);
        init_set[i] = true;
        if (init_positions.size() <= i) init_positions.resize(model.species.size());
        init_positions[i] = {line_count, expr_col};
      } else {
        if (alpha_set[i]) p.fail("alpha of '" + name + "' set twice");
        const std::size_t value_col = p.column();
        const double a = p.literal();
        if (!std::isfinite(a) || a < 0.0) {
          throw ParseError(line_count, value_col + 1, "alpha must be a finite real >= 0");
        }
        model.alpha[i] = a;
        alpha_set[i] = true;
      }
    } else if (keyword == "scaling") {
      const std::string n = p.word();
      if (n != "N") p.fail("expected 'scaling N = <real>'");
      p.expect('=');
      const std::size_t value_col = p.column();
      const double value = p.literal();
      if (!std::isfinite(value) || value < 1.0) {
        throw ParseError(line_count, value_col + 1, "system size N must be a finite real >= 1");
      }
      model.N = value;
    } else if (keyword == "reaction" || is_reaction_line) {
      if (keyword != "reaction") p.seek(keyword_col - 1);
      const auto [body, body_col] = p.rest();
      const std::size_t arrow = body.find("->");
      const std::size_t at = body.find('@');
      if (arrow == std::string_view::npos) throw ParseError(line_count, body_col, "expected '->'");
      if (at == std::string_view::npos || at < arrow) {
        throw ParseError(line_count, body_col + body.size(), "expected '@ <rate>'");
      }
      if (model.species.empty()) throw ParseError(line_count, body_col, "reaction before species");
      ReactionTemplate rx{
          parse_side(body.substr(0, arrow), line_count, body_col, model.species),
          parse_side(body.substr(arrow + 2, at - arrow - 2), line_count, body_col + arrow + 2,
                     model.species),
          Expression::parse(body.substr(at + 1), line_count, body_col + at + 1)};
      model.reactions.push_back(std::move(rx));
      const std::size_t rate_start = body.find_first_not_of(" \t", at + 1);
      rate_positions.push_back({line_count, body_col + std::min(rate_start, body.size())});
    } else {
      throw ParseError(line_count, keyword_col, "unknown statement");
    }
    if (end == text.size()) break;
  }

  if (model.species.empty()) throw ParseError(line_count, 1, "no species");
  if (model.reactions.empty()) throw ParseError(line_count, 1, "no reactions");

  const double N = model.N.value_or(1.0);
  for (std::size_t k = 0; k < model.reactions.size(); ++k) {
    const double rate = model.reactions[k].rate.evaluate(N);
    if (!std::isfinite(rate) || !(rate > 0.0)) {
      throw NonPositiveRate(rate_positions[k].line, rate_positions[k].column,
                            "rate evaluates to " + format_double(rate) + ", must be positive");
    }
  }
  for (std::size_t i = 0; i < model.init.size(); ++i) {
    if (!model.init[i]) continue;
    const double value = model.init[i]->evaluate(N);
    if (!std::isfinite(value) || value < 0.0) {
      throw ParseError(init_positions[i].line, init_positions[i].column,
                       "initial count must be a nonnegative integer");
    }
  }
  return model;
}

Model ModelTemplate::instantiate() const { return instantiate(N.value_or(1.0)); }

Model ModelTemplate::instantiate(double size) const {
  const std::size_t d = species.size();
  std::vector<Reaction> rxs;
  rxs.reserve(reactions.size());
  for (std::size_t k = 0; k < reactions.size(); ++k) {
    const double rate = reactions[k].rate.evaluate(size);
    if (!std::isfinite(rate) || !(rate > 0.0)) {
      throw InvalidArgument("rate of reaction " + std::to_string(k + 1) + " is " +
                            format_double(rate) + " at N = " + format_double(size));
    }
    rxs.push_back(Reaction{reactions[k].inputs, reactions[k].outputs, rate});
  }
  SystemState initial;
  initial.counts.assign(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    if (!init[i]) continue;
    const double value = init[i]->evaluate(size);
    const double rounded = std::round(value);
    if (!std::isfinite(value) || value < 0.0 ||
        std::abs(value - rounded) > 1e-9 * std::max(1.0, std::abs(value)) || rounded > 9.2e18) {
      throw InvalidArgument("initial count of " + species[i] + " is " + format_double(value) +
                            " at N = " + format_double(size) + ", not a nonnegative integer");
    }
    initial.counts[i] = static_cast<std::int64_t>(rounded);
  }
  return Model{ReactionNetwork(species, std::move(rxs)), std::move(initial), size, alpha};
}

namespace {

void write_side(std::ostringstream& out, const std::vector<std::int64_t>& counts,
                const std::vector<std::string>& species) {
  bool first = true;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    if (!first) out << " + ";
    if (counts[i] != 1) out << counts[i] << ' ';
    out << species[i];
    first = false;
  }
  if (first) out << '0';
}

}  // namespace

std::string serialize_model(const ModelTemplate& model) {
  std::ostringstream out;
  out << "species";
  for (const auto& s : model.species) out << ' ' << s;
  out << '\n';
  for (std::size_t i = 0; i < model.species.size(); ++i) {
    if (model.init[i]) out << "init " << model.species[i] << " = " << model.init[i]->text() << '\n';
  }
  if (model.N) out << "scaling N = " << format_double(*model.N) << '\n';
  for (std::size_t i = 0; i < model.species.size(); ++i) {
    if (model.alpha[i] != 0.0) {
      out << "alpha " << model.species[i] << " = " << format_double(model.alpha[i]) << '\n';
    }
  }
  for (const auto& rx : model.reactions) {
    out << "reaction ";
    write_side(out, rx.inputs, model.species);
    out << " -> ";
    write_side(out, rx.outputs, model.species);
    out << " @ " << rx.rate.text() << '\n';
  }
  return out.str();
}

}  // namespace taumlmc
