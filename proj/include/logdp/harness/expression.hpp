#pragma once

// Arithmetic expressions over x, y used for exponents, weights, sources and masks.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right associative
//   atom   := number | x | y | pi | e | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: min, max (two arguments), sin, cos, exp, log, sqrt, abs.

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "logdp/errors.hpp"
#include "logdp/fem_grid.hpp"

namespace logdp {

class Expression {
 public:
  using Eval = std::function<double(double, double)>;

  Expression() : Expression(0.0) {}
  explicit Expression(double value)
      : source_(fmt::format("{}", value)), eval_([value](double, double) { return value; }), constant_(true) {}

  /// Throws ConfigError with the offending position on malformed input.
  static Expression parse(const std::string& text) {
    Parser parser{text};
    auto [eval, constant] = parser.parse();
    Expression out;
    out.source_ = text;
    out.eval_ = std::move(eval);
    out.constant_ = constant;
    return out;
  }

  [[nodiscard]] double operator()(double x, double y) const { return eval_(x, y); }
  [[nodiscard]] double operator()(const Point& p) const { return eval_(p[0], p[1]); }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  /// True when the expression mentions neither x nor y.
  [[nodiscard]] bool is_constant() const noexcept { return constant_; }

  bool operator==(const Expression& other) const { return source_ == other.source_; }

 private:
  struct Node {
    Eval eval;
    bool constant;
  };

  class Parser {
   public:
    explicit Parser(const std::string& text) : text_(text) {}

    std::pair<Eval, bool> parse() {
      Node n = expr();
      skip();
      if (pos_ != text_.size()) fail("unexpected character");
      return {std::move(n.eval), n.constant};
    }

   private:
    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError(fmt::format("expression '{}': {} at position {}", text_, what, pos_));
    }

    void skip() {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
      skip();
      if (pos_ < text_.size() && text_[pos_] == c) {
        ++pos_;
        return true;
      }
      return false;
    }

    static Node binary(Node a, Node b, double (*op)(double, double)) {
      return {[a = std::move(a.eval), b = std::move(b.eval), op](double x, double y) { return op(a(x, y), b(x, y)); },
              a.constant && b.constant};
    }

    Node expr() {
      Node lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = binary(std::move(lhs), term(), [](double a, double b) { return a + b; });
        } else if (accept('-')) {
          lhs = binary(std::move(lhs), term(), [](double a, double b) { return a - b; });
        } else {
          return lhs;
        }
      }
    }

    Node term() {
      Node lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = binary(std::move(lhs), unary(), [](double a, double b) { return a * b; });
        } else if (accept('/')) {
          lhs = binary(std::move(lhs), unary(), [](double a, double b) { return a / b; });
        } else {
          return lhs;
        }
      }
    }

    Node unary() {
      if (accept('-')) {
        Node inner = unary();
        return {[f = std::move(inner.eval)](double x, double y) { return -f(x, y); }, inner.constant};
      }
      if (accept('+')) return unary();
      return power();
    }

    Node power() {
      Node base = atom();
      if (accept('^')) {
        return binary(std::move(base), unary(), [](double a, double b) { return std::pow(a, b); });
      }
      return base;
    }

    Node atom() {
      skip();
      if (pos_ >= text_.size()) fail("unexpected end of input");
      const char c = text_[pos_];
      if (c == '(') {
        ++pos_;
        Node inner = expr();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
      fail("unexpected character");
    }

    Node number() {
      double value = 0.0;
      const char* begin = text_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
      if (ec != std::errc{}) fail("malformed number");
      pos_ += static_cast<std::size_t>(ptr - begin);
      return {[value](double, double) { return value; }, true};
    }

    Node name() {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string id = text_.substr(start, pos_ - start);
      if (id == "x") return {[](double x, double) { return x; }, false};
      if (id == "y") return {[](double, double y) { return y; }, false};
      if (id == "pi") return {[](double, double) { return std::numbers::pi; }, true};
      if (id == "e") return {[](double, double) { return std::numbers::e; }, true};
      if (!accept('(')) fail(fmt::format("unknown identifier '{}'", id));
      std::vector<Node> args{expr()};
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("expected ')'");
      return call(id, std::move(args));
    }

    Node call(const std::string& id, std::vector<Node> args) {
      using Unary = double (*)(double);
      static const std::vector<std::pair<std::string, Unary>> unary_fns = {
          {"sin", [](double a) { return std::sin(a); }},   {"cos", [](double a) { return std::cos(a); }},
          {"exp", [](double a) { return std::exp(a); }},   {"log", [](double a) { return std::log(a); }},
          {"sqrt", [](double a) { return std::sqrt(a); }}, {"abs", [](double a) { return std::abs(a); }}};
      for (const auto& [fn_name, fn] : unary_fns) {
        if (id != fn_name) continue;
        if (args.size() != 1) fail(fmt::format("{} takes one argument", id));
        return {[f = std::move(args[0].eval), fn](double x, double y) { return fn(f(x, y)); }, args[0].constant};
      }
      if (id == "min" || id == "max") {
        if (args.size() != 2) fail(fmt::format("{} takes two arguments", id));
        if (id == "min") {
          return binary(std::move(args[0]), std::move(args[1]), [](double a, double b) { return std::min(a, b); });
        }
        return binary(std::move(args[0]), std::move(args[1]), [](double a, double b) { return std::max(a, b); });
      }
      fail(fmt::format("unknown function '{}'", id));
    }

    const std::string& text_;
    std::size_t pos_ = 0;
  };

  std::string source_;
  Eval eval_;
  bool constant_ = true;
};

}  // namespace logdp
