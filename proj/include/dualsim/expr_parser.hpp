#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <span>
#include <string>
#include <string_view>

#include "dualsim/rate_expr.hpp"

namespace dualsim {

namespace detail {

// Recursive-descent parser for
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right associative
//   atom   := number | identifier | '(' expr ')'
//
// Columns in errors are 1-based.
class RateParser {
 public:
  RateParser(std::string_view text, std::span<const std::string> param_names,
             std::span<const std::string> species_names)
      : text_(text), params_(param_names), species_(species_names) {}

  Expr parse() {
    skip_ws();
    if (at_end()) throw SyntaxError(pos_ + 1, "empty expression");
    Expr e = expr();
    skip_ws();
    if (!at_end()) throw SyntaxError(pos_ + 1, std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      Expr rhs = term();
      lhs = c == '+' ? lhs + rhs : lhs - rhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      skip_ws();
      const char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      Expr rhs = unary();
      lhs = c == '*' ? lhs * rhs : lhs / rhs;
    }
  }

  Expr unary() {
    skip_ws();
    if (peek() == '-') {
      ++pos_;
      return -unary();
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      return Expr::pow(base, unary());
    }
    return base;
  }

  Expr atom() {
    skip_ws();
    if (at_end()) throw SyntaxError(pos_ + 1, "unexpected end of expression");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      skip_ws();
      if (peek() != ')') throw SyntaxError(pos_ + 1, "expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      return identifier(std::string(text_.substr(start, pos_ - start)));
    }
    throw SyntaxError(pos_ + 1, std::string("unexpected '") + c + "'");
  }

  // Parameters shadow species of the same name.
  Expr identifier(std::string name) const {
    if (std::find(params_.begin(), params_.end(), name) != params_.end()) return Expr::param(std::move(name));
    if (std::find(species_.begin(), species_.end(), name) != species_.end()) return Expr::species(std::move(name));
    throw SimError(ErrorCode::UnboundIdentifier, name);
  }

  Expr number() {
    const std::size_t start = pos_;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) throw SyntaxError(start + 1, "malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return Expr::constant(value);
  }

  std::string_view text_;
  std::span<const std::string> params_;
  std::span<const std::string> species_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses a rate formula into a symbolic expression. Identifiers bind to
// declared parameters first, then to declared species (their current totals).
inline Expr parse_formula(std::string_view text, std::span<const std::string> param_names,
                          std::span<const std::string> species_names) {
  return detail::RateParser(text, param_names, species_names).parse();
}

inline RateExpr parse_rate_expr(std::string_view text, std::span<const std::string> param_names,
                                std::span<const std::string> species_names) {
  return RateExpr::bind(parse_formula(text, param_names, species_names), param_names, species_names);
}

}  // namespace dualsim
