#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualsim/error.hpp"

namespace dualsim {

enum class Op : std::uint8_t {
  Const,
  Param,
  Species,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Saturate,  // x g -> x / (g + x)
};

struct Instr {
  Op op = Op::Const;
  double value = 0.0;
  std::uint32_t index = 0;

  friend bool operator==(const Instr&, const Instr&) = default;
};

// Symbolic rate expression built by model code. Leaves refer to parameters
// and species by name; bind() resolves them against a model's declarations.
//
//   const auto T = Expr::species("T");
//   const auto rate = Expr::param("p") * T / (Expr::param("g") + T);
class Expr {
 public:
  Expr() = default;

  static Expr constant(double value) { return Expr(Instr{Op::Const, value, 0}, {}); }
  static Expr param(std::string name) { return leaf(Op::Param, std::move(name)); }
  static Expr species(std::string name) { return leaf(Op::Species, std::move(name)); }

  // x / (g + x)
  static Expr saturating(const Expr& x, const Expr& g) { return combine(x, g, Op::Saturate); }
  static Expr pow(const Expr& base, const Expr& exponent) { return combine(base, exponent, Op::Pow); }

  friend Expr operator+(const Expr& l, const Expr& r) { return combine(l, r, Op::Add); }
  friend Expr operator-(const Expr& l, const Expr& r) { return combine(l, r, Op::Sub); }
  friend Expr operator*(const Expr& l, const Expr& r) { return combine(l, r, Op::Mul); }
  friend Expr operator/(const Expr& l, const Expr& r) { return combine(l, r, Op::Div); }
  friend Expr operator-(const Expr& e) {
    Expr out = e;
    out.code_.push_back(Instr{Op::Neg, 0.0, 0});
    return out;
  }
  friend Expr operator+(double l, const Expr& r) { return constant(l) + r; }
  friend Expr operator-(double l, const Expr& r) { return constant(l) - r; }
  friend Expr operator*(double l, const Expr& r) { return constant(l) * r; }
  friend Expr operator/(double l, const Expr& r) { return constant(l) / r; }
  friend Expr operator+(const Expr& l, double r) { return l + constant(r); }
  friend Expr operator-(const Expr& l, double r) { return l - constant(r); }
  friend Expr operator*(const Expr& l, double r) { return l * constant(r); }
  friend Expr operator/(const Expr& l, double r) { return l / constant(r); }

  bool empty() const noexcept { return code_.empty(); }
  const std::vector<Instr>& code() const noexcept { return code_; }
  // Names referenced by Param/Species instructions (index into this table).
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

 private:
  Expr(Instr instr, std::vector<std::string> symbols) : code_{instr}, symbols_(std::move(symbols)) {}

  static Expr leaf(Op op, std::string name) {
    return Expr(Instr{op, 0.0, 0}, std::vector<std::string>{std::move(name)});
  }

  static Expr combine(const Expr& l, const Expr& r, Op op) {
    Expr out = l;
    const auto offset = static_cast<std::uint32_t>(out.symbols_.size());
    out.symbols_.insert(out.symbols_.end(), r.symbols_.begin(), r.symbols_.end());
    for (Instr instr : r.code_) {
      if (instr.op == Op::Param || instr.op == Op::Species) instr.index += offset;
      out.code_.push_back(instr);
    }
    out.code_.push_back(Instr{op, 0.0, 0});
    return out;
  }

  std::vector<Instr> code_;
  std::vector<std::string> symbols_;
};

// A rate expression whose leaves index directly into a parameter vector and
// a species-count vector. Evaluation is a tight postfix loop.
class RateExpr {
 public:
  static constexpr std::size_t kMaxDepth = 64;

  RateExpr() : RateExpr(std::vector<Instr>{Instr{Op::Const, 0.0, 0}}) {}

  explicit RateExpr(std::vector<Instr> code) : code_(std::move(code)) { check_structure(); }

  static RateExpr constant(double value) { return RateExpr({Instr{Op::Const, value, 0}}); }

  // Resolves every symbol of `expr`; unknown names raise UnboundIdentifier.
  static RateExpr bind(const Expr& expr, std::span<const std::string> param_names,
                       std::span<const std::string> species_names) {
    std::vector<Instr> code = expr.code();
    for (Instr& instr : code) {
      if (instr.op != Op::Param && instr.op != Op::Species) continue;
      const std::string& name = expr.symbols().at(instr.index);
      const auto names = instr.op == Op::Param ? param_names : species_names;
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        throw SimError(ErrorCode::UnboundIdentifier,
                       std::string(instr.op == Op::Param ? "parameter " : "species ") + name);
      }
      instr.index = static_cast<std::uint32_t>(it - names.begin());
    }
    return RateExpr(std::move(code));
  }

  double eval(std::span<const double> params, std::span<const double> counts) const {
    std::array<double, kMaxDepth> stack;
    std::size_t top = 0;
    for (const Instr& instr : code_) {
      switch (instr.op) {
        case Op::Const: stack[top++] = instr.value; break;
        case Op::Param: stack[top++] = params[instr.index]; break;
        case Op::Species: stack[top++] = counts[instr.index]; break;
        case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
        default: {
          const double r = stack[--top];
          double& l = stack[top - 1];
          switch (instr.op) {
            case Op::Add: l += r; break;
            case Op::Sub: l -= r; break;
            case Op::Mul: l *= r; break;
            case Op::Div:
              if (r == 0.0) throw SimError(ErrorCode::DivisionByZero, "rate expression divisor is 0");
              l /= r;
              break;
            case Op::Pow: l = std::pow(l, r); break;
            case Op::Saturate: {
              const double denom = r + l;
              if (denom == 0.0) throw SimError(ErrorCode::DivisionByZero, "saturating term g + x is 0");
              l /= denom;
              break;
            }
            default: break;
          }
        }
      }
    }
    return stack[0];
  }

  const std::vector<Instr>& code() const noexcept { return code_; }

  bool uses_species() const {
    return std::any_of(code_.begin(), code_.end(), [](const Instr& i) { return i.op == Op::Species; });
  }

  friend bool operator==(const RateExpr&, const RateExpr&) = default;

 private:
  void check_structure() const {
    std::size_t depth = 0;
    std::size_t max_depth = 0;
    for (const Instr& instr : code_) {
      switch (instr.op) {
        case Op::Const:
        case Op::Param:
        case Op::Species: ++depth; break;
        case Op::Neg:
          if (depth < 1) throw SimError(ErrorCode::InvalidArgument, "malformed rate expression");
          break;
        default:
          if (depth < 2) throw SimError(ErrorCode::InvalidArgument, "malformed rate expression");
          --depth;
      }
      max_depth = std::max(max_depth, depth);
    }
    if (depth != 1) throw SimError(ErrorCode::InvalidArgument, "malformed rate expression");
    if (max_depth > kMaxDepth) throw SimError(ErrorCode::InvalidArgument, "rate expression too deep");
  }

  std::vector<Instr> code_;
};

// eval_rate with explicit inputs: rate in /day for the given counts.
inline double eval_rate(const RateExpr& expr, std::span<const double> counts,
                        std::span<const double> params) {
  return expr.eval(params, counts);
}

}  // namespace dualsim
