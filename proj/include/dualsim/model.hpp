#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualsim/core.hpp"
#include "dualsim/ode.hpp"
#include "dualsim/random.hpp"
#include "dualsim/rate_expr.hpp"

namespace dualsim {

enum class EffectKind {
  Spawn,         // +1 agent of target
  RemoveSelf,    // source agent dies
  RemoveRandom,  // one uniformly random agent of target dies (a message)
  SignedBranch,  // rate > 0: source replicates; rate < 0: source dies
};

enum class RatePolicy { Live, FrozenAtBirth };

// One stochastic channel. `source` is a species index, or empty for a
// global channel (treatment influx) that fires once per unit of rate.
struct TransitionSpec {
  std::string name;
  std::optional<std::size_t> source;
  RateExpr rate;
  EffectKind effect = EffectKind::Spawn;
  std::size_t target = 0;
  std::optional<RatePolicy> rate_policy;

  bool is_global() const noexcept { return !source.has_value(); }
  bool is_removal() const noexcept {
    return effect == EffectKind::RemoveSelf || effect == EffectKind::RemoveRandom;
  }
  // Species whose count changes when the channel fires.
  std::size_t affected() const noexcept {
    return (effect == EffectKind::RemoveSelf || effect == EffectKind::SignedBranch) ? *source : target;
  }
};

// Unbound transition as written by model builders.
struct TransitionDraft {
  std::string name;
  std::optional<std::string> source;
  Expr rate;
  EffectKind effect = EffectKind::Spawn;
  std::string target;
};

struct DriftCheck {
  std::size_t states = 100;
  double rel_tol = 1e-9;
  std::uint64_t seed = 0x5eed'd71f'7c4eULL;
};

struct DriftReport {
  double max_rel_error = 0.0;
  std::vector<double> worst_state;
};

// A model's paired presentations: the ODE right-hand side and the agent
// transition table, over one shared species list and parameter vector.
class ModelSpec {
 public:
  // Builds and verifies drift equivalence; throws DriftMismatch on failure.
  // An empty `rhs` means "use the transition table's mean-field drift".
  ModelSpec(std::string name, std::vector<std::string> species, std::vector<std::string> param_names,
            std::vector<double> param_values, std::vector<TransitionDraft> drafts, RhsFunction rhs,
            std::vector<std::string> notes = {}, DriftCheck check = {})
      : name_(std::move(name)),
        species_(std::move(species)),
        param_names_(std::move(param_names)),
        param_values_(std::move(param_values)),
        rhs_(std::move(rhs)),
        notes_(std::move(notes)) {
    if (param_names_.size() != param_values_.size()) {
      throw SimError(ErrorCode::InvalidArgument, "parameter names and values differ in length");
    }
    for (auto& draft : drafts) transitions_.push_back(bind(draft));
    if (!rhs_.eval) {
      rhs_ = mean_field_rhs();
    } else if (rhs_.arity != species_.size()) {
      throw SimError(ErrorCode::InvalidArgument, "rhs arity differs from species count");
    }
    const DriftReport report = verify_drift(check);
    if (report.max_rel_error > check.rel_tol) {
      std::string state;
      for (double v : report.worst_state) state += std::to_string(v) + " ";
      throw SimError(ErrorCode::DriftMismatch, name_ + ": relative error " +
                                                   std::to_string(report.max_rel_error) + " at state " + state);
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& species() const noexcept { return species_; }
  const std::vector<std::string>& param_names() const noexcept { return param_names_; }
  const std::vector<double>& param_values() const noexcept { return param_values_; }
  const std::vector<TransitionSpec>& transitions() const noexcept { return transitions_; }
  const RhsFunction& rhs() const noexcept { return rhs_; }
  // Where a printed rate table was overridden to keep drift equivalence.
  const std::vector<std::string>& notes() const noexcept { return notes_; }

  std::size_t species_index(std::string_view name) const {
    const auto it = std::find(species_.begin(), species_.end(), name);
    if (it == species_.end()) throw SimError(ErrorCode::UnboundIdentifier, "species " + std::string(name));
    return static_cast<std::size_t>(it - species_.begin());
  }

  double param(std::string_view name) const {
    const auto it = std::find(param_names_.begin(), param_names_.end(), name);
    if (it == param_names_.end()) throw SimError(ErrorCode::UnboundIdentifier, "parameter " + std::string(name));
    return param_values_[static_cast<std::size_t>(it - param_names_.begin())];
  }

  std::vector<const TransitionSpec*> influx_channels() const {
    std::vector<const TransitionSpec*> out;
    for (const auto& t : transitions_) {
      if (t.is_global()) out.push_back(&t);
    }
    return out;
  }

  // Expected change per unit time implied by the transition table:
  // sum over channels of source_count * rate * effect_vector.
  std::vector<double> aggregate_drift(std::span<const double> counts) const {
    std::vector<double> drift(species_.size(), 0.0);
    std::vector<double> magnitude(species_.size(), 0.0);
    accumulate_drift(counts, drift, magnitude);
    return drift;
  }

  DriftReport verify_drift(const DriftCheck& check) const {
    SeededStream rng(check.seed);
    DriftReport report;
    std::vector<double> state(species_.size());
    std::vector<double> drift(species_.size()), magnitude(species_.size()), ode(species_.size());
    for (std::size_t k = 0; k < check.states; ++k) {
      // Log-uniform magnitudes over 0..1e7 with occasional exact zeros.
      for (double& v : state) v = rng.uniform() < 0.1 ? 0.0 : std::pow(10.0, 7.0 * rng.uniform());
      std::fill(drift.begin(), drift.end(), 0.0);
      std::fill(magnitude.begin(), magnitude.end(), 0.0);
      accumulate_drift(state, drift, magnitude);
      rhs_.eval(0.0, state, ode);
      for (std::size_t i = 0; i < species_.size(); ++i) {
        const double scale = std::max({std::fabs(ode[i]), magnitude[i], 1e-300});
        const double rel = std::fabs(drift[i] - ode[i]) / scale;
        if (!(rel <= report.max_rel_error)) {
          report.max_rel_error = std::isnan(rel) ? INFINITY : rel;
          report.worst_state = state;
        }
      }
    }
    return report;
  }

 private:
  TransitionSpec bind(const TransitionDraft& draft) const {
    TransitionSpec t;
    t.name = draft.name;
    if (draft.source) t.source = species_index(*draft.source);
    t.rate = RateExpr::bind(draft.rate, param_names_, species_);
    t.effect = draft.effect;
    if (draft.effect == EffectKind::Spawn || draft.effect == EffectKind::RemoveRandom) {
      t.target = species_index(draft.target);
    } else {
      if (!t.source) {
        throw SimError(ErrorCode::InvalidArgument, draft.name + ": self effects need a source species");
      }
      t.target = *t.source;
    }
    return t;
  }

  void accumulate_drift(std::span<const double> counts, std::span<double> drift,
                        std::span<double> magnitude) const {
    for (const auto& t : transitions_) {
      const double n = t.source ? counts[*t.source] : 1.0;
      if (n == 0.0) continue;
      const double flow = n * t.rate.eval(param_values_, counts);
      const double sign = t.is_removal() ? -1.0 : 1.0;
      drift[t.affected()] += sign * flow;
      magnitude[t.affected()] += std::fabs(flow);
    }
  }

  RhsFunction mean_field_rhs() const {
    // The ModelSpec may be moved, so capture what the closure needs by value.
    auto transitions = transitions_;
    auto params = param_values_;
    const std::size_t arity = species_.size();
    return RhsFunction{arity, [transitions, params](double, std::span<const double> y, std::span<double> dydt) {
                         std::fill(dydt.begin(), dydt.end(), 0.0);
                         for (const auto& t : transitions) {
                           const double n = t.source ? y[*t.source] : 1.0;
                           if (n == 0.0) continue;
                           const double flow = n * t.rate.eval(params, y);
                           dydt[t.affected()] += t.is_removal() ? -flow : flow;
                         }
                       }};
  }

  std::string name_;
  std::vector<std::string> species_;
  std::vector<std::string> param_names_;
  std::vector<double> param_values_;
  std::vector<TransitionSpec> transitions_;
  RhsFunction rhs_;
  std::vector<std::string> notes_;
};

}  // namespace dualsim
