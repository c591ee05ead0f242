#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dualsim/abm.hpp"
#include "dualsim/core.hpp"
#include "dualsim/model.hpp"
#include "dualsim/ode.hpp"
#include "dualsim/rate_expr.hpp"
#include "dualsim/stats.hpp"

namespace dualsim {

namespace detail {

template <typename Params>
std::pair<std::vector<std::string>, std::vector<double>> param_vectors(const Params& params) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [name, value] : params.fields()) {
    names.emplace_back(name);
    values.push_back(value);
  }
  return {std::move(names), std::move(values)};
}

inline Expr P(const char* name) { return Expr::param(name); }

}  // namespace detail

// Per-effector net proliferation rate (p1 - q1*S/(q2+S)) * I/(g1+I).
// Must stay in step with case3_net_proliferation in ode.hpp.
inline Expr case3_net_proliferation_expr() {
  using detail::P;
  const auto I = Expr::species(species::IL2.name);
  const auto S = Expr::species(species::TGFBeta.name);
  return (P("p1") - P("q1") * Expr::saturating(S, P("q2"))) * Expr::saturating(I, P("g1"));
}

// One tumour species whose per-cell net rate a*T^(alpha-1) - b*T^(beta-1)
// picks proliferation or death by its sign.
inline ModelSpec build_case0(const Case0Params& params) {
  using detail::P;
  validate_params(params);
  auto [names, values] = detail::param_vectors(params);
  const auto T = Expr::species(species::Tumour.name);
  std::vector<TransitionDraft> drafts{
      {"tumour_net_growth", species::Tumour.name,
       P("a") * Expr::pow(T, P("alpha") - 1.0) - P("b") * Expr::pow(T, P("beta") - 1.0), EffectKind::SignedBranch, ""},
  };
  return ModelSpec("case0", {species::Tumour.name}, std::move(names), std::move(values), std::move(drafts),
                   make_rhs<1>(&detail::case0, params));
}

inline ModelSpec build_case1(const Case1Params& params) {
  using detail::P;
  validate_params(params);
  auto [names, values] = detail::param_vectors(params);
  const auto T = Expr::species(species::Tumour.name);
  const auto E = Expr::species(species::Effector.name);
  const std::string tumour = species::Tumour.name, effector = species::Effector.name;
  std::vector<TransitionDraft> drafts{
      {"tumour_net_growth", tumour, P("a") * (1.0 - P("b") * T), EffectKind::SignedBranch, ""},
      {"tumour_killed_by_effector", tumour, P("n") * E, EffectKind::RemoveSelf, ""},
      {"cause_effector_damage", tumour, P("m") * E, EffectKind::RemoveRandom, effector},
      {"effector_proliferation", effector, P("p") * Expr::saturating(T, P("g")), EffectKind::Spawn, effector},
      {"effector_death", effector, P("d"), EffectKind::RemoveSelf, ""},
      {"treatment", std::nullopt, P("s"), EffectKind::Spawn, effector},
  };
  return ModelSpec("case1", {tumour, effector}, std::move(names), std::move(values), std::move(drafts),
                   make_rhs<2>(&detail::case1, params),
                   {"cause_effector_damage fires per tumour cell at m*TotalEffector (printed table: m) so the "
                    "aggregate is m*T*E"});
}

inline ModelSpec build_case1(int scenario) { return build_case1(case1_scenario_params(scenario)); }

inline ModelSpec build_case2(const Case2Params& params = {}) {
  using detail::P;
  validate_params(params);
  auto [names, values] = detail::param_vectors(params);
  const auto T = Expr::species(species::Tumour.name);
  const auto I = Expr::species(species::IL2.name);
  const std::string tumour = species::Tumour.name, effector = species::Effector.name, il2 = species::IL2.name;
  std::vector<TransitionDraft> drafts{
      {"tumour_net_growth", tumour, P("a") * (1.0 - P("b") * T), EffectKind::SignedBranch, ""},
      {"effector_kills_tumour", effector, P("aa") * Expr::saturating(T, P("g2")), EffectKind::RemoveRandom, tumour},
      {"effector_recruitment", tumour, P("c"), EffectKind::Spawn, effector},
      {"effector_proliferation", effector, P("p1") * Expr::saturating(I, P("g1")), EffectKind::Spawn, effector},
      {"effector_death", effector, P("mu2"), EffectKind::RemoveSelf, ""},
      {"il2_production", effector, P("p2") * Expr::saturating(T, P("g3")), EffectKind::Spawn, il2},
      {"il2_loss", il2, P("mu3"), EffectKind::RemoveSelf, ""},
      {"treatment_effector", std::nullopt, P("s1"), EffectKind::Spawn, effector},
      {"treatment_il2", std::nullopt, P("s2"), EffectKind::Spawn, il2},
  };
  return ModelSpec("case2", {tumour, effector, il2}, std::move(names), std::move(values), std::move(drafts),
                   make_rhs<3>(&detail::case2, params),
                   {"recruitment c*T attached per tumour cell, spawning effectors",
                    "IL-2 production p2*T/(g3+T) per effector; effector proliferation p1*I/(g1+I) per effector"});
}

inline ModelSpec build_case3(const Case3Params& params = {}) {
  using detail::P;
  validate_params(params);
  auto [names, values] = detail::param_vectors(params);
  const auto T = Expr::species(species::Tumour.name);
  const auto S = Expr::species(species::TGFBeta.name);
  const std::string tumour = species::Tumour.name, effector = species::Effector.name, il2 = species::IL2.name,
                    tgf = species::TGFBeta.name;
  std::vector<TransitionDraft> drafts{
      {"effector_net_proliferation", effector, case3_net_proliferation_expr(), EffectKind::SignedBranch, ""},
      {"effector_death", effector, P("mu1"), EffectKind::RemoveSelf, ""},
      {"effector_kills_tumour", effector, P("aa") * Expr::saturating(T, P("g2")), EffectKind::RemoveRandom, tumour},
      {"il2_production", effector, P("p3") * T / ((P("g4") + T) * (1.0 + P("alpha") * S)), EffectKind::Spawn, il2},
      {"tumour_net_growth", tumour, P("a") * (1.0 - T / P("K")), EffectKind::SignedBranch, ""},
      {"tgf_production", tumour, P("p4") * T / (P("theta") * P("theta") + T * T), EffectKind::Spawn, tgf},
      {"tumour_growth_stimulation", tumour, P("p2") * Expr::saturating(S, P("g3")), EffectKind::Spawn, tumour},
      {"effector_recruitment", tumour, P("c") / (1.0 + P("gamma") * S), EffectKind::Spawn, effector},
      {"il2_loss", il2, P("mu2"), EffectKind::RemoveSelf, ""},
      {"tgf_decay", tgf, P("mu3"), EffectKind::RemoveSelf, ""},
  };
  return ModelSpec("case3", {tumour, effector, il2, tgf}, std::move(names), std::move(values), std::move(drafts),
                   make_rhs<4>(&detail::case3, params),
                   {"tumour_growth_stimulation attached per tumour cell at p2*S/(g3+S) (printed table attaches "
                    "p2*S/(g3+S) to TGF-beta molecules, which aggregates to p2*S^2/(g3+S))",
                    "carrying capacity K is not tabulated; default 1e9"});
}

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioConfig {
  std::string name;
  std::string description;
  int case_id = 1;      // 0..3, or -1 for a custom model
  int scenario_id = 0;  // case 1 only: 1..4
  std::vector<std::pair<std::string, double>> param_overrides;
  std::vector<std::pair<std::string, std::int64_t>> init;  // unlisted species start at 0
  double horizon = 100.0;
  EngineConfig engine;
  std::size_t n_reps = 50;
  double alpha = 0.05;
  SamplePairing pairing = SamplePairing::DailySeries;
  double ode_dt = 0.01;
  std::vector<CensusPredicate> census;
  std::shared_ptr<const ModelSpec> custom_model;
};

namespace detail {

template <typename Params>
Params apply_overrides(Params params, const ScenarioConfig& cfg) {
  for (const auto& [name, value] : cfg.param_overrides) {
    if (!set_param(params, name, value)) {
      throw SimError(ErrorCode::UnknownKey, "parameter '" + name + "' in scenario " + cfg.name);
    }
  }
  return params;
}

}  // namespace detail

inline const ScenarioConfig& validate_scenario(const ScenarioConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw SimError(ErrorCode::InvalidArgument, cfg.name + ": horizon must be > 0");
  if (cfg.n_reps < 1) throw SimError(ErrorCode::InvalidArgument, cfg.name + ": n_reps must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw SimError(ErrorCode::InvalidArgument, cfg.name + ": alpha must lie in (0,1)");
  for (const auto& [sp, n] : cfg.init) {
    if (n < 0) throw SimError(ErrorCode::NegativeState, cfg.name + ": initial " + sp + " is negative");
  }
  validate_engine(cfg.engine);
  return cfg;
}

inline ModelSpec build_model(const ScenarioConfig& cfg) {
  switch (cfg.case_id) {
    case -1:
      if (!cfg.custom_model) throw SimError(ErrorCode::MissingRequired, cfg.name + ": custom model definition");
      if (!cfg.param_overrides.empty()) {
        throw SimError(ErrorCode::InvalidArgument, "custom models take parameters from their own definition");
      }
      return *cfg.custom_model;
    case 0: return build_case0(detail::apply_overrides(Case0Params{}, cfg));
    case 1: return build_case1(detail::apply_overrides(case1_scenario_params(cfg.scenario_id), cfg));
    case 2: return build_case2(detail::apply_overrides(Case2Params{}, cfg));
    case 3: return build_case3(detail::apply_overrides(Case3Params{}, cfg));
    default: throw SimError(ErrorCode::UnknownScenario, "case " + std::to_string(cfg.case_id));
  }
}

inline AgentCounts initial_counts(const ScenarioConfig& cfg, const ModelSpec& model) {
  AgentCounts init;
  init.values.assign(model.species().size(), 0);
  for (const auto& [sp, n] : cfg.init) init.values[model.species_index(sp)] = n;
  return init;
}

inline std::vector<ScenarioConfig> scenario_registry() {
  std::vector<ScenarioConfig> out;

  ScenarioConfig c0;
  c0.name = "case0-demo";
  c0.description = "single-species tumour growth, a=1 alpha=0.5 b=0.1 beta=1";
  c0.case_id = 0;
  c0.init = {{species::Tumour.name, 10}};
  c0.horizon = 100.0;
  c0.census = {tumour_extinct_by(100.0)};
  out.push_back(c0);

  const char* case1_desc[] = {"treatment s=0.318, d=0.1908, b=0.002", "treatment s=0.318, d=2, b=0.004",
                              "treatment s=0.1181, d=0.3743, b=0.002", "no treatment, d=0.3743, b=0.002"};
  for (int s = 1; s <= 4; ++s) {
    ScenarioConfig c;
    c.name = "case1-s" + std::to_string(s);
    c.description = std::string("tumour/effector, ") + case1_desc[s - 1];
    c.case_id = 1;
    c.scenario_id = s;
    c.init = {{species::Tumour.name, 100}, {species::Effector.name, 5}};
    c.horizon = 100.0;
    c.census = {tumour_extinct_by(100.0), effector_extinct_by(100.0)};
    out.push_back(c);
  }

  ScenarioConfig c2;
  c2.name = "case2";
  c2.description = "tumour/effector/IL-2";
  c2.case_id = 2;
  c2.init = {{species::Tumour.name, 10000}, {species::Effector.name, 1000}, {species::IL2.name, 1000}};
  c2.horizon = 600.0;
  c2.census = {tumour_extinct_by(600.0), effector_extinct_by(600.0)};
  out.push_back(c2);

  ScenarioConfig c3;
  c3.name = "case3";
  c3.description = "tumour/effector/IL-2/TGF-beta";
  c3.case_id = 3;
  c3.init = {{species::Tumour.name, 10000},
             {species::Effector.name, 1000},
             {species::IL2.name, 1000},
             {species::TGFBeta.name, 0}};
  c3.horizon = 600.0;
  c3.census = {tumour_extinct_by(200.0), tumour_extinct_by(600.0), effector_extinct_by(600.0),
               species_max_below(species::TGFBeta.name, 1.0), species_max_below(species::TGFBeta.name, 3.0)};
  out.push_back(c3);
  return out;
}

inline ScenarioConfig find_scenario(std::string_view name) {
  for (auto& s : scenario_registry()) {
    if (s.name == name) return s;
  }
  throw SimError(ErrorCode::UnknownScenario, std::string(name));
}

}  // namespace dualsim
