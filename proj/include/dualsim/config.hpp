#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dualsim/error.hpp"
#include "dualsim/expr_parser.hpp"
#include "dualsim/model.hpp"
#include "dualsim/models.hpp"

namespace dualsim {

struct ConfigDocument {
  ScenarioConfig scenario;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool plot = false;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw SimError(ErrorCode::UnknownKey, std::string(where) + key);
  }
}

inline const json& expect_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw SimError(ErrorCode::InvalidArgument, std::string(where) + " must be an object");
  return j;
}

inline double number(const json& j, std::string_view key) {
  if (!j.is_number()) throw SimError(ErrorCode::InvalidArgument, std::string(key) + " must be a number");
  return j.get<double>();
}

inline std::int64_t integer(const json& j, std::string_view key) {
  if (!j.is_number_integer()) throw SimError(ErrorCode::InvalidArgument, std::string(key) + " must be an integer");
  return j.get<std::int64_t>();
}

inline std::string text(const json& j, std::string_view key) {
  if (!j.is_string()) throw SimError(ErrorCode::InvalidArgument, std::string(key) + " must be a string");
  return j.get<std::string>();
}

}  // namespace detail

inline Backend parse_backend(std::string_view s) {
  if (s == "tau-leap") return Backend::TauLeap;
  if (s == "per-agent") return Backend::PerAgent;
  throw SimError(ErrorCode::InvalidArgument, "backend '" + std::string(s) + "' (tau-leap|per-agent)");
}

inline RatePolicy parse_rate_policy(std::string_view s) {
  if (s == "live") return RatePolicy::Live;
  if (s == "frozen-at-birth") return RatePolicy::FrozenAtBirth;
  throw SimError(ErrorCode::InvalidArgument, "rate_policy '" + std::string(s) + "' (live|frozen-at-birth)");
}

inline FiringLaw parse_firing_law(std::string_view s) {
  if (s == "linear") return FiringLaw::Linear;
  if (s == "exponential") return FiringLaw::Exponential;
  throw SimError(ErrorCode::InvalidArgument, "firing_law '" + std::string(s) + "' (linear|exponential)");
}

inline SamplePairing parse_pairing(std::string_view s) {
  if (s == "daily-series") return SamplePairing::DailySeries;
  if (s == "replication-endpoints") return SamplePairing::ReplicationEndpoints;
  throw SimError(ErrorCode::InvalidArgument, "pairing '" + std::string(s) + "' (daily-series|replication-endpoints)");
}

inline EffectKind parse_effect(std::string_view s) {
  if (s == "spawn") return EffectKind::Spawn;
  if (s == "remove_self") return EffectKind::RemoveSelf;
  if (s == "remove_random") return EffectKind::RemoveRandom;
  if (s == "signed_branch") return EffectKind::SignedBranch;
  throw SimError(ErrorCode::InvalidArgument,
                 "effect '" + std::string(s) + "' (spawn|remove_self|remove_random|signed_branch)");
}

inline void apply_engine(EngineConfig& engine, const nlohmann::json& j) {
  using detail::number;
  detail::expect_object(j, "engine");
  detail::reject_unknown(j, {"dt", "backend", "rate_policy", "max_rate_dt", "sample_every", "firing_law", "threads"},
                         "engine.");
  if (j.contains("dt")) engine.dt = number(j["dt"], "engine.dt");
  if (j.contains("backend")) engine.backend = parse_backend(detail::text(j["backend"], "engine.backend"));
  if (j.contains("rate_policy")) {
    engine.rate_policy = parse_rate_policy(detail::text(j["rate_policy"], "engine.rate_policy"));
  }
  if (j.contains("max_rate_dt")) engine.max_rate_dt = number(j["max_rate_dt"], "engine.max_rate_dt");
  if (j.contains("sample_every")) engine.sample_every = number(j["sample_every"], "engine.sample_every");
  if (j.contains("firing_law")) engine.firing_law = parse_firing_law(detail::text(j["firing_law"], "engine.firing_law"));
  if (j.contains("threads")) {
    const auto n = detail::integer(j["threads"], "engine.threads");
    if (n < 0) throw SimError(ErrorCode::InvalidArgument, "engine.threads must be >= 0");
    engine.threads = static_cast<unsigned>(n);
  }
}

// Inline model: {"name", "species": [...], "params": {...}, "transitions": [
//   {"name", "source": species | "global", "rate": formula, "effect", "target"}]}
// Its ODE is the transition table's mean-field drift. `overrides` are the
// document's top-level "params", applied on top of the model's own values.
inline ModelSpec parse_model(const nlohmann::json& j, const nlohmann::json* overrides = nullptr) {
  using detail::text;
  detail::expect_object(j, "model");
  detail::reject_unknown(j, {"name", "species", "params", "transitions"}, "model.");
  if (!j.contains("species")) throw SimError(ErrorCode::MissingRequired, "model.species");
  if (!j.contains("transitions")) throw SimError(ErrorCode::MissingRequired, "model.transitions");
  const std::string name = j.contains("name") ? text(j["name"], "model.name") : "custom";

  std::vector<std::string> species;
  if (!j["species"].is_array() || j["species"].empty()) {
    throw SimError(ErrorCode::InvalidArgument, "model.species must be a non-empty array");
  }
  for (const auto& s : j["species"]) species.push_back(text(s, "model.species[]"));

  std::vector<std::string> param_names;
  std::vector<double> param_values;
  if (j.contains("params")) {
    for (const auto& [key, value] : detail::expect_object(j["params"], "model.params").items()) {
      const double v = detail::number(value, "model.params." + key);
      if (v < 0.0) throw SimError(ErrorCode::NegativeParameter, key);
      param_names.push_back(key);
      param_values.push_back(v);
    }
  }
  if (overrides) {
    for (const auto& [key, value] : overrides->items()) {
      const auto it = std::find(param_names.begin(), param_names.end(), key);
      if (it == param_names.end()) throw SimError(ErrorCode::UnknownKey, "params." + key);
      const double v = detail::number(value, "params." + key);
      if (v < 0.0) throw SimError(ErrorCode::NegativeParameter, key);
      param_values[static_cast<std::size_t>(it - param_names.begin())] = v;
    }
  }

  std::vector<TransitionDraft> drafts;
  if (!j["transitions"].is_array()) throw SimError(ErrorCode::InvalidArgument, "model.transitions must be an array");
  for (const auto& t : j["transitions"]) {
    detail::expect_object(t, "transition");
    detail::reject_unknown(t, {"name", "source", "rate", "effect", "target"}, "transition.");
    for (const char* req : {"source", "rate", "effect"}) {
      if (!t.contains(req)) throw SimError(ErrorCode::MissingRequired, std::string("transition.") + req);
    }
    TransitionDraft d;
    d.name = t.contains("name") ? text(t["name"], "transition.name") : "t" + std::to_string(drafts.size());
    const std::string source = text(t["source"], "transition.source");
    if (source != "global") {
      if (std::find(species.begin(), species.end(), source) == species.end()) {
        throw SimError(ErrorCode::UnboundIdentifier, "species " + source + " in transition " + d.name);
      }
      d.source = source;
    }
    try {
      d.rate = parse_formula(text(t["rate"], "transition.rate"), param_names, species);
    } catch (const SyntaxError& e) {
      throw SyntaxError(e.column(), "transition " + d.name + " rate: " + e.detail());
    }
    d.effect = parse_effect(text(t["effect"], "transition.effect"));
    if (t.contains("target")) {
      d.target = text(t["target"], "transition.target");
      if (std::find(species.begin(), species.end(), d.target) == species.end()) {
        throw SimError(ErrorCode::UnboundIdentifier, "species " + d.target + " in transition " + d.name);
      }
    } else if (d.effect == EffectKind::Spawn || d.effect == EffectKind::RemoveRandom) {
      throw SimError(ErrorCode::MissingRequired, "transition " + d.name + ": target");
    }
    drafts.push_back(std::move(d));
  }
  return ModelSpec(name, species, param_names, param_values, std::move(drafts), RhsFunction{});
}

// Parses a JSON configuration. Either "scenario" (a registry name) or
// "model" (an inline definition, which then needs "init") must be present.
inline ConfigDocument parse_config(std::string_view text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.byte, e.what());
  }
  detail::expect_object(j, "configuration");
  detail::reject_unknown(j,
                         {"scenario", "model", "params", "init", "engine", "n_reps", "horizon", "seed", "alpha",
                          "outputs", "pairing", "ode_dt"},
                         "");
  const bool has_scenario = j.contains("scenario");
  const bool has_model = j.contains("model");
  if (!has_scenario && !has_model) throw SimError(ErrorCode::MissingRequired, "scenario or model");
  if (has_scenario && has_model) throw SimError(ErrorCode::InvalidArgument, "give either scenario or model, not both");

  ConfigDocument doc;
  ScenarioConfig& cfg = doc.scenario;
  if (has_scenario) {
    cfg = find_scenario(detail::text(j["scenario"], "scenario"));
    if (j.contains("params")) {
      for (const auto& [key, value] : detail::expect_object(j["params"], "params").items()) {
        cfg.param_overrides.emplace_back(key, detail::number(value, "params." + key));
      }
    }
  } else {
    if (!j.contains("init")) throw SimError(ErrorCode::MissingRequired, "init (required for an inline model)");
    const json* overrides = j.contains("params") ? &detail::expect_object(j["params"], "params") : nullptr;
    auto model = std::make_shared<const ModelSpec>(parse_model(j["model"], overrides));
    cfg = ScenarioConfig{};
    cfg.name = model->name();
    cfg.description = "inline model";
    cfg.case_id = -1;
    cfg.custom_model = std::move(model);
  }

  if (j.contains("init")) {
    std::vector<std::string> declared;
    if (cfg.custom_model) {
      declared = cfg.custom_model->species();
    } else {
      declared = build_model(cfg).species();
    }
    std::vector<std::pair<std::string, std::int64_t>> init;
    // Species not listed in an inline model start at zero; for registry
    // scenarios the listed values replace the defaults one by one.
    if (!cfg.custom_model) init = cfg.init;
    for (const auto& [key, value] : detail::expect_object(j["init"], "init").items()) {
      if (std::find(declared.begin(), declared.end(), key) == declared.end()) {
        throw SimError(ErrorCode::UnboundIdentifier, "species " + key + " in init");
      }
      const auto n = detail::integer(value, "init." + key);
      auto it = std::find_if(init.begin(), init.end(), [&](const auto& p) { return p.first == key; });
      if (it != init.end()) {
        it->second = n;
      } else {
        init.emplace_back(key, n);
      }
    }
    cfg.init = std::move(init);
  }

  if (j.contains("engine")) apply_engine(cfg.engine, j["engine"]);
  if (j.contains("n_reps")) {
    const auto n = detail::integer(j["n_reps"], "n_reps");
    if (n < 1) throw SimError(ErrorCode::InvalidArgument, "n_reps must be >= 1");
    cfg.n_reps = static_cast<std::size_t>(n);
  }
  if (j.contains("horizon")) cfg.horizon = detail::number(j["horizon"], "horizon");
  if (j.contains("alpha")) cfg.alpha = detail::number(j["alpha"], "alpha");
  if (j.contains("ode_dt")) cfg.ode_dt = detail::number(j["ode_dt"], "ode_dt");
  if (j.contains("pairing")) cfg.pairing = parse_pairing(detail::text(j["pairing"], "pairing"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SimError(ErrorCode::InvalidArgument, "seed must be a non-negative integer");
    doc.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("outputs")) {
    const json& o = detail::expect_object(j["outputs"], "outputs");
    detail::reject_unknown(o, {"dir", "plot"}, "outputs.");
    if (o.contains("dir")) doc.out_dir = detail::text(o["dir"], "outputs.dir");
    if (o.contains("plot")) {
      if (!o["plot"].is_boolean()) throw SimError(ErrorCode::InvalidArgument, "outputs.plot must be a boolean");
      doc.plot = o["plot"].get<bool>();
    }
  }
  validate_scenario(cfg);
  // Surfaces unknown or invalid parameter overrides now rather than at run time.
  if (!cfg.custom_model) build_model(cfg);
  return doc;
}

}  // namespace dualsim
