#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualsim/abm.hpp"
#include "dualsim/models.hpp"
#include "dualsim/ode.hpp"
#include "dualsim/random.hpp"
#include "dualsim/stats.hpp"

namespace dualsim {

struct ExperimentResult {
  std::string scenario;
  std::uint64_t base_seed = 0;
  Trajectory ode;
  Ensemble abm;
  ComparisonReport comparison;
  std::vector<CensusRow> census;
  std::uint64_t ode_clamp_events = 0;
  std::uint64_t abm_clamp_events = 0;
  // Not part of any serialized output.
  double wall_seconds = 0.0;
};

// Seed for a scenario inside a sweep: stable in the scenario's name, so a
// scenario gets the same stream wherever it sits in the list.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view scenario) {
  return base_seed ^ splitmix64(fnv1a64(scenario));
}

// Deterministic ODE baseline on the scenario's daily grid.
inline Trajectory run_ode(const ScenarioConfig& cfg, const ModelSpec& model) {
  const AgentCounts init = initial_counts(cfg, model);
  OdeState y0;
  y0.values.assign(init.values.begin(), init.values.end());
  Trajectory traj = integrate_fixed(model.rhs(), y0, cfg.horizon, cfg.ode_dt, cfg.engine.sample_every);
  traj.species = model.species();
  return traj;
}

// ODE run, ABM ensemble, rank-sum comparison and census for one scenario.
// Errors are rethrown with the scenario name prepended.
inline ExperimentResult run_experiment(const ScenarioConfig& cfg, std::uint64_t base_seed) {
  const auto started = std::chrono::steady_clock::now();
  try {
    validate_scenario(cfg);
    const ModelSpec model = build_model(cfg);
    ExperimentResult out;
    out.scenario = cfg.name;
    out.base_seed = base_seed;
    out.ode = run_ode(cfg, model);
    out.ode_clamp_events = out.ode.clamp_events;
    out.abm = run_ensemble(model, initial_counts(cfg, model), cfg.engine, cfg.horizon, cfg.n_reps, base_seed);
    out.abm_clamp_events = out.abm.mean.clamp_events;
    out.comparison = cfg.pairing == SamplePairing::DailySeries
                         ? compare_trajectories(out.ode, out.abm.mean, cfg.alpha)
                         : compare_endpoints(out.ode, out.abm.replications, cfg.alpha);
    out.comparison.scenario = cfg.name;
    out.comparison.base_seed = base_seed;
    if (!cfg.census.empty()) out.census = extreme_case_census(out.abm.replications, cfg.census);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
  } catch (const SimError& e) {
    throw SimError(e.code(), "scenario " + cfg.name + ": " + e.detail());
  }
}

struct SweepItem {
  std::string scenario;
  std::optional<ExperimentResult> result;
  std::string error;

  bool ok() const noexcept { return result.has_value(); }
};

// Independent experiments; scenario i runs with derive_seed(base_seed,
// name_i). A failing scenario yields an error entry and the sweep goes on.
inline std::vector<SweepItem> sweep(const std::vector<ScenarioConfig>& configs, std::uint64_t base_seed) {
  if (configs.empty()) throw SimError(ErrorCode::InvalidArgument, "sweep needs at least one scenario");
  std::vector<SweepItem> out;
  for (const auto& cfg : configs) {
    SweepItem item;
    item.scenario = cfg.name;
    try {
      item.result = run_experiment(cfg, derive_seed(base_seed, cfg.name));
    } catch (const std::exception& e) {
      item.error = e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace dualsim
