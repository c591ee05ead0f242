#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "dualsim/core.hpp"
#include "dualsim/model.hpp"
#include "dualsim/random.hpp"

namespace dualsim {

enum class Backend { TauLeap, PerAgent };

// Per-step firing probability of a rate-triggered transition.
//   Linear:      rate*dt. The expected increment of a step is exactly
//                drift*dt, which keeps ensemble means on the ODE even when
//                rate*dt is not small (IL-2 loss has rate*dt = 0.1).
//   Exponential: 1 - exp(-rate*dt), the exact survival law of a constant
//                rate over the step.
enum class FiringLaw { Linear, Exponential };

struct EngineConfig {
  double dt = 0.01;
  Backend backend = Backend::TauLeap;
  RatePolicy rate_policy = RatePolicy::Live;
  // Steps are subdivided so that |rate|*h <= max_rate_dt on every channel.
  double max_rate_dt = 0.1;
  double sample_every = 1.0;
  FiringLaw firing_law = FiringLaw::Linear;
  // Worker threads for ensembles; 0 picks hardware concurrency.
  unsigned threads = 0;
};

inline const EngineConfig& validate_engine(const EngineConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw SimError(ErrorCode::InvalidArgument, "engine dt must be > 0");
  if (!(cfg.max_rate_dt > 0.0 && cfg.max_rate_dt < 1.0)) {
    throw SimError(ErrorCode::InvalidArgument, "max_rate_dt must lie in (0, 1)");
  }
  if (!(cfg.sample_every > 0.0)) throw SimError(ErrorCode::InvalidArgument, "sample_every must be > 0");
  const double ratio = cfg.sample_every / cfg.dt;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
    throw SimError(ErrorCode::InvalidArgument, "sample_every must be an integer multiple of dt");
  }
  if (cfg.backend == Backend::TauLeap && cfg.rate_policy == RatePolicy::FrozenAtBirth) {
    throw SimError(ErrorCode::InvalidArgument, "FrozenAtBirth needs the PerAgent backend");
  }
  return cfg;
}

inline double firing_probability(double rate_dt, FiringLaw law) {
  return law == FiringLaw::Linear ? std::min(1.0, rate_dt) : -std::expm1(-rate_dt);
}

namespace detail {

inline void require_counts(const AgentCounts& state, std::size_t arity) {
  if (state.values.size() != arity) {
    throw SimError(ErrorCode::InvalidArgument, "initial state has wrong species count");
  }
  for (auto v : state.values) {
    if (v < 0) throw SimError(ErrorCode::NegativeState, "negative agent count " + std::to_string(v));
  }
}

inline void require_rate(double rate, const TransitionSpec& t) {
  if (!std::isfinite(rate)) throw SimError(ErrorCode::NonFiniteState, "rate of " + t.name + " is not finite");
  if (rate < 0.0 && t.effect != EffectKind::SignedBranch) {
    throw SimError(ErrorCode::InvalidArgument, "negative rate on non-signed channel " + t.name);
  }
}

}  // namespace detail

// Count-level engine. Every rate in the case-study tables depends only on
// species totals, so agents of one species are exchangeable and a step can
// draw per-channel firing totals: Poisson for spawns, Binomial over the
// source population for removals.
class TauLeapEngine {
 public:
  TauLeapEngine(const ModelSpec& model, const EngineConfig& cfg) : model_(model), cfg_(cfg) {
    const auto nch = model.transitions().size();
    rates_.resize(nch);
    fired_.resize(nch);
    counts_.resize(model.species().size());
    avail_.resize(model.species().size());
  }

  // Advances `state` by dt, subdividing as needed. Returns clamp events.
  std::uint64_t advance(AgentCounts& state, double dt, SeededStream& rng) {
    std::uint64_t clamps = 0;
    double remaining = dt;
    while (remaining > 0.0) {
      const double h = substep(state.values, remaining, rng, clamps);
      remaining -= h;
      if (remaining < 1e-12 * dt) remaining = 0.0;
    }
    state.time += dt;
    return clamps;
  }

 private:
  double substep(std::vector<std::int64_t>& values, double remaining, SeededStream& rng, std::uint64_t& clamps) {
    const auto& transitions = model_.transitions();
    const auto& params = model_.param_values();
    for (std::size_t i = 0; i < values.size(); ++i) counts_[i] = static_cast<double>(values[i]);

    double max_rate = 0.0;
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      if (t.source && values[*t.source] == 0) {
        rates_[j] = 0.0;
        continue;
      }
      rates_[j] = t.rate.eval(params, counts_);
      detail::require_rate(rates_[j], t);
      if (t.source) max_rate = std::max(max_rate, std::fabs(rates_[j]));
    }
    double h = remaining;
    if (max_rate * h > cfg_.max_rate_dt) h = cfg_.max_rate_dt / max_rate;

    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      const double r = rates_[j];
      fired_[j] = 0;
      if (r == 0.0) continue;
      if (t.is_global()) {
        fired_[j] = rng.poisson(r * h);
        continue;
      }
      const auto n = values[*t.source];
      switch (t.effect) {
        case EffectKind::Spawn: fired_[j] = rng.poisson(static_cast<double>(n) * r * h); break;
        case EffectKind::RemoveSelf:
        case EffectKind::RemoveRandom: fired_[j] = rng.binomial(n, firing_probability(r * h, cfg_.firing_law)); break;
        case EffectKind::SignedBranch:
          fired_[j] = r > 0.0 ? rng.poisson(static_cast<double>(n) * r * h)
                              : -rng.binomial(n, firing_probability(-r * h, cfg_.firing_law));
          break;
      }
    }

    // Removals first, in channel order, each clamped to what is left.
    std::copy(values.begin(), values.end(), avail_.begin());
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      std::int64_t k = 0;
      if (t.is_removal()) k = fired_[j];
      else if (t.effect == EffectKind::SignedBranch && fired_[j] < 0) k = -fired_[j];
      if (k == 0) continue;
      auto& pool = avail_[t.affected()];
      const auto take = std::min(k, pool);
      if (take < k) ++clamps;
      pool -= take;
    }
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      if (t.effect == EffectKind::Spawn || (t.effect == EffectKind::SignedBranch && fired_[j] > 0)) {
        avail_[t.affected()] += fired_[j];
      }
    }
    std::copy(avail_.begin(), avail_.end(), values.begin());
    return h;
  }

  const ModelSpec& model_;
  EngineConfig cfg_;
  std::vector<double> rates_;
  std::vector<std::int64_t> fired_;
  std::vector<double> counts_;
  std::vector<std::int64_t> avail_;
};

// One tau-leap step of length dt.
inline AgentCounts step_tau_leap(const AgentCounts& state, const ModelSpec& model, double dt, SeededStream& rng,
                                 const EngineConfig& cfg = {}) {
  detail::require_counts(state, model.species().size());
  AgentCounts next = state;
  TauLeapEngine engine(model, cfg);
  engine.advance(next, dt, rng);
  return next;
}

// ---------------------------------------------------------------------------
// Per-agent engine

struct Agent {
  double birth_time = 0.0;
  bool alive = true;
};

// Individually represented agents, grouped by species. Each agent keeps the
// rates of its own channels as evaluated at its birth (used under
// FrozenAtBirth).
class AgentPopulation {
 public:
  AgentPopulation(const ModelSpec& model, const AgentCounts& init) : model_(&model) {
    detail::require_counts(init, model.species().size());
    const auto ns = model.species().size();
    by_species_.resize(ns);
    for (std::size_t j = 0; j < model.transitions().size(); ++j) {
      const auto& t = model.transitions()[j];
      if (t.source) by_species_[*t.source].push_back(j);
    }
    agents_.resize(ns);
    frozen_.resize(ns);
    std::vector<double> counts(init.values.begin(), init.values.end());
    for (std::size_t s = 0; s < ns; ++s) add_agents(s, init.values[s], init.time, counts);
  }

  std::size_t count(std::size_t species) const {
    return static_cast<std::size_t>(std::count_if(agents_[species].begin(), agents_[species].end(),
                                                  [](const Agent& a) { return a.alive; }));
  }

  AgentCounts counts(double time) const {
    AgentCounts out;
    out.time = time;
    for (std::size_t s = 0; s < agents_.size(); ++s) out.values.push_back(static_cast<std::int64_t>(count(s)));
    return out;
  }

  const std::vector<Agent>& agents(std::size_t species) const { return agents_[species]; }

  // Frozen rate of the k-th channel sourced at `species`, for agent `index`.
  double frozen_rate(std::size_t species, std::size_t index, std::size_t k) const {
    return frozen_[species][index * by_species_[species].size() + k];
  }

  const std::vector<std::size_t>& channels_of(std::size_t species) const { return by_species_[species]; }

  void add_agents(std::size_t s, std::int64_t n, double birth, std::span<const double> counts) {
    const auto& chans = by_species_[s];
    std::vector<double> rates(chans.size());
    for (std::size_t k = 0; k < chans.size(); ++k) {
      rates[k] = counts[s] > 0.0 ? model_->transitions()[chans[k]].rate.eval(model_->param_values(), counts) : 0.0;
    }
    for (std::int64_t i = 0; i < n; ++i) {
      agents_[s].push_back(Agent{birth, true});
      frozen_[s].insert(frozen_[s].end(), rates.begin(), rates.end());
    }
  }

  void kill(std::size_t s, std::size_t index) { agents_[s][index].alive = false; }

  // Drops dead agents, preserving order.
  void compact() {
    for (std::size_t s = 0; s < agents_.size(); ++s) {
      const auto width = by_species_[s].size();
      std::size_t w = 0;
      for (std::size_t i = 0; i < agents_[s].size(); ++i) {
        if (!agents_[s][i].alive) continue;
        if (w != i) {
          agents_[s][w] = agents_[s][i];
          std::copy_n(frozen_[s].begin() + static_cast<std::ptrdiff_t>(i * width), width,
                      frozen_[s].begin() + static_cast<std::ptrdiff_t>(w * width));
        }
        ++w;
      }
      agents_[s].resize(w);
      frozen_[s].resize(w * width);
    }
  }

 private:
  const ModelSpec* model_;
  std::vector<std::vector<std::size_t>> by_species_;
  std::vector<std::vector<Agent>> agents_;
  std::vector<std::vector<double>> frozen_;
};

// Agent-by-agent engine. Within a step agents act in species order, then
// index order, each trying its channels in declaration order; an agent
// removed earlier in the step does nothing further. Newborns join at the
// end of the step.
class PerAgentEngine {
 public:
  PerAgentEngine(const ModelSpec& model, const EngineConfig& cfg) : model_(model), cfg_(cfg) {}

  std::uint64_t advance(AgentPopulation& pop, double& time, double dt, SeededStream& rng) {
    double remaining = dt;
    std::uint64_t dropped = 0;
    while (remaining > 0.0) {
      const double h = substep(pop, time, remaining, rng, dropped);
      time += h;
      remaining -= h;
      if (remaining < 1e-12 * dt) remaining = 0.0;
    }
    return dropped;
  }

 private:
  RatePolicy policy(const TransitionSpec& t) const { return t.rate_policy.value_or(cfg_.rate_policy); }

  double substep(AgentPopulation& pop, double time, double remaining, SeededStream& rng, std::uint64_t& dropped) {
    const auto& transitions = model_.transitions();
    const auto& params = model_.param_values();
    const auto ns = model_.species().size();

    std::vector<double> counts(ns);
    for (std::size_t s = 0; s < ns; ++s) counts[s] = static_cast<double>(pop.count(s));

    std::vector<double> live(transitions.size(), 0.0);
    double max_rate = 0.0;
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      if (t.source && counts[*t.source] == 0.0) continue;
      live[j] = t.rate.eval(params, counts);
      detail::require_rate(live[j], t);
      if (t.source && policy(t) == RatePolicy::Live) max_rate = std::max(max_rate, std::fabs(live[j]));
    }
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& chans = pop.channels_of(s);
      for (std::size_t k = 0; k < chans.size(); ++k) {
        if (policy(transitions[chans[k]]) != RatePolicy::FrozenAtBirth) continue;
        for (std::size_t i = 0; i < pop.agents(s).size(); ++i) {
          if (pop.agents(s)[i].alive) max_rate = std::max(max_rate, std::fabs(pop.frozen_rate(s, i, k)));
        }
      }
    }
    double h = remaining;
    if (max_rate * h > cfg_.max_rate_dt) h = cfg_.max_rate_dt / max_rate;

    std::vector<std::int64_t> newborn(ns, 0);
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& chans = pop.channels_of(s);
      const std::size_t existing = pop.agents(s).size();
      for (std::size_t i = 0; i < existing; ++i) {
        for (std::size_t k = 0; k < chans.size() && pop.agents(s)[i].alive; ++k) {
          const auto& t = transitions[chans[k]];
          const double r = policy(t) == RatePolicy::Live ? live[chans[k]] : pop.frozen_rate(s, i, k);
          if (r == 0.0) continue;
          if (rng.uniform() >= firing_probability(std::fabs(r) * h, cfg_.firing_law)) continue;
          switch (t.effect) {
            case EffectKind::Spawn: ++newborn[t.target]; break;
            case EffectKind::RemoveSelf: pop.kill(s, i); break;
            case EffectKind::RemoveRandom:
              if (!remove_random(pop, t.target, rng)) ++dropped;
              break;
            case EffectKind::SignedBranch:
              if (r > 0.0) ++newborn[s];
              else pop.kill(s, i);
              break;
          }
        }
      }
    }
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto& t = transitions[j];
      if (!t.is_global() || live[j] == 0.0) continue;
      const auto k = rng.poisson(live[j] * h);
      for (std::int64_t f = 0; f < k; ++f) {
        if (t.effect == EffectKind::Spawn) ++newborn[t.target];
        else if (!remove_random(pop, t.target, rng)) ++dropped;
      }
    }

    pop.compact();
    std::vector<double> after(ns);
    for (std::size_t s = 0; s < ns; ++s) after[s] = static_cast<double>(pop.count(s) + static_cast<std::size_t>(newborn[s]));
    for (std::size_t s = 0; s < ns; ++s) pop.add_agents(s, newborn[s], time + h, after);
    return h;
  }

  // Message effect: removes one uniformly chosen live agent of `target`.
  static bool remove_random(AgentPopulation& pop, std::size_t target, SeededStream& rng) {
    const auto& agents = pop.agents(target);
    if (std::none_of(agents.begin(), agents.end(), [](const Agent& a) { return a.alive; })) return false;
    for (;;) {
      const auto idx = static_cast<std::size_t>(rng.uniform_index(agents.size()));
      if (agents[idx].alive) {
        pop.kill(target, idx);
        return true;
      }
    }
  }

  const ModelSpec& model_;
  EngineConfig cfg_;
};

// One per-agent step of length dt. Returns the population's new counts.
inline AgentCounts step_per_agent(AgentPopulation& pop, const ModelSpec& model, double time, double dt,
                                  SeededStream& rng, const EngineConfig& cfg = {}) {
  PerAgentEngine engine(model, cfg);
  engine.advance(pop, time, dt, rng);
  return pop.counts(time);
}

// Adds Poisson(rate*dt) new agents of `species` to the state.
inline AgentCounts apply_influx(const AgentCounts& state, std::size_t species, double rate, double dt,
                                SeededStream& rng) {
  if (!(rate >= 0.0)) throw SimError(ErrorCode::NegativeParameter, "influx rate must be >= 0");
  AgentCounts next = state;
  next.values.at(species) += rng.poisson(rate * dt);
  return next;
}

// ---------------------------------------------------------------------------

// One stochastic replication sampled every cfg.sample_every days from
// init.time to init.time + horizon.
inline Trajectory run_replication(const ModelSpec& model, const AgentCounts& init, const EngineConfig& cfg,
                                  double horizon, SeededStream& stream) {
  validate_engine(cfg);
  detail::require_counts(init, model.species().size());

  Trajectory traj;
  traj.mode = Mode::Abm;
  traj.species = model.species();
  traj.times = uniform_grid(horizon, cfg.sample_every);
  for (double& t : traj.times) t += init.time;
  traj.columns.assign(model.species().size(), {});
  for (auto& c : traj.columns) c.reserve(traj.times.size());

  const auto steps_per_sample = static_cast<std::size_t>(std::llround(cfg.sample_every / cfg.dt));
  auto record = [&traj](std::span<const std::int64_t> values) {
    for (std::size_t i = 0; i < values.size(); ++i) traj.columns[i].push_back(static_cast<double>(values[i]));
  };

  if (cfg.backend == Backend::TauLeap) {
    TauLeapEngine engine(model, cfg);
    AgentCounts state = init;
    record(state.values);
    for (std::size_t s = 1; s < traj.times.size(); ++s) {
      for (std::size_t k = 0; k < steps_per_sample; ++k) traj.clamp_events += engine.advance(state, cfg.dt, stream);
      record(state.values);
    }
  } else {
    PerAgentEngine engine(model, cfg);
    AgentPopulation pop(model, init);
    double time = init.time;
    record(init.values);
    for (std::size_t s = 1; s < traj.times.size(); ++s) {
      for (std::size_t k = 0; k < steps_per_sample; ++k) traj.clamp_events += engine.advance(pop, time, cfg.dt, stream);
      record(pop.counts(time).values);
    }
  }
  return traj;
}

struct Ensemble {
  std::vector<std::uint64_t> seeds;
  std::vector<Trajectory> replications;
  Trajectory mean;

  std::size_t size() const noexcept { return replications.size(); }
};

// Pointwise mean, summed in replication-index order.
inline Trajectory pointwise_mean(std::span<const Trajectory> reps) {
  if (reps.empty()) throw SimError(ErrorCode::EmptySample, "no replications to average");
  Trajectory mean;
  mean.mode = Mode::Abm;
  mean.species = reps.front().species;
  mean.times = reps.front().times;
  mean.columns.assign(mean.species.size(), std::vector<double>(mean.times.size(), 0.0));
  for (const auto& rep : reps) {
    if (rep.times != mean.times || rep.species != mean.species) {
      throw SimError(ErrorCode::GridMismatch, "replications disagree on grid or species");
    }
    for (std::size_t i = 0; i < mean.columns.size(); ++i) {
      for (std::size_t k = 0; k < mean.times.size(); ++k) mean.columns[i][k] += rep.columns[i][k];
    }
    mean.clamp_events += rep.clamp_events;
  }
  const double n = static_cast<double>(reps.size());
  for (auto& col : mean.columns) {
    for (double& v : col) v /= n;
  }
  return mean;
}

// n_reps replications; replication i uses seed base_seed + i. Replications
// may run on several threads but results are stored by index.
inline Ensemble run_ensemble(const ModelSpec& model, const AgentCounts& init, const EngineConfig& cfg,
                             double horizon, std::size_t n_reps, std::uint64_t base_seed) {
  if (n_reps < 1) throw SimError(ErrorCode::InvalidArgument, "n_reps must be >= 1");
  validate_engine(cfg);
  Ensemble ens;
  ens.seeds.resize(n_reps);
  for (std::size_t i = 0; i < n_reps; ++i) ens.seeds[i] = base_seed + i;
  ens.replications.resize(n_reps);

  unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_reps));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_reps);
  auto work = [&] {
    for (std::size_t i = next++; i < n_reps; i = next++) {
      try {
        SeededStream stream(ens.seeds[i]);
        ens.replications[i] = run_replication(model, init, cfg, horizon, stream);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ens.mean = pointwise_mean(ens.replications);
  return ens;
}

}  // namespace dualsim
