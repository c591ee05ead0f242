#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dualsim/experiments.hpp"
#include "dualsim/io.hpp"

using namespace dualsim;

namespace {

ScenarioConfig quick(std::string name, int reps = 10, double horizon = 30.0) {
  ScenarioConfig cfg = find_scenario(name);
  cfg.n_reps = static_cast<std::size_t>(reps);
  cfg.horizon = horizon;
  cfg.census = {tumour_extinct_by(horizon)};
  return cfg;
}

void expect_same(const ExperimentResult& a, const ExperimentResult& b) {
  EXPECT_EQ(a.scenario, b.scenario);
  EXPECT_EQ(a.ode, b.ode);
  EXPECT_EQ(a.abm.replications, b.abm.replications);
  EXPECT_EQ(a.abm.mean, b.abm.mean);
  for (const char* which : {"ode", "abm-mean", "report", "census"}) EXPECT_EQ(emit_csv(a, which), emit_csv(b, which));
}

}  // namespace

TEST(Experiment, EmptySystemAgreesEverywhere) {
  ScenarioConfig cfg = find_scenario("case1-s4");
  cfg.init = {{"Tumour", 0}, {"Effector", 0}};
  cfg.n_reps = 1;
  const ExperimentResult r = run_experiment(cfg, 3);
  EXPECT_EQ(r.ode.columns, r.abm.mean.columns);
  for (const auto& col : r.ode.columns) {
    for (double v : col) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(r.comparison.rejections(), 0u);
}

TEST(Experiment, SameSeedSameResult) {
  ScenarioConfig cfg = find_scenario("case1-s1");
  cfg.n_reps = 50;
  const ExperimentResult a = run_experiment(cfg, 42);
  const ExperimentResult b = run_experiment(cfg, 42);
  expect_same(a, b);
  const ExperimentResult c = run_experiment(cfg, 43);
  EXPECT_NE(a.abm.replications, c.abm.replications);
}

TEST(Experiment, Case2DefaultsFailToReject) {
  const ExperimentResult r = run_experiment(find_scenario("case2"), 1);
  ASSERT_EQ(r.comparison.rows.size(), 3u);
  for (const auto& row : r.comparison.rows) {
    EXPECT_GT(row.p, 0.05) << row.species;
    EXPECT_FALSE(row.reject);
  }
  EXPECT_EQ(r.comparison.n_ode, 601u);
}

TEST(Experiment, DoublingRepsLeavesOdeUnchanged) {
  ScenarioConfig cfg = quick("case1-s3", 5);
  const ExperimentResult a = run_experiment(cfg, 8);
  cfg.n_reps = 10;
  const ExperimentResult b = run_experiment(cfg, 8);
  EXPECT_EQ(a.ode, b.ode);
  EXPECT_EQ(a.ode_clamp_events, b.ode_clamp_events);
}

TEST(Experiment, ErrorsNameTheScenario) {
  ScenarioConfig cfg = quick("case2");
  cfg.param_overrides = {{"g2", 0.0}};
  try {
    run_experiment(cfg, 1);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroDenominator);
    EXPECT_NE(std::string(e.what()).find("scenario case2"), std::string::npos);
  }
}

TEST(Experiment, CensusIsReported) {
  const ExperimentResult r = run_experiment(quick("case1-s1", 20, 100.0), 5);
  ASSERT_EQ(r.census.size(), 1u);
  EXPECT_EQ(r.census[0].total, 20u);
  EXPECT_GT(r.census[0].count, 0u);
}

// With the tumour near 1e4 cells, TGF-beta production is a Poisson process of
// about 2.84e-4 per day, so a 600-day run sees none with probability
// exp(-0.17) ~ 0.84. Band is 4 binomial standard deviations over 200 reps.
TEST(Experiment, Case3TgfSilenceMatchesPoissonSurvival) {
  ScenarioConfig cfg = find_scenario("case3");
  cfg.n_reps = 200;
  const ModelSpec m = build_model(cfg);
  const Ensemble ens = run_ensemble(m, initial_counts(cfg, m), cfg.engine, cfg.horizon, cfg.n_reps, 19);
  const auto rows = extreme_case_census(ens.replications, std::vector<CensusPredicate>{species_max_below("TGFBeta", 1.0)});
  ASSERT_EQ(rows.size(), 1u);
  const double expected = std::exp(-2.84e-4 * cfg.horizon);
  const double sd = std::sqrt(expected * (1 - expected) / 200.0);
  EXPECT_NEAR(rows[0].frequency, expected, 4 * sd);
}

TEST(Sweep, FourCase1Scenarios) {
  std::vector<ScenarioConfig> cfgs;
  for (int s = 1; s <= 4; ++s) cfgs.push_back(quick("case1-s" + std::to_string(s), 4));
  const auto items = sweep(cfgs, 11);
  ASSERT_EQ(items.size(), 4u);
  for (const auto& it : items) EXPECT_TRUE(it.ok()) << it.error;

  std::vector<ScenarioConfig> reversed(cfgs.rbegin(), cfgs.rend());
  const auto back = sweep(reversed, 11);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& fwd = items[i];
    const auto& rev = back[3 - i];
    ASSERT_EQ(fwd.scenario, rev.scenario);
    expect_same(*fwd.result, *rev.result);
    EXPECT_EQ(fwd.result->base_seed, derive_seed(11, fwd.scenario));
  }
}

TEST(Sweep, InvalidConfigBecomesErrorEntry) {
  std::vector<ScenarioConfig> cfgs{quick("case1-s1", 3), quick("case1-s2", 3), quick("case1-s3", 3)};
  ScenarioConfig bad = quick("case1-s4", 3);
  bad.horizon = -1.0;
  cfgs.insert(cfgs.begin() + 1, bad);
  const auto items = sweep(cfgs, 2);
  ASSERT_EQ(items.size(), 4u);
  EXPECT_EQ(std::count_if(items.begin(), items.end(), [](const SweepItem& i) { return i.ok(); }), 3);
  EXPECT_FALSE(items[1].ok());
  EXPECT_NE(items[1].error.find("case1-s4"), std::string::npos);
  EXPECT_THROW(sweep({}, 1), SimError);
}

TEST(Seeds, DerivedSeedsDifferByName) {
  EXPECT_NE(derive_seed(1, "case1-s1"), derive_seed(1, "case1-s2"));
  EXPECT_EQ(derive_seed(1, "case2"), derive_seed(1, "case2"));
}
