#include <gtest/gtest.h>

#include "dualsim/config.hpp"
#include "dualsim/experiments.hpp"
#include "dualsim/io.hpp"

using namespace dualsim;

namespace {

ErrorCode code_of(std::string_view json) {
  try {
    parse_config(json);
  } catch (const SimError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << json;
  return ErrorCode::InvalidArgument;
}

ExperimentResult small_result() {
  ScenarioConfig cfg = find_scenario("case1-s1");
  cfg.n_reps = 3;
  cfg.horizon = 20.0;
  return run_experiment(cfg, 5);
}

}  // namespace

TEST(Csv, EmptyTrajectoryIsHeaderOnly) {
  Trajectory t;
  t.species = {"Tumour", "Effector"};
  t.columns = {{}, {}};
  EXPECT_EQ(trajectory_csv(t), "t,Tumour,Effector");
}

TEST(Csv, ZeroCase0Run) {
  ScenarioConfig cfg = find_scenario("case0-demo");
  cfg.init = {{"Tumour", 0}};
  cfg.horizon = 3.0;
  cfg.n_reps = 1;
  const ExperimentResult r = run_experiment(cfg, 1);
  EXPECT_EQ(emit_csv(r, "ode"), "t,Tumour\n0,0\n1,0\n2,0\n3,0");
  EXPECT_EQ(emit_csv(r, "abm-mean"), "t,Tumour\n0,0\n1,0\n2,0\n3,0");
  EXPECT_EQ(emit_csv(r, "abm-rep-0"), "t,Tumour\n0,0\n1,0\n2,0\n3,0");
}

TEST(Csv, RoundTripEverySeries) {
  const ExperimentResult r = small_result();
  std::vector<std::pair<std::string, const Trajectory*>> series{{"ode", &r.ode}, {"abm-mean", &r.abm.mean}};
  for (std::size_t k = 0; k < r.abm.size(); ++k) series.emplace_back("abm-rep-" + std::to_string(k), &r.abm.replications[k]);
  for (const auto& [which, traj] : series) {
    const CsvTable table = parse_csv(emit_csv(r, which));
    ASSERT_EQ(table.header.size(), traj->species.size() + 1) << which;
    ASSERT_EQ(table.rows.size(), traj->num_samples()) << which;
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
      EXPECT_EQ(table.rows[k][0], traj->times[k]);
      for (std::size_t i = 0; i < traj->species.size(); ++i) EXPECT_EQ(table.rows[k][i + 1], traj->columns[i][k]);
    }
  }
}

TEST(Csv, AgentCountsPrintAsIntegers) {
  const ExperimentResult r = small_result();
  const std::string csv = emit_csv(r, "abm-rep-1");
  const std::string rep = csv.substr(csv.find('\n'));
  EXPECT_EQ(rep.find('.'), std::string::npos);
  EXPECT_EQ(rep.find('e'), std::string::npos);
}

TEST(Csv, ReportRows) {
  const ExperimentResult r = small_result();
  const std::string report = emit_csv(r, "report");
  EXPECT_EQ(report.rfind("species,U,p,decision\nTumour,", 0), 0u);
  EXPECT_NE(report.find("\nEffector,"), std::string::npos);
}

TEST(Csv, UnknownSeries) {
  const ExperimentResult r = small_result();
  for (const char* which : {"abm-rep-3", "abm-rep-", "abm-rep-x", "nope"}) {
    try {
      emit_csv(r, which);
      FAIL() << which;
    } catch (const SimError& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoSuchSeries);
    }
  }
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 220.5445217516848, 6.162536184506216e-13, 1e22, 0.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(100.0), "100");
  EXPECT_THROW(parse_csv("t,X\n1,abc"), SyntaxError);
  EXPECT_THROW(parse_csv("t,X\n1"), SyntaxError);
}

TEST(Svg, OverlaysBothSeries) {
  const ExperimentResult r = small_result();
  const std::string svg = svg_plot(&r.ode, &r.abm.mean, "Tumour");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("days"), std::string::npos);
  EXPECT_NE(svg.find("ABM mean"), std::string::npos);
  std::size_t lines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_THROW(svg_plot(&r.ode, nullptr, "IL2"), SimError);
}

TEST(Config, ScenarioWithSeed) {
  const ConfigDocument doc = parse_config(R"({"scenario":"case1-s2","seed":7})");
  ASSERT_TRUE(doc.seed.has_value());
  EXPECT_EQ(*doc.seed, 7u);
  const ModelSpec m = build_model(doc.scenario);
  EXPECT_DOUBLE_EQ(m.param("b"), 0.004);
  EXPECT_DOUBLE_EQ(m.param("d"), 2.0);
}

TEST(Config, EmptyDocumentNeedsScenarioOrModel) {
  try {
    parse_config("{}");
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingRequired);
    EXPECT_NE(std::string(e.what()).find("scenario or model"), std::string::npos);
  }
}

TEST(Config, DefaultsAreFilled) {
  const ConfigDocument doc = parse_config(R"({"scenario":"case2","n_reps":50})");
  EXPECT_EQ(doc.scenario.horizon, 600.0);
  EXPECT_EQ(doc.scenario.engine.dt, 0.01);
  EXPECT_EQ(doc.scenario.ode_dt, 0.01);
  EXPECT_EQ(doc.scenario.alpha, 0.05);
  EXPECT_EQ(doc.scenario.n_reps, 50u);
  EXPECT_FALSE(doc.seed.has_value());
}

TEST(Config, FullDocument) {
  const ConfigDocument doc = parse_config(R"({
    "scenario": "case1-s3",
    "params": {"d": 0.5},
    "init": {"Tumour": 250},
    "engine": {"dt": 0.005, "backend": "per-agent", "rate_policy": "frozen-at-birth", "firing_law": "exponential"},
    "n_reps": 12, "horizon": 40, "alpha": 0.01, "pairing": "replication-endpoints",
    "outputs": {"dir": "out", "plot": true}
  })");
  const ScenarioConfig& c = doc.scenario;
  EXPECT_DOUBLE_EQ(build_model(c).param("d"), 0.5);
  EXPECT_EQ(initial_counts(c, build_model(c)).values, (std::vector<std::int64_t>{250, 5}));
  EXPECT_EQ(c.engine.backend, Backend::PerAgent);
  EXPECT_EQ(c.engine.rate_policy, RatePolicy::FrozenAtBirth);
  EXPECT_EQ(c.engine.firing_law, FiringLaw::Exponential);
  EXPECT_EQ(c.engine.dt, 0.005);
  EXPECT_EQ(c.n_reps, 12u);
  EXPECT_EQ(c.horizon, 40.0);
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.pairing, SamplePairing::ReplicationEndpoints);
  EXPECT_EQ(doc.out_dir, "out");
  EXPECT_TRUE(doc.plot);
}

TEST(Config, Rejections) {
  EXPECT_EQ(code_of(R"({"scenario":"case2","colour":"red"})"), ErrorCode::UnknownKey);
  EXPECT_EQ(code_of(R"({"scenario":"case2","engine":{"tau":1}})"), ErrorCode::UnknownKey);
  EXPECT_EQ(code_of(R"({"scenario":"case2","params":{"zeta":1}})"), ErrorCode::UnknownKey);
  EXPECT_EQ(code_of(R"({"scenario":"case2","init":{"Macrophage":1}})"), ErrorCode::UnboundIdentifier);
  EXPECT_EQ(code_of(R"({"scenario":"case7"})"), ErrorCode::UnknownScenario);
  EXPECT_EQ(code_of(R"({"scenario":"case2","n_reps":0})"), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of(R"({"scenario":"case2","engine":{"backend":"gillespie"}})"), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of(R"({"scenario":"case2","engine":{"rate_policy":"frozen-at-birth"}})"), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of(R"({"scenario":"case2","seed":-3})"), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of(R"([1,2])"), ErrorCode::InvalidArgument);
}

TEST(Config, SyntaxErrorCarriesPosition) {
  try {
    parse_config("{\"scenario\": \"case2\",, }");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.column(), 22u);
  }
}

TEST(Config, InlineModel) {
  const char* json = R"json({
    "model": {
      "name": "logistic-with-influx",
      "species": ["X", "Y"],
      "params": {"r": 0.5, "K": 100, "s": 2, "k": 0.01},
      "transitions": [
        {"name": "growth", "source": "X", "rate": "r*(1 - X/K)", "effect": "signed_branch"},
        {"name": "predation", "source": "Y", "rate": "k*X", "effect": "remove_random", "target": "X"},
        {"name": "influx", "source": "global", "rate": "s", "effect": "spawn", "target": "Y"},
        {"name": "decay", "source": "Y", "rate": "0.1", "effect": "remove_self"}
      ]
    },
    "params": {"s": 3},
    "init": {"X": 10},
    "horizon": 20, "n_reps": 4
  })json";
  const ConfigDocument doc = parse_config(json);
  const ScenarioConfig& c = doc.scenario;
  EXPECT_EQ(c.case_id, -1);
  EXPECT_EQ(c.name, "logistic-with-influx");
  const ModelSpec m = build_model(c);
  EXPECT_DOUBLE_EQ(m.param("s"), 3.0);
  EXPECT_EQ(initial_counts(c, m).values, (std::vector<std::int64_t>{10, 0}));
  // dX = X*r*(1-X/K) - k*X*Y ; dY = s - 0.1*Y
  const auto d = m.rhs()(0.0, std::vector<double>{10.0, 20.0});
  EXPECT_NEAR(d[0], 10 * 0.5 * 0.9 - 0.01 * 10 * 20, 1e-12);
  EXPECT_NEAR(d[1], 3.0 - 2.0, 1e-12);
  const ExperimentResult r = run_experiment(c, 1);
  EXPECT_EQ(r.ode.species, (std::vector<std::string>{"X", "Y"}));
}

TEST(Config, InlineModelErrors) {
  const std::string base = R"("species":["X"],"params":{"r":1},"transitions":[{"source":"X","rate":)";
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("r","effect":"spawn","target":"X"}]}})"), ErrorCode::MissingRequired);
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("r*/X","effect":"spawn","target":"X"}]},"init":{"X":1}})"),
            ErrorCode::SyntaxError);
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("q","effect":"spawn","target":"X"}]},"init":{"X":1}})"),
            ErrorCode::UnboundIdentifier);
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("r","effect":"spawn","target":"Z"}]},"init":{"X":1}})"),
            ErrorCode::UnboundIdentifier);
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("r","effect":"explode"}]},"init":{"X":1}})"),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of(R"({"model":{)" + base + R"("r","effect":"spawn"}]},"init":{"X":1}})"),
            ErrorCode::MissingRequired);
  EXPECT_EQ(code_of(R"({"scenario":"case2","model":{}})"), ErrorCode::InvalidArgument);
}
