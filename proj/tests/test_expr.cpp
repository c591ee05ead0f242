#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dualsim/expr_parser.hpp"
#include "dualsim/models.hpp"

using namespace dualsim;

namespace {

const std::vector<std::string> kParams{"p", "g"};
const std::vector<std::string> kSpecies{"T", "E"};

double eval_text(std::string_view text, std::vector<double> params, std::vector<double> counts,
                 const std::vector<std::string>& pn = kParams, const std::vector<std::string>& sn = kSpecies) {
  return eval_rate(parse_rate_expr(text, pn, sn), counts, params);
}

}  // namespace

TEST(RateExpr, ConstantLeaf) {
  const RateExpr e = RateExpr::bind(Expr::constant(0.03), {}, {});
  EXPECT_EQ(eval_rate(e, std::vector<double>{1e6}, std::vector<double>{}), 0.03);
  EXPECT_EQ(eval_text("0.03", {1, 1}, {7, 8}), 0.03);
}

TEST(RateExpr, SaturatingProliferation) {
  const auto T = Expr::species("T");
  const RateExpr e = RateExpr::bind(Expr::param("p") * Expr::saturating(T, Expr::param("g")), kParams, kSpecies);
  const std::vector<double> params{1.131, 20.19};
  EXPECT_NEAR(eval_rate(e, std::vector<double>{20.19, 0}, params), 0.5655, 1e-12);
  EXPECT_NEAR(eval_rate(e, std::vector<double>{100, 0}, params), 1.131 * 100 / 120.19, 1e-15);
  EXPECT_NEAR(eval_rate(e, std::vector<double>{100, 0}, params), 0.94101, 1e-5);
}

TEST(RateExpr, UnboundNamesFailAtBind) {
  try {
    RateExpr::bind(Expr::param("q"), kParams, kSpecies);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundIdentifier);
  }
}

TEST(RateExpr, DivisionByZero) {
  const RateExpr e = RateExpr::bind(Expr::param("p") / Expr::param("g"), kParams, kSpecies);
  try {
    eval_rate(e, std::vector<double>{1, 1}, std::vector<double>{1.0, 0.0});
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivisionByZero);
  }
}

TEST(Parser, MatchesHandBuiltProliferation) {
  const std::vector<double> params{1.131, 20.19};
  const double parsed = eval_text("p*T/(g+T)", params, {100, 0});
  EXPECT_NEAR(parsed, 0.94101, 1e-5);
  const RateExpr hand =
      RateExpr::bind(Expr::param("p") * Expr::species("T") / (Expr::param("g") + Expr::species("T")), kParams, kSpecies);
  EXPECT_EQ(parsed, eval_rate(hand, std::vector<double>{100, 0}, params));
}

TEST(Parser, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(eval_text("1+2*3", {}, {}), 7.0);
  EXPECT_DOUBLE_EQ(eval_text("(1+2)*3", {}, {}), 9.0);
  EXPECT_DOUBLE_EQ(eval_text("8-3-2", {}, {}), 3.0);
  EXPECT_DOUBLE_EQ(eval_text("8/4/2", {}, {}), 1.0);
  EXPECT_DOUBLE_EQ(eval_text("2^3^2", {}, {}), 512.0);
  EXPECT_DOUBLE_EQ(eval_text("-2^2", {}, {}), -4.0);
  EXPECT_DOUBLE_EQ(eval_text("2*-3", {}, {}), -6.0);
  EXPECT_DOUBLE_EQ(eval_text("  1 +\t2 ", {}, {}), 3.0);
  EXPECT_DOUBLE_EQ(eval_text("1.5e2", {}, {}), 150.0);
  EXPECT_DOUBLE_EQ(eval_text("T^0.5", {0, 0}, {16, 0}), 4.0);
}

TEST(Parser, ParametersShadowSpecies) {
  const std::vector<std::string> pn{"T"};
  EXPECT_DOUBLE_EQ(eval_text("T", {3.0}, {100.0, 0.0}, pn, kSpecies), 3.0);
}

TEST(Parser, SyntaxErrorsReportColumn) {
  try {
    parse_rate_expr("p*/T", kParams, kSpecies);
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.column(), 3u);
  }
  const std::pair<const char*, std::size_t> cases[] = {{"", 1}, {"(p", 3}, {"p)", 2}, {"p $ g", 3}, {"1+", 3}};
  for (const auto& [text, col] : cases) {
    try {
      parse_rate_expr(text, kParams, kSpecies);
      FAIL() << text;
    } catch (const SyntaxError& e) {
      EXPECT_EQ(e.column(), col) << text;
    }
  }
}

TEST(Parser, UnknownIdentifier) {
  try {
    parse_rate_expr("p*X", kParams, kSpecies);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundIdentifier);
    EXPECT_NE(std::string(e.what()).find('X'), std::string::npos);
  }
}

// Every channel of the built-in models, written out as text, evaluates like
// the hand-built expression.
TEST(Parser, AgreesWithBuiltInVocabulary) {
  struct Row {
    const ModelSpec model;
    std::vector<std::pair<std::string, std::string>> channels;
  };
  const std::vector<Row> rows{
      {build_case0(Case0Params{}), {{"tumour_net_growth", "a*Tumour^(alpha-1) - b*Tumour^(beta-1)"}}},
      {build_case1(1),
       {{"tumour_net_growth", "a*(1-b*Tumour)"},
        {"tumour_killed_by_effector", "n*Effector"},
        {"cause_effector_damage", "m*Effector"},
        {"effector_proliferation", "p*Tumour/(g+Tumour)"},
        {"effector_death", "d"},
        {"treatment", "s"}}},
      {build_case2(),
       {{"tumour_net_growth", "a*(1-b*Tumour)"},
        {"effector_kills_tumour", "aa*Tumour/(g2+Tumour)"},
        {"effector_recruitment", "c"},
        {"effector_proliferation", "p1*IL2/(g1+IL2)"},
        {"effector_death", "mu2"},
        {"il2_production", "p2*Tumour/(g3+Tumour)"},
        {"il2_loss", "mu3"}}},
      {build_case3(),
       {{"effector_net_proliferation", "(p1 - q1*TGFBeta/(q2+TGFBeta)) * IL2/(g1+IL2)"},
        {"effector_death", "mu1"},
        {"effector_kills_tumour", "aa*Tumour/(g2+Tumour)"},
        {"il2_production", "p3*Tumour/((g4+Tumour)*(1+alpha*TGFBeta))"},
        {"tumour_net_growth", "a*(1-Tumour/K)"},
        {"tgf_production", "p4*Tumour/(theta^2+Tumour^2)"},
        {"tumour_growth_stimulation", "p2*TGFBeta/(g3+TGFBeta)"},
        {"effector_recruitment", "c/(1+gamma*TGFBeta)"},
        {"il2_loss", "mu2"},
        {"tgf_decay", "mu3"}}},
  };
  SeededStream rng(4);
  for (const auto& row : rows) {
    const ModelSpec& m = row.model;
    for (int k = 0; k < 50; ++k) {
      std::vector<double> y(m.species().size());
      for (double& v : y) v = 1.0 + std::pow(10.0, 6.0 * rng.uniform());
      for (const auto& [name, text] : row.channels) {
        const RateExpr parsed = parse_rate_expr(text, m.param_names(), m.species());
        const auto it = std::find_if(m.transitions().begin(), m.transitions().end(),
                                     [&](const TransitionSpec& t) { return t.name == name; });
        ASSERT_NE(it, m.transitions().end()) << name;
        const double want = eval_rate(it->rate, y, m.param_values());
        const double got = eval_rate(parsed, y, m.param_values());
        EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::fabs(want))) << m.name() << "/" << name;
      }
    }
  }
}
