#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dualsim/random.hpp"
#include "dualsim/stats.hpp"

using namespace dualsim;

namespace {

// Exact two-sided p by enumerating every way of splitting the pooled
// values into groups of |x| and |y|, counting U pair by pair.
double enumerated_p(const std::vector<double>& x, const std::vector<double>& y, Alternative alt) {
  std::vector<double> pool(x);
  pool.insert(pool.end(), y.begin(), y.end());
  const std::size_t n = pool.size(), k = x.size();
  auto pair_u = [](const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double ai : a) {
      for (double bj : b) u += ai > bj ? 1.0 : (ai == bj ? 0.5 : 0.0);
    }
    return u;
  };
  const double observed = pair_u(x, y);
  std::size_t le = 0, ge = 0, total = 0;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? a : b).push_back(pool[i]);
    const double u = pair_u(a, b);
    ++total;
    le += u <= observed ? 1 : 0;
    ge += u >= observed ? 1 : 0;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  const double t = static_cast<double>(total);
  switch (alt) {
    case Alternative::Less: return static_cast<double>(le) / t;
    case Alternative::Greater: return static_cast<double>(ge) / t;
    default: return std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / t);
  }
}

std::vector<double> distinct_values(SeededStream& rng, std::size_t n, std::vector<double>& used) {
  std::vector<double> out;
  while (out.size() < n) {
    const double v = static_cast<double>(rng.uniform_index(1000));
    if (std::find(used.begin(), used.end(), v) != used.end()) continue;
    used.push_back(v);
    out.push_back(v);
  }
  return out;
}

Trajectory series(std::vector<std::string> species, std::vector<std::vector<double>> cols) {
  Trajectory t;
  t.species = std::move(species);
  t.columns = std::move(cols);
  for (std::size_t k = 0; k < t.columns[0].size(); ++k) t.times.push_back(static_cast<double>(k));
  return t;
}

}  // namespace

TEST(RankSum, SeparatedTriples) {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  const auto r = wilcoxon_rank_sum(x, y);
  EXPECT_EQ(r.U, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_DOUBLE_EQ(r.p, 0.1);
  EXPECT_DOUBLE_EQ(wilcoxon_rank_sum(x, y, Alternative::Less).p, 0.05);
  EXPECT_DOUBLE_EQ(wilcoxon_rank_sum(x, y, Alternative::Greater).p, 1.0);
}

TEST(RankSum, IdenticalSamplesDoNotReject) {
  const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  const auto r = wilcoxon_rank_sum(x, x);
  EXPECT_GE(r.p, 0.99);
  EXPECT_FALSE(decide_reject(r.p, 0.05));
  const std::vector<double> constant(30, 2.0);
  EXPECT_EQ(wilcoxon_rank_sum(constant, constant).p, 1.0);
}

TEST(RankSum, ExactMatchesEnumerationForSmallSamples) {
  SeededStream rng(1);
  for (std::size_t nx = 1; nx <= 5; ++nx) {
    for (std::size_t ny = 1; ny <= 5; ++ny) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> used;
        const auto x = distinct_values(rng, nx, used);
        const auto y = distinct_values(rng, ny, used);
        for (Alternative alt : {Alternative::TwoSided, Alternative::Less, Alternative::Greater}) {
          const auto r = wilcoxon_rank_sum(x, y, alt);
          ASSERT_TRUE(r.exact);
          EXPECT_EQ(r.p, enumerated_p(x, y, alt)) << nx << "x" << ny;
        }
      }
    }
  }
}

TEST(RankSum, NullDistributionCountsAreBinomialTotals) {
  for (std::size_t n = 1; n <= 20; ++n) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto c = detail::rank_sum_counts(k, n);
      const std::uint64_t total = std::accumulate(c.begin(), c.end(), std::uint64_t{0});
      double choose = 1.0;
      for (std::size_t i = 0; i < k; ++i) choose = choose * static_cast<double>(n - i) / static_cast<double>(i + 1);
      EXPECT_EQ(static_cast<double>(total), std::round(choose));
      for (std::size_t u = 0; u < c.size(); ++u) EXPECT_EQ(c[u], c[c.size() - 1 - u]);
    }
  }
}

TEST(RankSum, SymmetricInArguments) {
  SeededStream rng(2);
  for (int i = 0; i < 100; ++i) {
    const std::size_t nx = 1 + rng.uniform_index(30), ny = 1 + rng.uniform_index(30);
    std::vector<double> x(nx), y(ny);
    for (double& v : x) v = static_cast<double>(rng.uniform_index(50));
    for (double& v : y) v = static_cast<double>(rng.uniform_index(50)) + 3.0;
    EXPECT_NEAR(wilcoxon_rank_sum(x, y).p, wilcoxon_rank_sum(y, x).p, 1e-12);
  }
}

TEST(RankSum, ExactAndNormalAgreeAtSizeTen) {
  SeededStream rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> used;
    const auto x = distinct_values(rng, 10, used);
    const auto y = distinct_values(rng, 10, used);
    const double exact = wilcoxon_rank_sum(x, y, Alternative::TwoSided, RankSumMethod::Exact).p;
    const double normal = wilcoxon_rank_sum(x, y, Alternative::TwoSided, RankSumMethod::Normal).p;
    EXPECT_NEAR(exact, normal, 0.02);
  }
}

TEST(RankSum, ShiftingYUpNeverRaisesLowerTailP) {
  SeededStream rng(4);
  std::vector<double> x(15), y(12);
  for (double& v : x) v = rng.uniform() * 10.0;
  for (double& v : y) v = rng.uniform() * 10.0;
  double prev = 1.1;
  for (double shift = -12.0; shift <= 12.0; shift += 0.5) {
    std::vector<double> ys(y);
    for (double& v : ys) v += shift;
    const double p = wilcoxon_rank_sum(x, ys, Alternative::Less).p;
    EXPECT_LE(p, prev + 1e-15) << shift;
    prev = p;
  }
}

TEST(RankSum, EmptySampleRejected) {
  const std::vector<double> x{1.0}, none;
  try {
    wilcoxon_rank_sum(x, none);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySample);
  }
  const std::vector<double> tied{1.0, 1.0};
  EXPECT_THROW(wilcoxon_rank_sum(tied, x, Alternative::TwoSided, RankSumMethod::Exact), SimError);
}

TEST(RankSum, MidranksForTies) {
  const std::vector<double> x{1, 2, 2}, y{2, 3};
  const auto ranked = detail::midranks(x, y);
  EXPECT_EQ(ranked.ranks, (std::vector<double>{1, 3, 3, 3, 5}));
  const auto r = wilcoxon_rank_sum(x, y);
  EXPECT_FALSE(r.exact);
  EXPECT_DOUBLE_EQ(r.U, 1.0);  // (2,2),(2,2) half each; nothing strictly greater
}

TEST(Compare, SelfComparisonFailsToReject) {
  const Trajectory t = series({"Tumour", "Effector"}, {{1, 5, 9, 4, 2}, {0, 0, 1, 3, 3}});
  const auto report = compare_trajectories(t, t);
  EXPECT_EQ(report.rejections(), 0u);
  for (const auto& row : report.rows) EXPECT_GE(row.p, 0.99);
}

TEST(Compare, ExtremeSeparationRejects) {
  const Trajectory zeros = series({"X"}, {std::vector<double>(100, 0.0)});
  const Trajectory hundreds = series({"X"}, {std::vector<double>(100, 100.0)});
  const auto report = compare_trajectories(zeros, hundreds);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_LT(report.rows[0].p, 1e-6);
  EXPECT_TRUE(report.rows[0].reject);
}

TEST(Compare, DecisionIsPureFunctionOfPAndAlpha) {
  const Trajectory a = series({"X", "Y"}, {{1, 2, 3, 4, 5, 6, 7, 8}, {1, 1, 2, 2, 3, 3, 4, 4}});
  const Trajectory b = series({"X", "Y"}, {{3, 4, 5, 6, 7, 8, 9, 10}, {2, 2, 3, 3, 4, 4, 5, 5}});
  for (double alpha : {0.001, 0.05, 0.2, 0.5}) {
    for (const auto& row : compare_trajectories(a, b, alpha).rows) EXPECT_EQ(row.reject, row.p < alpha);
  }
  EXPECT_TRUE(decide_reject(0.049, 0.05));
  EXPECT_FALSE(decide_reject(0.05, 0.05));
}

TEST(Compare, GridMismatch) {
  const Trajectory a = series({"X"}, {{1, 2, 3}});
  Trajectory b = series({"X"}, {{1, 2, 3, 4}});
  try {
    compare_trajectories(a, b);
    FAIL();
  } catch (const SimError& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(Compare, EndpointsPairing) {
  const Trajectory ode = series({"X"}, {{0, 10}});
  std::vector<Trajectory> reps;
  for (int k = 0; k < 10; ++k) reps.push_back(series({"X"}, {{0, 5.0 + k}}));
  const auto report = compare_endpoints(ode, reps);
  EXPECT_EQ(report.n_ode, 1u);
  EXPECT_EQ(report.n_abm, 10u);
  EXPECT_FALSE(report.rows[0].reject);
}

TEST(Ks, IdenticalAndSeparated) {
  std::vector<double> a(100), b(100);
  std::iota(a.begin(), a.end(), 0.0);
  std::iota(b.begin(), b.end(), 1000.0);
  EXPECT_EQ(ks_two_sample(a, a).D, 0.0);
  EXPECT_GT(ks_two_sample(a, a).p, 0.99);
  EXPECT_EQ(ks_two_sample(a, b).D, 1.0);
  EXPECT_LT(ks_two_sample(a, b).p, 1e-10);
}

TEST(Ks, NullPValuesAreNotTooSmall) {
  SeededStream rng(5);
  int small = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(200), b(200);
    for (double& v : a) v = rng.uniform();
    for (double& v : b) v = rng.uniform();
    small += ks_two_sample(a, b).p < 0.05 ? 1 : 0;
  }
  EXPECT_LE(small, 22);  // about 10 expected
}

TEST(Census, ZeroEnsembleIsExtinctAtTimeZero) {
  std::vector<Trajectory> reps(5, series({"Tumour"}, {{0, 0, 0}}));
  const std::vector<CensusPredicate> preds{tumour_extinct_by(0.0)};
  const auto rows = extreme_case_census(reps, preds);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].predicate, "tumour-extinct-by(0)");
  EXPECT_EQ(rows[0].count, 5u);
  EXPECT_DOUBLE_EQ(rows[0].frequency, 1.0);
}

TEST(Census, PredicatesAndLabels) {
  const Trajectory t = series({"Tumour", "TGFBeta"}, {{5, 3, 0, 2}, {0, 1, 0, 0}});
  EXPECT_FALSE(tumour_extinct_by(1.0).matches(t));
  EXPECT_TRUE(tumour_extinct_by(2.0).matches(t));
  EXPECT_FALSE(species_max_below("TGFBeta", 1.0).matches(t));
  EXPECT_TRUE(species_max_below("TGFBeta", 3.0).matches(t));
  EXPECT_EQ(species_max_below("TGFBeta", 2.5).label(), "species-max-below(TGFBeta,2.5)");
  EXPECT_EQ(effector_extinct_by(600).label(), "effector-extinct-by(600)");
  EXPECT_THROW(extreme_case_census(std::vector<Trajectory>{}, std::vector<CensusPredicate>{}), SimError);
  EXPECT_THROW(extinct_by("IL2", 1.0).matches(t), SimError);
}
