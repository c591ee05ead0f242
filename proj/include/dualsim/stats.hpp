#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dualsim/core.hpp"
#include "dualsim/error.hpp"

namespace dualsim {

enum class Alternative { TwoSided, Less, Greater };

// Auto: exact null distribution when the pooled size is at most 20 and
// there are no ties, normal approximation otherwise.
enum class RankSumMethod { Auto, Exact, Normal };

struct RankSumResult {
  // Mann-Whitney U of the first sample: pairs (x_i, y_j) with x_i > y_j,
  // ties counting one half.
  double U = 0.0;
  double p = 1.0;
  bool exact = false;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
};

namespace detail {

struct Ranked {
  std::vector<double> ranks;       // midranks, in input order (x then y)
  std::vector<std::size_t> ties;   // sizes of tie groups larger than 1
};

inline Ranked midranks(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size() + y.size();
  std::vector<double> all;
  all.reserve(n);
  all.insert(all.end(), x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return all[a] < all[b]; });
  Ranked out;
  out.ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && all[order[j]] == all[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = rank;
    if (j - i > 1) out.ties.push_back(j - i);
    i = j;
  }
  return out;
}

// Number of ways to draw k distinct ranks from 1..n for every possible U,
// indexed by U = rank_sum - k(k+1)/2.
inline std::vector<std::uint64_t> rank_sum_counts(std::size_t k, std::size_t n) {
  const std::size_t max_u = k * (n - k);
  // dp[j][u]: subsets of size j (from the ranks seen so far) with U-offset u.
  std::vector<std::vector<std::uint64_t>> dp(k + 1, std::vector<std::uint64_t>(max_u + 1, 0));
  dp[0][0] = 1;
  for (std::size_t r = 1; r <= n; ++r) {
    for (std::size_t j = std::min(k, r); j >= 1; --j) {
      // Choosing rank r as the j-th smallest adds r - j to U.
      const std::size_t add = r - j;
      for (std::size_t u = max_u + 1; u-- > add;) dp[j][u] += dp[j - 1][u - add];
    }
  }
  return dp[k];
}

inline double normal_upper(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

// Mann-Whitney U / Wilcoxon rank-sum test with midranks for ties.
// Exact p-values by counting rank assignments when the pooled size is at
// most 20 and there are no ties; otherwise a normal approximation with tie
// and continuity corrections.
inline RankSumResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                                       Alternative alternative = Alternative::TwoSided,
                                       RankSumMethod method = RankSumMethod::Auto) {
  if (x.empty() || y.empty()) throw SimError(ErrorCode::EmptySample, "rank-sum test needs two non-empty samples");
  const auto ranked = detail::midranks(x, y);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double N = nx + ny;
  const double rank_sum = std::accumulate(ranked.ranks.begin(), ranked.ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);

  RankSumResult out;
  out.n_x = x.size();
  out.n_y = y.size();
  out.U = rank_sum - nx * (nx + 1.0) / 2.0;

  if (method == RankSumMethod::Exact && (!ranked.ties.empty() || x.size() + y.size() > 60)) {
    throw SimError(ErrorCode::InvalidArgument, "exact rank-sum p needs untied samples of pooled size <= 60");
  }
  const bool exact = method == RankSumMethod::Exact ||
                     (method == RankSumMethod::Auto && x.size() + y.size() <= 20 && ranked.ties.empty());
  if (exact) {
    const auto counts = detail::rank_sum_counts(x.size(), x.size() + y.size());
    const auto u = static_cast<std::size_t>(std::llround(out.U));
    std::uint64_t le = 0, ge = 0, total = 0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
      total += counts[v];
      if (v <= u) le += counts[v];
      if (v >= u) ge += counts[v];
    }
    const double t = static_cast<double>(total);
    switch (alternative) {
      case Alternative::TwoSided:
        out.p = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / t);
        break;
      case Alternative::Less: out.p = static_cast<double>(le) / t; break;
      case Alternative::Greater: out.p = static_cast<double>(ge) / t; break;
    }
    out.exact = true;
    return out;
  }

  double tie_term = 0.0;
  for (std::size_t t : ranked.ties) {
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double mean = nx * ny / 2.0;
  const double var = nx * ny / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (!(var > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double sd = std::sqrt(var);
  switch (alternative) {
    case Alternative::TwoSided: {
      const double z = std::max(0.0, std::fabs(out.U - mean) - 0.5) / sd;
      out.p = std::min(1.0, 2.0 * detail::normal_upper(z));
      break;
    }
    case Alternative::Greater: out.p = detail::normal_upper((out.U - mean - 0.5) / sd); break;
    case Alternative::Less: out.p = detail::normal_upper(-(out.U - mean + 0.5) / sd); break;
  }
  return out;
}

struct KsResult {
  double D = 0.0;
  double p = 1.0;
};

// Two-sample Kolmogorov-Smirnov test, asymptotic p-value with the
// Stephens small-sample correction.
inline KsResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw SimError(ErrorCode::EmptySample, "KS test needs two non-empty samples");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.D = d;
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  double sum = 0.0, sign = 1.0, prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) <= 1e-3 * prev || std::fabs(term) <= 1e-8 * sum) {
      out.p = std::clamp(sum, 0.0, 1.0);
      return out;
    }
    sign = -sign;
    prev = std::fabs(term);
  }
  out.p = 1.0;
  return out;
}

// ---------------------------------------------------------------------------

inline bool decide_reject(double p, double alpha) { return p < alpha; }

struct SpeciesComparison {
  std::string species;
  double U = 0.0;
  double p = 1.0;
  bool exact = false;
  bool reject = false;
};

struct ComparisonReport {
  std::vector<SpeciesComparison> rows;
  std::size_t n_ode = 0;
  std::size_t n_abm = 0;
  double alpha = 0.05;
  std::string scenario;
  std::uint64_t base_seed = 0;

  std::size_t rejections() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.reject; }));
  }
};

// How the two paradigms' outputs become rank-sum samples.
//   DailySeries:          every sample of the ODE trajectory vs every sample
//                         of the ABM mean trajectory.
//   ReplicationEndpoints: the ODE endpoint vs each replication's endpoint.
enum class SamplePairing { DailySeries, ReplicationEndpoints };

inline ComparisonReport compare_trajectories(const Trajectory& ode, const Trajectory& abm_mean, double alpha = 0.05) {
  if (ode.times != abm_mean.times) throw SimError(ErrorCode::GridMismatch, "time grids differ");
  if (ode.species != abm_mean.species) throw SimError(ErrorCode::GridMismatch, "species lists differ");
  ComparisonReport report;
  report.alpha = alpha;
  report.n_ode = ode.num_samples();
  report.n_abm = abm_mean.num_samples();
  for (std::size_t i = 0; i < ode.num_species(); ++i) {
    const auto r = wilcoxon_rank_sum(ode.columns[i], abm_mean.columns[i]);
    report.rows.push_back({ode.species[i], r.U, r.p, r.exact, decide_reject(r.p, alpha)});
  }
  return report;
}

inline ComparisonReport compare_endpoints(const Trajectory& ode, std::span<const Trajectory> reps, double alpha = 0.05) {
  if (reps.empty()) throw SimError(ErrorCode::EmptySample, "no replications");
  ComparisonReport report;
  report.alpha = alpha;
  report.n_ode = 1;
  report.n_abm = reps.size();
  for (std::size_t i = 0; i < ode.num_species(); ++i) {
    const std::vector<double> x{ode.columns[i].back()};
    std::vector<double> y;
    for (const auto& rep : reps) {
      if (rep.species != ode.species || rep.times.back() != ode.times.back()) {
        throw SimError(ErrorCode::GridMismatch, "replication grid differs from ODE grid");
      }
      y.push_back(rep.columns[i].back());
    }
    const auto r = wilcoxon_rank_sum(x, y);
    report.rows.push_back({ode.species[i], r.U, r.p, r.exact, decide_reject(r.p, alpha)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Extreme-case census

struct CensusPredicate {
  enum class Kind { ExtinctBy, MaxBelow };

  Kind kind = Kind::ExtinctBy;
  std::string species;
  double threshold = 0.0;  // a time for ExtinctBy, a level for MaxBelow

  std::string label() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    if (kind == Kind::ExtinctBy) {
      std::string lower = species;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      return lower + "-extinct-by(" + num(threshold) + ")";
    }
    return "species-max-below(" + species + "," + num(threshold) + ")";
  }

  bool matches(const Trajectory& traj) const {
    const auto col = traj.column(species);
    if (kind == Kind::ExtinctBy) {
      for (std::size_t k = 0; k < col.size() && traj.times[k] <= threshold + 1e-9; ++k) {
        if (col[k] == 0.0) return true;
      }
      return false;
    }
    return *std::max_element(col.begin(), col.end()) < threshold;
  }
};

inline CensusPredicate extinct_by(std::string species, double t) {
  return {CensusPredicate::Kind::ExtinctBy, std::move(species), t};
}
inline CensusPredicate tumour_extinct_by(double t) { return extinct_by(species::Tumour.name, t); }
inline CensusPredicate effector_extinct_by(double t) { return extinct_by(species::Effector.name, t); }
inline CensusPredicate species_max_below(std::string species, double level) {
  return {CensusPredicate::Kind::MaxBelow, std::move(species), level};
}

struct CensusRow {
  std::string predicate;
  std::size_t count = 0;
  std::size_t total = 0;
  double frequency = 0.0;
};

inline std::vector<CensusRow> extreme_case_census(std::span<const Trajectory> reps,
                                                  std::span<const CensusPredicate> predicates) {
  if (reps.empty()) throw SimError(ErrorCode::EmptySample, "census needs at least one replication");
  std::vector<CensusRow> rows;
  for (const auto& pred : predicates) {
    CensusRow row{pred.label(), 0, reps.size(), 0.0};
    for (const auto& rep : reps) row.count += pred.matches(rep) ? 1 : 0;
    row.frequency = static_cast<double>(row.count) / static_cast<double>(row.total);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dualsim
