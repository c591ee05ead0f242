#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dualsim/error.hpp"

namespace dualsim {

// Species are identified by name; a model's declaration order fixes the
// column order of every trajectory it produces.
struct SpeciesId {
  std::string name;

  friend bool operator==(const SpeciesId&, const SpeciesId&) = default;
};

namespace species {
inline const SpeciesId Tumour{"Tumour"};
inline const SpeciesId Effector{"Effector"};
inline const SpeciesId IL2{"IL2"};
inline const SpeciesId TGFBeta{"TGFBeta"};
}  // namespace species

// Quantities at one instant. Real-valued for the ODE paradigm, whole agents
// for the agent paradigm.
template <typename Quantity>
struct BasicPopulationState {
  double time = 0.0;
  std::vector<Quantity> values;

  std::size_t size() const noexcept { return values.size(); }
};

using OdeState = BasicPopulationState<double>;
using AgentCounts = BasicPopulationState<std::int64_t>;

// ---------------------------------------------------------------------------
// Parameter sets. Each exposes its fields by name so overrides, validation
// errors and model builders can refer to them symbolically.

using NamedValue = std::pair<std::string_view, double>;

struct Case0Params {
  double a = 1.0;      // growth coefficient /day
  double alpha = 0.5;  // proliferation exponent
  double b = 0.1;      // death coefficient /day
  double beta = 1.0;   // death exponent

  auto fields() const {
    return std::array<NamedValue, 4>{{{"a", a}, {"alpha", alpha}, {"b", b}, {"beta", beta}}};
  }
  auto mutable_fields() {
    return std::array<std::pair<std::string_view, double*>, 4>{
        {{"a", &a}, {"alpha", &alpha}, {"b", &b}, {"beta", &beta}}};
  }
};

struct Case1Params {
  double a = 1.636;    // tumour growth /day
  double b = 0.002;    // inverse carrying capacity /cell
  double n = 1.0;      // kill coefficient /(cell day)
  double p = 1.131;    // effector proliferation max /day
  double g = 20.19;    // half-saturation, cells
  double m = 0.00311;  // effector damage coefficient /(cell day)
  double d = 0.1908;   // apoptosis /day
  double s = 0.318;    // treatment influx cells/day

  auto fields() const {
    return std::array<NamedValue, 8>{{{"a", a},
                                      {"b", b},
                                      {"n", n},
                                      {"p", p},
                                      {"g", g},
                                      {"m", m},
                                      {"d", d},
                                      {"s", s}}};
  }
  auto mutable_fields() {
    return std::array<std::pair<std::string_view, double*>, 8>{{{"a", &a},
                                                                 {"b", &b},
                                                                 {"n", &n},
                                                                 {"p", &p},
                                                                 {"g", &g},
                                                                 {"m", &m},
                                                                 {"d", &d},
                                                                 {"s", &s}}};
  }
};

// The four case-1 scenarios differ only in b, d and s.
inline Case1Params case1_scenario_params(int scenario) {
  Case1Params params;
  switch (scenario) {
    case 1: params.b = 0.002; params.d = 0.1908; params.s = 0.318; break;
    case 2: params.b = 0.004; params.d = 2.0; params.s = 0.318; break;
    case 3: params.b = 0.002; params.d = 0.3743; params.s = 0.1181; break;
    case 4: params.b = 0.002; params.d = 0.3743; params.s = 0.0; break;
    default:
      throw SimError(ErrorCode::UnknownScenario,
                     "case 1 scenario " + std::to_string(scenario) + " (expected 1..4)");
  }
  return params;
}

struct Case2Params {
  double a = 0.18;
  double b = 1e-9;
  double c = 0.05;   // antigenicity /day
  double aa = 1.0;   // kill strength
  double g1 = 2e7;
  double g2 = 1e5;
  double g3 = 1000.0;
  double mu2 = 0.03;  // effector death /day
  double mu3 = 10.0;  // IL-2 loss /day
  double p1 = 0.1245;
  double p2 = 5.0;
  double s1 = 0.0;
  double s2 = 0.0;

  auto fields() const {
    return std::array<NamedValue, 13>{{{"a", a},
                                       {"b", b},
                                       {"c", c},
                                       {"aa", aa},
                                       {"g1", g1},
                                       {"g2", g2},
                                       {"g3", g3},
                                       {"mu2", mu2},
                                       {"mu3", mu3},
                                       {"p1", p1},
                                       {"p2", p2},
                                       {"s1", s1},
                                       {"s2", s2}}};
  }
  auto mutable_fields() {
    return std::array<std::pair<std::string_view, double*>, 13>{{{"a", &a},
                                                                  {"b", &b},
                                                                  {"c", &c},
                                                                  {"aa", &aa},
                                                                  {"g1", &g1},
                                                                  {"g2", &g2},
                                                                  {"g3", &g3},
                                                                  {"mu2", &mu2},
                                                                  {"mu3", &mu3},
                                                                  {"p1", &p1},
                                                                  {"p2", &p2},
                                                                  {"s1", &s1},
                                                                  {"s2", &s2}}};
  }
};

struct Case3Params {
  double a = 0.18;
  double K = 1e9;  // carrying capacity; not tabulated in the source, see README
  double aa = 1.0;
  double c = 0.035;
  double gamma = 10.0;   // recruitment inhibition /molecule
  double alpha = 0.001;  // IL-2 production inhibition /molecule
  double p1 = 0.1245;
  double q1 = 10.0;
  double q2 = 0.1121;
  double g1 = 2e7;
  double g2 = 1e5;
  double g3 = 2e7;
  double g4 = 1000.0;
  double p2 = 0.27;
  double p3 = 5.0;
  double p4 = 2.84;
  double theta = 1e6;  // critical tumour size for the TGF-beta switch, cells
  double mu1 = 0.03;
  double mu2 = 10.0;
  double mu3 = 10.0;

  auto fields() const {
    return std::array<NamedValue, 20>{{{"a", a},       {"K", K},         {"aa", aa},
                                       {"c", c},       {"gamma", gamma}, {"alpha", alpha},
                                       {"p1", p1},     {"q1", q1},       {"q2", q2},
                                       {"g1", g1},     {"g2", g2},       {"g3", g3},
                                       {"g4", g4},     {"p2", p2},       {"p3", p3},
                                       {"p4", p4},     {"theta", theta}, {"mu1", mu1},
                                       {"mu2", mu2},   {"mu3", mu3}}};
  }
  auto mutable_fields() {
    return std::array<std::pair<std::string_view, double*>, 20>{
        {{"a", &a},         {"K", &K},     {"aa", &aa},   {"c", &c},     {"gamma", &gamma},
         {"alpha", &alpha}, {"p1", &p1},   {"q1", &q1},   {"q2", &q2},   {"g1", &g1},
         {"g2", &g2},       {"g3", &g3},   {"g4", &g4},   {"p2", &p2},   {"p3", &p3},
         {"p4", &p4},       {"theta", &theta}, {"mu1", &mu1}, {"mu2", &mu2}, {"mu3", &mu3}}};
  }
};

namespace detail {

inline void require_non_negative(std::span<const NamedValue> fields, std::string_view set) {
  for (const auto& [name, value] : fields) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw SimError(ErrorCode::NegativeParameter,
                     std::string(set) + "." + std::string(name) + " = " + std::to_string(value));
    }
  }
}

inline void require_positive(std::span<const NamedValue> fields,
                             std::initializer_list<std::string_view> names, std::string_view set) {
  for (const auto& [name, value] : fields) {
    if (std::find(names.begin(), names.end(), name) != names.end() && value == 0.0) {
      throw SimError(ErrorCode::ZeroDenominator, std::string(set) + "." + std::string(name) + " is 0");
    }
  }
}

}  // namespace detail

inline const Case0Params& validate_params(const Case0Params& params) {
  const auto f = params.fields();
  detail::require_non_negative(f, "Case0Params");
  if (params.alpha <= 0.0 || params.beta <= 0.0) {
    throw SimError(ErrorCode::NegativeParameter, "Case0Params exponents must be > 0");
  }
  return params;
}

inline const Case1Params& validate_params(const Case1Params& params) {
  const auto f = params.fields();
  detail::require_non_negative(f, "Case1Params");
  detail::require_positive(f, {"g"}, "Case1Params");
  return params;
}

inline const Case2Params& validate_params(const Case2Params& params) {
  const auto f = params.fields();
  detail::require_non_negative(f, "Case2Params");
  detail::require_positive(f, {"g1", "g2", "g3"}, "Case2Params");
  return params;
}

inline const Case3Params& validate_params(const Case3Params& params) {
  const auto f = params.fields();
  detail::require_non_negative(f, "Case3Params");
  detail::require_positive(f, {"K", "g1", "g2", "g3", "g4", "q2", "theta"}, "Case3Params");
  return params;
}

// Sets a field by name; false if the set has no such field.
template <typename Params>
bool set_param(Params& params, std::string_view name, double value) {
  for (auto& [field, ptr] : params.mutable_fields()) {
    if (field == name) {
      *ptr = value;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

enum class Mode { Ode, Abm };

inline std::string_view to_string(Mode mode) { return mode == Mode::Ode ? "ODE" : "ABM"; }

// A sampled time series. columns[i][k] is species i at times[k].
struct Trajectory {
  Mode mode = Mode::Ode;
  std::vector<std::string> species;
  std::vector<double> times;
  std::vector<std::vector<double>> columns;
  // Number of times a negative value had to be clamped to zero.
  std::uint64_t clamp_events = 0;

  std::size_t num_samples() const noexcept { return times.size(); }
  std::size_t num_species() const noexcept { return species.size(); }

  std::size_t species_index(std::string_view name) const {
    for (std::size_t i = 0; i < species.size(); ++i) {
      if (species[i] == name) return i;
    }
    throw SimError(ErrorCode::NoSuchSeries, "species " + std::string(name));
  }

  std::span<const double> column(std::string_view name) const {
    return columns[species_index(name)];
  }

  double value_at(std::string_view name, std::size_t sample) const {
    return columns[species_index(name)].at(sample);
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Uniform sample grid 0, step, 2*step, ..., horizon. Each time is computed
// as index*step so grids built from the same inputs compare equal.
inline std::vector<double> uniform_grid(double horizon, double step) {
  if (!(step > 0.0) || !(horizon >= 0.0)) {
    throw SimError(ErrorCode::InvalidArgument, "grid needs step > 0 and horizon >= 0");
  }
  const auto n = static_cast<std::size_t>(std::llround(horizon / step));
  if (std::fabs(static_cast<double>(n) * step - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw SimError(ErrorCode::InvalidArgument, "horizon is not a multiple of the sample step");
  }
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k <= n; ++k) grid[k] = static_cast<double>(k) * step;
  return grid;
}

}  // namespace dualsim
