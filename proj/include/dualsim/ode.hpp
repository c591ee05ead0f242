#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dualsim/core.hpp"
#include "dualsim/error.hpp"

namespace dualsim {

// Maps (t, y) to dy/dt. `arity` is the number of species.
struct RhsFunction {
  std::size_t arity = 0;
  std::function<void(double t, std::span<const double> y, std::span<double> dydt)> eval;

  std::vector<double> operator()(double t, std::span<const double> y) const {
    std::vector<double> out(arity);
    eval(t, y, out);
    return out;
  }
};

namespace detail {

inline void require_state(std::span<const double> y, std::size_t arity) {
  if (y.size() != arity) {
    throw SimError(ErrorCode::InvalidArgument,
                   "state has " + std::to_string(y.size()) + " values, expected " + std::to_string(arity));
  }
  for (double v : y) {
    if (!(v >= 0.0)) throw SimError(ErrorCode::NegativeState, "state value " + std::to_string(v));
  }
}

// Unchecked right-hand sides; the integrators call these on Runge-Kutta
// stage states, which may dip marginally below zero.

inline std::array<double, 1> case0(std::span<const double> y, const Case0Params& p) {
  const double T = std::max(y[0], 0.0);
  return {p.a * std::pow(T, p.alpha) - p.b * std::pow(T, p.beta)};
}

inline std::array<double, 2> case1(std::span<const double> y, const Case1Params& p) {
  const double T = y[0];
  const double E = y[1];
  return {
      p.a * T * (1.0 - p.b * T) - p.n * T * E,
      p.p * T * E / (p.g + T) - p.m * T * E - p.d * E + p.s,
  };
}

inline std::array<double, 3> case2(std::span<const double> y, const Case2Params& p) {
  const double T = y[0];
  const double E = y[1];
  const double I = y[2];
  return {
      p.a * T * (1.0 - p.b * T) - p.aa * E * T / (p.g2 + T),
      p.c * T - p.mu2 * E + p.p1 * E * I / (p.g1 + I) + p.s1,
      p.p2 * E * T / (p.g3 + T) - p.mu3 * I + p.s2,
  };
}

}  // namespace detail

// Net per-effector proliferation factor of the four-species model,
// (p1 - q1*S/(q2+S)) * I/(g1+I). The TGF-beta anti-proliferative structure
// is reconstructed, so it lives only here and in the matching rate builder
// (models.hpp, case3_net_proliferation_expr).
inline double case3_net_proliferation(double I, double S, const Case3Params& p) {
  return (p.p1 - p.q1 * S / (p.q2 + S)) * I / (p.g1 + I);
}

namespace detail {

inline std::array<double, 4> case3(std::span<const double> y, const Case3Params& p) {
  const double T = y[0];
  const double E = y[1];
  const double I = y[2];
  const double S = y[3];
  return {
      p.a * T * (1.0 - T / p.K) - p.aa * E * T / (p.g2 + T) + p.p2 * S * T / (p.g3 + S),
      p.c * T / (1.0 + p.gamma * S) - p.mu1 * E + case3_net_proliferation(I, S, p) * E,
      p.p3 * E * T / ((p.g4 + T) * (1.0 + p.alpha * S)) - p.mu2 * I,
      p.p4 * T * T / (p.theta * p.theta + T * T) - p.mu3 * S,
  };
}

}  // namespace detail

// Single-species tumour growth: dT/dt = a*T^alpha - b*T^beta.
inline std::array<double, 1> rhs_case0(std::span<const double> state, const Case0Params& params) {
  detail::require_state(state, 1);
  return detail::case0(state, params);
}

// Tumour/effector: state {T, E}.
inline std::array<double, 2> rhs_case1(std::span<const double> state, const Case1Params& params) {
  detail::require_state(state, 2);
  return detail::case1(state, params);
}

// Tumour/effector/IL-2: state {T, E, I}. Output order follows the state.
inline std::array<double, 3> rhs_case2(std::span<const double> state, const Case2Params& params) {
  detail::require_state(state, 3);
  return detail::case2(state, params);
}

// Tumour/effector/IL-2/TGF-beta: state {T, E, I, S}.
inline std::array<double, 4> rhs_case3(std::span<const double> state, const Case3Params& params) {
  detail::require_state(state, 4);
  return detail::case3(state, params);
}

template <std::size_t N, typename Params>
RhsFunction make_rhs(std::array<double, N> (*fn)(std::span<const double>, const Params&), Params params) {
  return RhsFunction{N, [fn, params](double, std::span<const double> y, std::span<double> dydt) {
                       const auto d = fn(y, params);
                       std::copy(d.begin(), d.end(), dydt.begin());
                     }};
}

// ---------------------------------------------------------------------------
// Integration

namespace detail {

inline void check_finite(std::span<const double> y, double t) {
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw SimError(ErrorCode::NonFiniteState,
                     "non-finite value at t=" + std::to_string(t) + "; try a smaller step");
    }
  }
}

inline Trajectory make_trajectory(std::size_t arity, std::vector<double> grid) {
  Trajectory traj;
  traj.mode = Mode::Ode;
  traj.species.resize(arity);
  for (std::size_t i = 0; i < arity; ++i) traj.species[i] = "y" + std::to_string(i);
  traj.columns.assign(arity, std::vector<double>());
  for (auto& c : traj.columns) c.reserve(grid.size());
  traj.times = std::move(grid);
  return traj;
}

inline void record(Trajectory& traj, std::span<const double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) traj.columns[i].push_back(y[i]);
}

inline std::uint64_t clamp_negative(std::span<double> y) {
  std::uint64_t n = 0;
  for (double& v : y) {
    if (v < 0.0) {
      v = 0.0;
      ++n;
    }
  }
  return n;
}

}  // namespace detail

// Classic fourth-order Runge-Kutta on a uniform grid starting at y0.time.
// Negative components are clamped to zero after every step and counted in
// Trajectory::clamp_events.
inline Trajectory integrate_fixed(const RhsFunction& rhs, const OdeState& y0, double t_end, double dt,
                                  double sample_every) {
  if (!(dt > 0.0) || !(t_end > 0.0) || !(sample_every > 0.0)) {
    throw SimError(ErrorCode::InvalidArgument, "integrate_fixed needs dt, t_end, sample_every > 0");
  }
  const double ratio = sample_every / dt;
  const auto steps_per_sample = static_cast<std::size_t>(std::llround(ratio));
  if (steps_per_sample == 0 || std::fabs(ratio - static_cast<double>(steps_per_sample)) > 1e-9 * ratio) {
    throw SimError(ErrorCode::InvalidArgument, "sample_every must be an integer multiple of dt");
  }
  detail::require_state(y0.values, rhs.arity);

  Trajectory traj = detail::make_trajectory(rhs.arity, uniform_grid(t_end, sample_every));
  for (double& t : traj.times) t += y0.time;

  const std::size_t n = rhs.arity;
  std::vector<double> y = y0.values;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  detail::record(traj, y);

  const std::size_t num_samples = traj.times.size();
  for (std::size_t s = 1; s < num_samples; ++s) {
    for (std::size_t step = 0; step < steps_per_sample; ++step) {
      const double t = y0.time + static_cast<double>((s - 1) * steps_per_sample + step) * dt;
      rhs.eval(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
      rhs.eval(t + 0.5 * dt, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
      rhs.eval(t + 0.5 * dt, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
      rhs.eval(t + dt, tmp, k4);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      detail::check_finite(y, t + dt);
      traj.clamp_events += detail::clamp_negative(y);
    }
    detail::record(traj, y);
  }
  return traj;
}

// Dormand-Prince 5(4) with step-size control and cubic Hermite dense
// output onto `sample_grid` (sorted, within [y0.time, t_end]).
inline Trajectory integrate_adaptive(const RhsFunction& rhs, const OdeState& y0, double t_end,
                                     double rel_tol, double abs_tol, std::span<const double> sample_grid) {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw SimError(ErrorCode::InvalidArgument, "tolerances must be > 0");
  }
  if (!(t_end > y0.time)) throw SimError(ErrorCode::InvalidArgument, "t_end must exceed the start time");
  for (std::size_t k = 0; k < sample_grid.size(); ++k) {
    if (sample_grid[k] < y0.time || sample_grid[k] > t_end || (k > 0 && !(sample_grid[k] > sample_grid[k - 1]))) {
      throw SimError(ErrorCode::InvalidArgument, "sample grid must be increasing within [t0, t_end]");
    }
  }
  detail::require_state(y0.values, rhs.arity);

  // Butcher tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b* (difference between the 5th and embedded 4th order weights).
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory traj = detail::make_trajectory(rhs.arity, {sample_grid.begin(), sample_grid.end()});
  const std::size_t n = rhs.arity;
  std::vector<double> y = y0.values, y_new(n), tmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  double t = y0.time;
  rhs.eval(t, y, k1);
  detail::check_finite(k1, t);

  std::size_t next_sample = 0;
  while (next_sample < sample_grid.size() && sample_grid[next_sample] <= t) {
    detail::record(traj, y);
    ++next_sample;
  }

  double h = std::min(1e-2, t_end - t);
  while (t < t_end) {
    if (h < 1e-12) {
      throw SimError(ErrorCode::StepUnderflow, "step shrank below 1e-12 at t=" + std::to_string(t));
    }
    h = std::min(h, t_end - t);

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs.eval(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs.eval(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs.eval(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    rhs.eval(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    rhs.eval(t + h, tmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    rhs.eval(t + h, y_new, k7);
    detail::check_finite(y_new, t + h);
    detail::check_finite(k7, t + h);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
      err += (e / scale) * (e / scale);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (err <= 1.0) {
      const double t_new = t + h;
      // Hermite interpolation between (t, y, k1) and (t_new, y_new, k7).
      while (next_sample < sample_grid.size() && sample_grid[next_sample] <= t_new) {
        const double theta = (sample_grid[next_sample] - t) / h;
        const double h00 = (1 + 2 * theta) * (1 - theta) * (1 - theta);
        const double h10 = theta * (1 - theta) * (1 - theta);
        const double h01 = theta * theta * (3 - 2 * theta);
        const double h11 = theta * theta * (theta - 1);
        for (std::size_t i = 0; i < n; ++i) {
          tmp[i] = std::max(0.0, h00 * y[i] + h10 * h * k1[i] + h01 * y_new[i] + h11 * h * k7[i]);
        }
        detail::record(traj, tmp);
        ++next_sample;
      }
      t = t_new;
      y.swap(y_new);
      if (const auto clamped = detail::clamp_negative(y); clamped > 0) {
        traj.clamp_events += clamped;
        rhs.eval(t, y, k1);
      } else {
        k1.swap(k7);
      }
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= err <= 1.0 ? factor : std::min(1.0, factor);
  }
  while (next_sample < sample_grid.size()) {
    detail::record(traj, y);
    ++next_sample;
  }
  return traj;
}

}  // namespace dualsim
