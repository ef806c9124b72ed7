#pragma once

// Adaptive Dormand-Prince 5(4) integrator for autonomous linear-algebra
// states (anything Eigen-like with +, scalar * and cwiseAbs()).

#include <algorithm>
#include <cmath>
#include <string>

#include "pseudo2d/errors.hpp"

namespace pseudo2d::ode {

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-11;
  double h_init = 0.0;  // 0: pick from the first derivative
  double h_max = 0.0;   // 0: unbounded
  long max_steps = 10'000'000;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

namespace detail {

// Dormand & Prince (1980) tableau, FSAL form.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
// b - b_hat (error weights)
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, const Tolerances& tol) {
  const auto scale = (tol.atol + tol.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).eval();
  const auto ratio = (err.cwiseAbs().array() / scale).eval();
  return std::sqrt(ratio.square().mean());
}

}  // namespace detail

/// Integrates dy/dt = f(y) from 0 to t_end and returns y(t_end).
template <class State, class Rhs>
State integrate(Rhs&& f, State y, double t_end, const Tolerances& tol = {}, Stats* stats = nullptr) {
  using namespace detail;
  if (t_end < 0.0) throw NumericalError("integration end time must be nonnegative");
  Stats local;
  Stats& st = stats ? *stats : local;
  if (t_end == 0.0) return y;

  State k1 = f(y);
  ++st.rhs_evals;

  double h = tol.h_init;
  if (h <= 0.0) {
    const double d0 = std::sqrt(y.cwiseAbs2().mean());
    const double d1 = std::sqrt(k1.cwiseAbs2().mean());
    h = (d0 > 1e-12 && d1 > 1e-12) ? 0.01 * d0 / d1 : 1e-6 * t_end;
    h = std::min(h, t_end);
  }
  if (tol.h_max > 0.0) h = std::min(h, tol.h_max);

  double t = 0.0;
  long steps = 0;
  while (t < t_end) {
    if (++steps > tol.max_steps) {
      throw NumericalError("integrator exceeded " + std::to_string(tol.max_steps) + " steps");
    }
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    const State k2 = f((y + h * (a21 * k1)).eval());
    const State k3 = f((y + h * (a31 * k1 + a32 * k2)).eval());
    const State k4 = f((y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
    const State k5 = f((y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const State k6 = f((y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    State y1 = (y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6)).eval();
    const State k7 = f(y1);
    st.rhs_evals += 6;

    const State err = (h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7)).eval();
    const double en = error_norm(err, y, y1, tol);
    if (!std::isfinite(en)) throw NumericalError("integrator produced a non-finite state");

    if (en <= 1.0) {
      t = last ? t_end : t + h;
      y = std::move(y1);
      k1 = k7;
      ++st.accepted;
    } else {
      ++st.rejected;
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= factor;
    if (tol.h_max > 0.0) h = std::min(h, tol.h_max);
    if (h < 1e-15 * std::max(t_end, 1e-300)) throw NumericalError("integrator step size underflow");
  }
  return y;
}

}  // namespace pseudo2d::ode
