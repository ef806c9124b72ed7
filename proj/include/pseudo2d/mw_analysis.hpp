#pragma once

// Notch-type (hanger) resonator analysis of complex S21 traces.
//
//   S21(f) = a e^{i alpha} e^{-2 pi i f tau}
//            [1 - (Q_l / |Q_c|) e^{i phi} / (1 + 2 i Q_l (f / f_r - 1))]
//
// Fitting follows the usual circle-fit pipeline: remove the cable delay,
// fit a circle, fit the phase around its centre for (f_r, Q_l), read
// (|Q_c|, phi) off the normalised diameter. A final Levenberg-Marquardt pass
// on the raw complex data polishes all seven parameters together.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <vector>

#include "pseudo2d/errors.hpp"

namespace pseudo2d::mw {

using Complex = std::complex<double>;

inline constexpr double kHbar = 1.054571817e-34;  // J s
inline constexpr double kCrosstalkFloor = 1e-8;    // -160 dB
inline constexpr const char* kPhotonNumberConvention = "n = 2 Q_l^2 P / (|Q_c| hbar w_r^2)";

struct S21Trace {
  std::vector<double> freq;   // Hz, strictly increasing
  std::vector<Complex> s21;   // linear
  std::optional<double> power_dbm;

  void validate() const {
    if (freq.size() != s21.size()) throw ValidationError("frequency and S21 arrays differ in length");
    if (freq.size() < 16) throw ValidationError("trace needs at least 16 points");
    for (std::size_t k = 0; k < freq.size(); ++k) {
      if (!std::isfinite(freq[k]) || !std::isfinite(s21[k].real()) || !std::isfinite(s21[k].imag())) {
        throw ValidationError("non-finite value at point " + std::to_string(k));
      }
      if (k > 0 && !(freq[k] > freq[k - 1])) {
        throw ValidationError("frequencies must be strictly increasing (point " + std::to_string(k) + ")");
      }
    }
  }
};

struct ResonatorFit {
  double f_r = 0.0;
  double Q_l = 0.0;
  double Q_c_mag = 0.0;
  double phi = 0.0;
  double Q_i = 0.0;
  double tau = 0.0;
  double a = 1.0;
  double alpha = 0.0;
  double residual = 0.0;
};

struct CrosstalkResult {
  std::vector<double> freq;
  std::vector<double> crosstalk_db;
  double max_db = 0.0;
  double f_at_max = 0.0;
  // Full width of the contiguous region within 3 dB of the maximum.
  double bandwidth_3db_hz = 0.0;
};

/// 1/Q_i = 1/Q_l - cos(phi) / |Q_c|
inline double internal_q(double q_l, double q_c_mag, double phi) {
  return 1.0 / (1.0 / q_l - std::cos(phi) / q_c_mag);
}

/// |Q_c| from Q_l, Q_i and phi (inverse of internal_q).
inline double coupling_q(double q_l, double q_i, double phi) {
  return std::cos(phi) / (1.0 / q_l - 1.0 / q_i);
}

inline Complex model_s21(double f, const ResonatorFit& p) {
  if (!(p.f_r > 0.0)) throw ValidationError("resonance frequency must be positive");
  const Complex env = p.a * std::polar(1.0, p.alpha) * std::polar(1.0, -2.0 * std::numbers::pi * f * p.tau);
  if (std::isinf(p.Q_c_mag)) return env;
  const Complex dip = (p.Q_l / p.Q_c_mag) * std::polar(1.0, p.phi) /
                      Complex(1.0, 2.0 * p.Q_l * (f / p.f_r - 1.0));
  return env * (1.0 - dip);
}

inline S21Trace synthesize(const ResonatorFit& p, const std::vector<double>& freq) {
  S21Trace t;
  t.freq = freq;
  t.s21.reserve(freq.size());
  for (double f : freq) t.s21.push_back(model_s21(f, p));
  return t;
}

/// `n` points spanning +-`linewidths` loaded linewidths around f_r.
inline std::vector<double> frequency_grid(double f_r, double q_l, double linewidths, std::size_t n) {
  const double half = linewidths * f_r / q_l;
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = f_r - half + 2.0 * half * static_cast<double>(k) / static_cast<double>(n - 1);
  return f;
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

/// Steady-state mean photon number of a notch resonator driven with
/// `applied_power` watts at the feed line. See kPhotonNumberConvention.
inline double avg_photon_number(const ResonatorFit& fit, double applied_power) {
  if (applied_power < 0.0) throw ValidationError("applied power must be nonnegative");
  if (!(fit.f_r > 0.0) || !(fit.Q_l > 0.0) || !(fit.Q_c_mag > 0.0)) {
    throw ValidationError("fit must have positive f_r, Q_l and |Q_c|");
  }
  const double w = 2.0 * std::numbers::pi * fit.f_r;
  return 2.0 * fit.Q_l * fit.Q_l * applied_power / (fit.Q_c_mag * kHbar * w * w);
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Indices of the outer `fraction` of a trace, split evenly between both ends.
inline std::vector<std::size_t> wing_indices(std::size_t n, double fraction) {
  const std::size_t per_side = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * n / 2.0)));
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < per_side; ++k) idx.push_back(k);
  for (std::size_t k = n - per_side; k < n; ++k) idx.push_back(k);
  return idx;
}

// Minimises sum of squares of fn(x) (size m) with Eigen's MINPACK port.
struct LsqFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> fn;
  int n_in = 0;
  int n_out = 0;
  int inputs() const { return n_in; }
  int values() const { return n_out; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    fn(x, r);
    return 0;
  }
};

inline double least_squares(std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> fn,
                            Eigen::VectorXd& x, int n_out, int max_fev = 4000) {
  LsqFunctor f{std::move(fn), static_cast<int>(x.size()), n_out};
  Eigen::NumericalDiff<LsqFunctor, Eigen::Central> nd(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LsqFunctor, Eigen::Central>, double> lm(nd);
  lm.parameters.maxfev = max_fev;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    throw NumericalError("least-squares fit rejected its input");
  }
  Eigen::VectorXd r(n_out);
  f(x, r);
  return r.squaredNorm();
}

struct Circle {
  Complex centre;
  double radius = 0.0;
  double rms = 0.0;  // rms radial distance
};

// Algebraic (Kasa) circle fit on centred, scaled coordinates.
inline Circle fit_circle(const std::vector<Complex>& z) {
  const auto n = static_cast<Eigen::Index>(z.size());
  Complex mean(0.0, 0.0);
  for (auto v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double scale = 0.0;
  for (auto v : z) scale = std::max(scale, std::abs(v - mean));
  if (scale == 0.0) return {mean, 0.0, 0.0};
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex w = (z[static_cast<std::size_t>(k)] - mean) / scale;
    A(k, 0) = w.real();
    A(k, 1) = w.imag();
    A(k, 2) = 1.0;
    b(k) = std::norm(w);
  }
  const Eigen::Vector3d s = A.colPivHouseholderQr().solve(b);
  const Complex c(s(0) / 2.0, s(1) / 2.0);
  const double r = std::sqrt(std::max(0.0, s(2) + std::norm(c)));
  Circle out{mean + scale * c, scale * r, 0.0};
  double acc = 0.0;
  for (auto v : z) {
    const double d = std::abs(v - out.centre) - out.radius;
    acc += d * d;
  }
  out.rms = std::sqrt(acc / static_cast<double>(z.size()));
  return out;
}

inline std::vector<Complex> remove_delay(const S21Trace& t, double tau) {
  std::vector<Complex> z(t.s21.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = t.s21[k] * std::polar(1.0, 2.0 * std::numbers::pi * t.freq[k] * tau);
  return z;
}

inline std::vector<double> unwrap(std::vector<double> ph) {
  for (std::size_t k = 1; k < ph.size(); ++k) {
    while (ph[k] - ph[k - 1] > std::numbers::pi) ph[k] -= 2.0 * std::numbers::pi;
    while (ph[k] - ph[k - 1] < -std::numbers::pi) ph[k] += 2.0 * std::numbers::pi;
  }
  return ph;
}

inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  if (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

}  // namespace detail

/// Depth of the deepest point below the wing baseline, relative to it, and
/// the noise level of the wings (both in units of the baseline).
struct DipStats {
  double depth = 0.0;
  double noise = 0.0;
  std::size_t index = 0;
};

inline DipStats dip_stats(const S21Trace& t) {
  const auto wings = detail::wing_indices(t.freq.size(), 0.1);
  std::vector<double> mags;
  for (auto k : wings) mags.push_back(std::abs(t.s21[k]));
  const double base = detail::median(mags);
  if (!(base > 0.0)) throw ValidationError("trace baseline is zero");
  DipStats d;
  double lowest = std::abs(t.s21[0]);
  for (std::size_t k = 1; k < t.s21.size(); ++k) {
    if (std::abs(t.s21[k]) < lowest) {
      lowest = std::abs(t.s21[k]);
      d.index = k;
    }
  }
  d.depth = 1.0 - lowest / base;
  // Robust scatter of |S21| over the wings from second differences, scaled
  // to the total complex noise amplitude.
  std::vector<double> diffs;
  for (std::size_t k = 2; k < wings.size(); ++k) {
    if (wings[k] == wings[k - 2] + 2) {
      const double d2 = std::abs(t.s21[wings[k]]) - 2.0 * std::abs(t.s21[wings[k - 1]]) + std::abs(t.s21[wings[k - 2]]);
      diffs.push_back(std::abs(d2) / base);
    }
  }
  d.noise = diffs.empty() ? 0.0 : detail::median(diffs) / 0.6745 / std::sqrt(6.0) * std::sqrt(2.0);
  return d;
}

inline ResonatorFit fit_resonance(const S21Trace& trace) {
  trace.validate();
  const std::size_t n = trace.freq.size();
  const double span = trace.freq.back() - trace.freq.front();

  const auto dip = dip_stats(trace);
  if (dip.depth < 1e-9 || dip.depth < 3.0 * dip.noise) throw NumericalError("no dip found");

  // 1. Cable delay: linear phase over the wings, then the delay that makes
  //    the data most circular.
  const auto wings = detail::wing_indices(n, 0.1);
  std::vector<double> raw_phase(n);
  for (std::size_t k = 0; k < n; ++k) raw_phase[k] = std::arg(trace.s21[k]);
  const auto phase = detail::unwrap(raw_phase);
  double tau0 = 0.0;
  {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(wings.size()), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(wings.size()));
    for (std::size_t k = 0; k < wings.size(); ++k) {
      A(static_cast<Eigen::Index>(k), 0) = (trace.freq[wings[k]] - trace.freq.front()) / span;
      A(static_cast<Eigen::Index>(k), 1) = 1.0;
      b(static_cast<Eigen::Index>(k)) = phase[wings[k]];
    }
    const Eigen::Vector2d s = A.colPivHouseholderQr().solve(b);
    tau0 = -s(0) / (2.0 * std::numbers::pi * span);
  }
  auto circle_rms = [&](double tau) { return detail::fit_circle(detail::remove_delay(trace, tau)).rms; };
  double tau = tau0;
  {
    const int steps = 40;
    const double half = 0.1 / span;
    const double h = 2.0 * half / steps;
    int best = steps / 2;
    double best_val = circle_rms(tau0);
    for (int k = 0; k <= steps; ++k) {
      const double v = circle_rms(tau0 - half + h * k);
      if (v < best_val) {
        best_val = v;
        best = k;
      }
    }
    double lo = tau0 - half + h * (best - 1), hi = tau0 - half + h * (best + 1);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = circle_rms(x1), f2 = circle_rms(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-12 / span; ++it) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = circle_rms(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = circle_rms(x2);
      }
    }
    tau = f1 < f2 ? x1 : x2;
    if (std::min(f1, f2) > best_val) tau = tau0 - half + h * best;
  }

  // 2. Circle fit on delay-corrected data.
  const auto z = detail::remove_delay(trace, tau);
  const auto circle = detail::fit_circle(z);
  if (!(circle.radius > 0.0)) throw NumericalError("no dip found");

  // 3. Phase around the centre: theta0 + 2 atan(2 Q_l (1 - f/f_r)).
  std::vector<double> theta_raw(n);
  for (std::size_t k = 0; k < n; ++k) theta_raw[k] = std::arg(z[k] - circle.centre);
  const auto theta = detail::unwrap(theta_raw);
  const double f_guess = trace.freq[dip.index];
  const double th_guess = theta[dip.index];

  auto phase_residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    const double fr = f_guess * (1.0 + x(1) * 1e-6);
    const double ql = std::exp(x(2));
    for (std::size_t k = 0; k < n; ++k) {
      r(static_cast<Eigen::Index>(k)) = theta[k] - (x(0) + 2.0 * std::atan(2.0 * ql * (1.0 - trace.freq[k] / fr)));
    }
  };
  Eigen::VectorXd best_phase;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double lq = std::log(f_guess / span); lq < std::log(1e9); lq += std::log(3.0)) {
    Eigen::VectorXd x(3);
    x << th_guess, 0.0, lq;
    const double cost = detail::least_squares(phase_residual, x, static_cast<int>(n));
    if (std::isfinite(cost) && cost < best_cost) {
      best_cost = cost;
      best_phase = x;
    }
  }
  if (best_phase.size() == 0) throw NumericalError("phase fit did not converge");
  double f_r = f_guess * (1.0 + best_phase(1) * 1e-6);
  double q_l = std::exp(best_phase(2));
  const double theta0 = best_phase(0);

  // 4. Off-resonant point and diameter.
  const Complex off = circle.centre - circle.radius * std::polar(1.0, theta0);
  double a = std::abs(off);
  double alpha = std::arg(off);
  const Complex centre_n = circle.centre / off;
  const double diameter = 2.0 * circle.radius / a;
  double phi = std::arg(1.0 - centre_n);
  double q_c = q_l / diameter;

  // 5. Joint polish on the raw complex data. The phase reference sits at the
  //    first frequency so alpha and tau decorrelate.
  const double f0 = trace.freq.front();
  auto full_residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    ResonatorFit p;
    p.a = x(0);
    p.alpha = x(1);
    p.tau = x(2) / span;
    p.f_r = f_r * (1.0 + x(3) / q_l);
    p.Q_l = q_l * std::exp(x(4));
    p.Q_c_mag = q_c * std::exp(x(5));
    p.phi = x(6);
    for (std::size_t k = 0; k < n; ++k) {
      const double x_det = trace.freq[k] / p.f_r - 1.0;
      const Complex env = p.a * std::polar(1.0, p.alpha - 2.0 * std::numbers::pi * (trace.freq[k] - f0) * p.tau);
      const Complex val = env * (1.0 - (p.Q_l / p.Q_c_mag) * std::polar(1.0, p.phi) / Complex(1.0, 2.0 * p.Q_l * x_det));
      const Complex d = val - trace.s21[k];
      r(static_cast<Eigen::Index>(2 * k)) = d.real();
      r(static_cast<Eigen::Index>(2 * k + 1)) = d.imag();
    }
  };
  Eigen::VectorXd x(7);
  x << a, alpha - 2.0 * std::numbers::pi * f0 * tau, tau * span, 0.0, 0.0, 0.0, phi;
  detail::least_squares(full_residual, x, static_cast<int>(2 * n));

  ResonatorFit out;
  out.a = x(0);
  out.tau = x(2) / span;
  out.alpha = detail::wrap_angle(x(1) + 2.0 * std::numbers::pi * f0 * out.tau);
  out.f_r = f_r * (1.0 + x(3) / q_l);
  out.Q_l = q_l * std::exp(x(4));
  out.Q_c_mag = q_c * std::exp(x(5));
  out.phi = detail::wrap_angle(x(6));
  if (out.a < 0.0) {
    out.a = -out.a;
    out.alpha = detail::wrap_angle(out.alpha + std::numbers::pi);
  }
  if (!std::isfinite(out.f_r) || !(out.Q_l > 0.0) || !(out.Q_c_mag > 0.0)) {
    throw NumericalError("resonator fit did not converge");
  }
  out.Q_i = internal_q(out.Q_l, out.Q_c_mag, out.phi);
  if (!(out.Q_i > 0.0) || !std::isfinite(out.Q_i)) {
    throw NumericalError("fit produced a nonpositive internal quality factor");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::norm(model_s21(trace.freq[k], out) - trace.s21[k]);
  out.residual = std::sqrt(acc / static_cast<double>(n));
  return out;
}

/// 20 log10(1 - |S21|) of the wing-normalised magnitude, floored at -160 dB.
inline CrosstalkResult crosstalk_spectrum(const S21Trace& trace) {
  trace.validate();
  const auto n = trace.freq.size();
  std::vector<double> wing;
  for (auto k : detail::wing_indices(n, 0.1)) wing.push_back(std::abs(trace.s21[k]));
  const double base = detail::median(wing);
  if (base < 0.5) {
    throw ValidationError("baseline normalisation failed: wing median |S21| = " + std::to_string(base));
  }
  CrosstalkResult out;
  out.freq = trace.freq;
  out.crosstalk_db.resize(n);
  std::size_t at = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double depth = 1.0 - std::abs(trace.s21[k]) / base;
    out.crosstalk_db[k] = 20.0 * std::log10(std::max(depth, kCrosstalkFloor));
    if (out.crosstalk_db[k] > out.crosstalk_db[at]) at = k;
  }
  out.max_db = out.crosstalk_db[at];
  out.f_at_max = trace.freq[at];

  const double level = out.max_db - 3.0;
  auto edge = [&](std::size_t inside, std::size_t outside) {
    const double a = out.crosstalk_db[inside], b = out.crosstalk_db[outside];
    const double s = (a - level) / (a - b);
    return trace.freq[inside] + s * (trace.freq[outside] - trace.freq[inside]);
  };
  std::size_t lo = at, hi = at;
  while (lo > 0 && out.crosstalk_db[lo - 1] >= level) --lo;
  while (hi + 1 < n && out.crosstalk_db[hi + 1] >= level) ++hi;
  const double f_lo = lo > 0 ? edge(lo, lo - 1) : trace.freq[lo];
  const double f_hi = hi + 1 < n ? edge(hi, hi + 1) : trace.freq[hi];
  out.bandwidth_3db_hz = f_hi - f_lo;
  return out;
}

}  // namespace pseudo2d::mw
