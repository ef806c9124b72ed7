#pragma once

// CZ infidelity versus resonator quality factor.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "pseudo2d/channel.hpp"
#include "pseudo2d/cz_model.hpp"
#include "pseudo2d/errors.hpp"

namespace pseudo2d::cz {

inline constexpr double kSurfaceCodeThreshold = 0.0075;
inline constexpr std::array<double, 8> kDefaultQualityGrid{1e2, 3e2, 1e3, 2e3, 3e3, 1e4, 1e5, 1e6};

struct FidelityPoint {
  double Q_i = 0.0;
  double kappa = 0.0;  // rad/s
  double avg_fidelity = 0.0;  // after phase correction
  double infidelity = 0.0;    // 1 - avg_fidelity
  double infidelity_raw = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  bool phase_corrected = true;
  std::optional<MonteCarloEstimate> mc;  // Haar-average cross-check of avg_fidelity
};

struct SweepOptions {
  // Park qubit 1 at the dressed |11>/|02> resonance rather than the bare one.
  bool tune_to_resonance = true;
  // Refine the gate time by maximising corrected fidelity at calibration_q
  // over [0.9, 1.1] x pi / (sqrt 2 g_eff). Without calibration the gate runs
  // for params.t_gate, or pi / (sqrt 2 g_eff) if that is unset.
  bool calibrate = true;
  double calibration_q = 1e6;
  int calibration_grid = 21;
  TomographyOptions tomography{};
  int mc_samples = 0;
  std::uint64_t mc_seed = 0;
};

struct Calibration {
  DeviceParams params;  // possibly retuned qubit 1, g_eff and t_gate filled in
  double g_eff = 0.0;
  double t_nominal = 0.0;  // pi / (sqrt 2 g_eff)
  double t_gate = 0.0;
  double floor_infidelity = 0.0;  // corrected infidelity at calibration_q
};

struct SweepResult {
  Calibration calibration;
  std::vector<FidelityPoint> points;
  bool monotone = true;  // corrected infidelity nonincreasing in Q within slack
  std::optional<double> threshold_crossing_q;
};

inline FidelityPoint fidelity_point(const DeviceParams& params, double q, double t,
                                    const TomographyOptions& opt = {}, int mc_samples = 0,
                                    std::uint64_t mc_seed = 0) {
  if (!(q > 0.0)) throw ValidationError("quality factor must be positive");
  const DeviceParams p = params.with_quality_factor(q);
  const auto ch = channel_tomography(p, t, opt);
  const auto pc = phase_correct(ch);
  FidelityPoint fp;
  fp.Q_i = q;
  fp.kappa = p.kappa_value();
  fp.avg_fidelity = pc.fidelity_after;
  fp.infidelity = 1.0 - pc.fidelity_after;
  fp.infidelity_raw = 1.0 - pc.fidelity_before;
  fp.theta1 = pc.theta1;
  fp.theta2 = pc.theta2;
  if (mc_samples > 0) fp.mc = avg_gate_fidelity_mc(pc.channel, cz_unitary(), mc_samples, mc_seed);
  return fp;
}

inline Calibration calibrate_gate(const DeviceParams& params, const SweepOptions& opt = {}) {
  params.validate();
  Calibration cal;
  cal.params = opt.tune_to_resonance ? tune_to_cz_resonance(params) : params;
  cal.g_eff = cal.params.g_eff ? *cal.params.g_eff : estimate_g_eff(cal.params);
  if (!opt.tune_to_resonance) cal.params.g_eff = cal.g_eff;
  cal.t_nominal = gate_time(cal.g_eff);

  if (!opt.calibrate) {
    cal.t_gate = params.t_gate.value_or(cal.t_nominal);
  } else {
    auto infid = [&](double t) {
      return fidelity_point(cal.params, opt.calibration_q, t, opt.tomography).infidelity;
    };
    const int n = std::max(opt.calibration_grid, 3);
    double lo = 0.9 * cal.t_nominal, hi = 1.1 * cal.t_nominal;
    const double step = (hi - lo) / (n - 1);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double v = infid(lo + step * k);
      if (v < best_val) {
        best_val = v;
        best = k;
      }
    }
    // Golden-section refinement inside the bracketing grid cells.
    double a = lo + step * std::max(best - 1, 0), b = lo + step * std::min(best + 1, n - 1);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = infid(x1), f2 = infid(x2);
    while (b - a > 1e-13) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = infid(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = infid(x2);
      }
    }
    cal.t_gate = f1 < f2 ? x1 : x2;
    if (std::min(f1, f2) > best_val) cal.t_gate = lo + step * best;
  }
  cal.params.t_gate = cal.t_gate;
  cal.floor_infidelity = fidelity_point(cal.params, opt.calibration_q, cal.t_gate, opt.tomography).infidelity;
  return cal;
}

/// Log-log interpolated Q where the infidelity first drops to `threshold`.
inline std::optional<double> threshold_crossing(std::span<const FidelityPoint> pts,
                                                double threshold = kSurfaceCodeThreshold) {
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const auto& a = pts[k - 1];
    const auto& b = pts[k];
    if (a.infidelity > threshold && b.infidelity <= threshold) {
      const double la = std::log(a.infidelity), lb = std::log(b.infidelity), lt = std::log(threshold);
      const double s = (lt - la) / (lb - la);
      return std::exp(std::log(a.Q_i) + s * (std::log(b.Q_i) - std::log(a.Q_i)));
    }
  }
  if (!pts.empty() && pts.front().infidelity <= threshold) return pts.front().Q_i;
  return std::nullopt;
}

inline SweepResult q_sweep(const DeviceParams& params, std::span<const double> qs,
                           const SweepOptions& opt = {}, double monotone_slack = 1e-5) {
  for (double q : qs) {
    if (!(q > 0.0)) throw ValidationError("quality factors must be positive");
  }
  SweepResult out;
  out.calibration = calibrate_gate(params, opt);
  for (std::size_t k = 0; k < qs.size(); ++k) {
    out.points.push_back(fidelity_point(out.calibration.params, qs[k], out.calibration.t_gate, opt.tomography,
                                        opt.mc_samples, opt.mc_seed + k));
  }
  std::vector<FidelityPoint> sorted = out.points;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.Q_i < b.Q_i; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].infidelity > sorted[k - 1].infidelity + monotone_slack) out.monotone = false;
  }
  out.threshold_crossing_q = threshold_crossing(sorted);
  return out;
}

inline void write_sweep_csv(std::ostream& os, std::span<const FidelityPoint> pts) {
  os << "q_factor,kappa_rad_s,infidelity_raw,infidelity_corrected,theta1,theta2\n";
  os.precision(17);
  for (const auto& p : pts) {
    os << p.Q_i << ',' << p.kappa << ',' << p.infidelity_raw << ',' << p.infidelity << ',' << p.theta1
       << ',' << p.theta2 << '\n';
  }
}

}  // namespace pseudo2d::cz
