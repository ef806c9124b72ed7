#pragma once

// Two-qubit channels as real 16x16 Pauli transfer matrices (PTM).
//
// R(a, b) = Tr[P_a E(P_b)] / 4 with P_{4i+j} = sigma_i (x) sigma_j, sigma in
// {I, X, Y, Z}, first factor = qubit 1. Computational states are ordered
// |00>, |01>, |10>, |11> (index 2*q1 + q2).

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pseudo2d/cz_model.hpp"
#include "pseudo2d/errors.hpp"
#include "pseudo2d/lindblad.hpp"

namespace pseudo2d::cz {

using Mat4 = Eigen::Matrix4cd;
using Ptm = Eigen::Matrix<double, 16, 16>;

struct QuantumChannel {
  Ptm ptm = Ptm::Identity();
  bool trace_preserving = true;
};

namespace detail {

inline const std::array<Eigen::Matrix2cd, 4>& paulis() {
  static const std::array<Eigen::Matrix2cd, 4> p = [] {
    const Complex i(0.0, 1.0);
    std::array<Eigen::Matrix2cd, 4> m;
    m[0] << 1, 0, 0, 1;
    m[1] << 0, 1, 1, 0;
    m[2] << 0, -i, i, 0;
    m[3] << 1, 0, 0, -1;
    return m;
  }();
  return p;
}

inline Mat4 kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Mat4 out;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  return out;
}

inline const std::array<Mat4, 16>& two_qubit_paulis() {
  static const std::array<Mat4, 16> p = [] {
    std::array<Mat4, 16> m;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m[static_cast<std::size_t>(4 * i + j)] = kron(paulis()[static_cast<std::size_t>(i)], paulis()[static_cast<std::size_t>(j)]);
    return m;
  }();
  return p;
}

}  // namespace detail

/// PTM from images of the matrix units: images[4*i + j] = E(|i><j|).
inline Ptm ptm_from_unit_images(std::span<const Mat4, 16> images) {
  const auto& P = detail::two_qubit_paulis();
  Ptm r;
  for (int b = 0; b < 16; ++b) {
    Mat4 eb = Mat4::Zero();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) eb += P[static_cast<std::size_t>(b)](i, j) * images[static_cast<std::size_t>(4 * i + j)];
    for (int a = 0; a < 16; ++a) r(a, b) = (P[static_cast<std::size_t>(a)] * eb).trace().real() / 4.0;
  }
  return r;
}

inline Ptm ptm_from_kraus(std::span<const Mat4> kraus) {
  std::array<Mat4, 16> images;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Mat4 unit = Mat4::Zero();
      unit(i, j) = 1.0;
      Mat4 img = Mat4::Zero();
      for (const auto& k : kraus) img += k * unit * k.adjoint();
      images[static_cast<std::size_t>(4 * i + j)] = img;
    }
  }
  return ptm_from_unit_images(images);
}

inline Ptm ptm_from_unitary(const Mat4& u) {
  const std::array<Mat4, 1> k{u};
  return ptm_from_kraus(k);
}

inline Mat4 cz_unitary() {
  Mat4 u = Mat4::Identity();
  u(3, 3) = -1.0;
  return u;
}

/// exp(-i theta1 Z/2) (x) exp(-i theta2 Z/2).
inline Mat4 z_rotations(double theta1, double theta2) {
  Mat4 u = Mat4::Zero();
  for (int q1 = 0; q1 < 2; ++q1) {
    for (int q2 = 0; q2 < 2; ++q2) {
      const double s1 = q1 == 0 ? 1.0 : -1.0;
      const double s2 = q2 == 0 ? 1.0 : -1.0;
      u(2 * q1 + q2, 2 * q1 + q2) = std::polar(1.0, -0.5 * (s1 * theta1 + s2 * theta2));
    }
  }
  return u;
}

/// Closed-form PTM of z_rotations(theta1, theta2).
inline Ptm z_rotation_ptm(double theta1, double theta2) {
  auto single = [](double t) {
    Eigen::Matrix4d r = Eigen::Matrix4d::Identity();
    r(1, 1) = std::cos(t);
    r(1, 2) = -std::sin(t);
    r(2, 1) = std::sin(t);
    r(2, 2) = std::cos(t);
    return r;
  };
  const Eigen::Matrix4d a = single(theta1), b = single(theta2);
  Ptm out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  return out;
}

inline QuantumChannel ideal_cz() { return {ptm_from_unitary(cz_unitary()), true}; }

/// Applies `after` following `before`.
inline QuantumChannel compose(const QuantumChannel& after, const QuantumChannel& before) {
  return {after.ptm * before.ptm, after.trace_preserving && before.trace_preserving};
}

/// E(rho) for a 4x4 operator rho.
inline Mat4 apply_channel(const QuantumChannel& ch, const Mat4& rho) {
  const auto& P = detail::two_qubit_paulis();
  Eigen::Matrix<Complex, 16, 1> in;
  for (int a = 0; a < 16; ++a) in(a) = (P[static_cast<std::size_t>(a)] * rho).trace() / 2.0;
  const Eigen::Matrix<Complex, 16, 1> out = ch.ptm.cast<Complex>() * in;
  Mat4 r = Mat4::Zero();
  for (int a = 0; a < 16; ++a) r += out(a) * P[static_cast<std::size_t>(a)] / 2.0;
  return r;
}

/// Choi matrix sum_ij |i><j| (x) E(|i><j|).
inline Eigen::Matrix<Complex, 16, 16> choi(const QuantumChannel& ch) {
  Eigen::Matrix<Complex, 16, 16> c = Eigen::Matrix<Complex, 16, 16>::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Mat4 unit = Mat4::Zero();
      unit(i, j) = 1.0;
      c.block<4, 4>(4 * i, 4 * j) = apply_channel(ch, unit);
    }
  }
  return c;
}

inline bool is_completely_positive(const QuantumChannel& ch, double tol = 1e-8) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Complex, 16, 16>> es(choi(ch), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

/// Largest output trace over input states: leading eigenvalue of E^dag(I).
inline double max_output_trace(const QuantumChannel& ch) {
  // Tr E(rho) = sum_b R(0, b) c_b * 2 with c = Pauli coefficients of rho / 2,
  // i.e. Tr E(rho) = Tr[M rho] with M = sum_b R(0, b) P_b.
  const auto& P = detail::two_qubit_paulis();
  Mat4 m = Mat4::Zero();
  for (int b = 0; b < 16; ++b) m += ch.ptm(0, b) * P[static_cast<std::size_t>(b)];
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Haar-averaged <psi| U' E(psi) U |psi> over the 4-dim computational space,
/// evaluated exactly through the unitary 2-design identity
///   F = (Tr[R_U^T R] + 4 R(0,0)) / 20.
/// For trace-preserving channels R(0,0) = 1 and this is the familiar
/// (d F_pro + 1) / (d + 1).
inline double avg_gate_fidelity(const QuantumChannel& ch, const QuantumChannel& ideal = ideal_cz()) {
  return ((ideal.ptm.transpose() * ch.ptm).trace() + 4.0 * ch.ptm(0, 0)) / 20.0;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// Independent estimator: samples Haar-random pure states directly.
inline MonteCarloEstimate avg_gate_fidelity_mc(const QuantumChannel& ch, const Mat4& ideal_unitary,
                                               long samples, std::uint64_t seed) {
  if (samples < 2) throw ValidationError("Monte-Carlo fidelity needs at least two samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    Eigen::Vector4cd psi;
    for (int k = 0; k < 4; ++k) psi(k) = Complex(normal(rng), normal(rng));
    psi.normalize();
    const Mat4 out = apply_channel(ch, psi * psi.adjoint());
    const Eigen::Vector4cd target = ideal_unitary * psi;
    const double f = (target.adjoint() * out * target)(0, 0).real();
    sum += f;
    sum_sq += f * f;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

struct PhaseCorrection {
  QuantumChannel channel;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double fidelity_before = 0.0;
  double fidelity_after = 0.0;
};

namespace detail {

inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Nelder-Mead on a 2D objective (minimisation).
template <class F>
std::array<double, 2> nelder_mead_2d(F&& f, std::array<double, 2> x0, double scale, int max_iter = 400) {
  std::array<std::array<double, 2>, 3> s = {x0, {x0[0] + scale, x0[1]}, {x0[0], x0[1] + scale}};
  std::array<double, 3> v = {f(s[0]), f(s[1]), f(s[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> o = {0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });
    auto best = s[static_cast<std::size_t>(o[0])], mid = s[static_cast<std::size_t>(o[1])], worst = s[static_cast<std::size_t>(o[2])];
    double fb = v[static_cast<std::size_t>(o[0])], fm = v[static_cast<std::size_t>(o[1])], fw = v[static_cast<std::size_t>(o[2])];
    const double size = std::max(std::hypot(mid[0] - best[0], mid[1] - best[1]),
                                 std::hypot(worst[0] - best[0], worst[1] - best[1]));
    if (size < 1e-12) break;
    const std::array<double, 2> c = {(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
    auto along = [&](double t) {
      return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])};
    };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fb) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        worst = xe;
        fw = fe;
      } else {
        worst = xr;
        fw = fr;
      }
    } else if (fr < fm) {
      worst = xr;
      fw = fr;
    } else {
      const auto xc = along(0.5);
      const double fc = f(xc);
      if (fc < fw) {
        worst = xc;
        fw = fc;
      } else {
        mid = {(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        worst = {(best[0] + worst[0]) / 2, (best[1] + worst[1]) / 2};
        fm = f(mid);
        fw = f(worst);
      }
    }
    s = {best, mid, worst};
    v = {fb, fm, fw};
  }
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (v[static_cast<std::size_t>(i)] < v[static_cast<std::size_t>(k)]) k = i;
  return s[static_cast<std::size_t>(k)];
}

}  // namespace detail

/// Follows the channel with local Z rotations that maximise the average
/// fidelity to the ideal gate (64x64 grid, then Nelder-Mead).
inline PhaseCorrection phase_correct(const QuantumChannel& ch, const QuantumChannel& ideal = ideal_cz()) {
  // Tr[R_ideal^T R_Z R] is linear in R_Z, so fold the ideal in once.
  const Ptm target = ideal.ptm * ch.ptm.transpose();
  const double leak_term = 4.0 * ch.ptm(0, 0);
  auto fidelity = [&](double t1, double t2) {
    const Ptm rz = z_rotation_ptm(t1, t2);
    return ((rz.cwiseProduct(target)).sum() + leak_term) / 20.0;
  };

  constexpr int kGrid = 64;
  const double step = 2.0 * std::numbers::pi / kGrid;
  double best = -1.0;
  std::array<double, 2> arg{0.0, 0.0};
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double t1 = -std::numbers::pi + step * (i + 1);
      const double t2 = -std::numbers::pi + step * (j + 1);
      const double f = fidelity(t1, t2);
      if (f > best + 1e-15) {
        best = f;
        arg = {t1, t2};
      }
    }
  }
  const auto refined = detail::nelder_mead_2d(
      [&](const std::array<double, 2>& x) { return -fidelity(x[0], x[1]); }, arg, step / 4);
  if (fidelity(refined[0], refined[1]) > best) arg = refined;

  PhaseCorrection out;
  out.theta1 = detail::wrap_angle(arg[0]);
  out.theta2 = detail::wrap_angle(arg[1]);
  out.channel = compose({z_rotation_ptm(out.theta1, out.theta2), true}, ch);
  out.fidelity_before = avg_gate_fidelity(ch, ideal);
  out.fidelity_after = avg_gate_fidelity(out.channel, ideal);
  return out;
}

enum class ComputationalBasis {
  Bare,     // |q1 q2; 0>
  Dressed,  // resonator-dressed images, see dressed_computational_basis()
};

struct TomographyOptions {
  ComputationalBasis basis = ComputationalBasis::Dressed;
  EvolveOptions evolve{};
  double hermiticity_tol = 1e-7;
};

/// Propagates every |i><j| of the computational subspace, projects back onto
/// it, and assembles the PTM. Outputs are expressed in the frame that
/// co-rotates with the idle single-excitation energies, so only conditional
/// phases and errors remain in the raw channel. Population that leaves the
/// subspace shows up as trace loss.
inline QuantumChannel channel_tomography(const DeviceParams& p, double t,
                                         const TomographyOptions& opt = {}) {
  p.validate();
  const auto dressed = dressed_computational_basis(p);
  std::array<Vector, 4> basis;
  if (opt.basis == ComputationalBasis::Dressed) {
    basis = dressed.states;
  } else {
    const auto comp = computational_indices(p);
    for (std::size_t k = 0; k < 4; ++k) {
      basis[k] = Vector::Zero(p.dim());
      basis[k](comp[k]) = 1.0;
    }
  }
  // Local frame: |q1 q2> picks up q1 * E10 + q2 * E01 relative to |00>.
  const double e01 = dressed.energies[1] - dressed.energies[0];
  const double e10 = dressed.energies[2] - dressed.energies[0];
  std::array<double, 4> frame{};
  for (int s = 0; s < 4; ++s) frame[static_cast<std::size_t>(s)] = t * ((s >> 1) * e10 + (s & 1) * e01);

  Eigen::Matrix<Complex, Eigen::Dynamic, 4> bmat(p.dim(), 4);
  for (int k = 0; k < 4; ++k) bmat.col(k) = basis[static_cast<std::size_t>(k)];

  std::array<Mat4, 16> images;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      DensityOp rho{basis[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(j)].adjoint()};
      // Drop round-off so the excitation-subspace detection stays tight.
      rho.matrix = rho.matrix.unaryExpr([](Complex z) { return std::abs(z) < 1e-300 ? Complex(0, 0) : z; });
      const DensityOp out = evolve(p, rho, t, opt.evolve);
      Mat4 proj = bmat.adjoint() * out.matrix * bmat;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) proj(r, c) *= std::polar(1.0, frame[static_cast<std::size_t>(r)] - frame[static_cast<std::size_t>(c)]);
      images[static_cast<std::size_t>(4 * i + j)] = proj;
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double herr =
          (images[static_cast<std::size_t>(4 * i + j)] - images[static_cast<std::size_t>(4 * j + i)].adjoint()).cwiseAbs().maxCoeff();
      if (herr > opt.hermiticity_tol) {
        throw NumericalError("propagated basis lost Hermiticity (error " + std::to_string(herr) + ")");
      }
    }
  }
  QuantumChannel ch{ptm_from_unit_images(images), false};
  ch.trace_preserving =
      std::abs(ch.ptm(0, 0) - 1.0) < 1e-8 && ch.ptm.row(0).tail<15>().cwiseAbs().maxCoeff() < 1e-8;
  return ch;
}

}  // namespace pseudo2d::cz
