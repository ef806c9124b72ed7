#pragma once

// Two transmons coupled through a shared, damped resonator.
//
//   H/hbar = w_r a'a + sum_i [ w_i b_i'b_i + (eta_i/2) b_i'b_i (b_i'b_i - 1)
//                              + g_i (a' b_i + a b_i') ]
//
// Basis states |q1 q2; n> are indexed (q1 * q_levels + q2) * r_levels + n.
// All frequencies are angular (rad/s). The Hamiltonian conserves the total
// excitation number, which the rest of the module leans on heavily.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pseudo2d/errors.hpp"

namespace pseudo2d::cz {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHbar = 1.054571817e-34;  // J s

struct DeviceParams {
  double omega_r = 0.0;                  // rad/s
  std::array<double, 2> omega01{};       // rad/s, 0->1 transition of each qubit
  std::array<double, 2> eta{};           // rad/s, anharmonicity (negative for transmons)
  std::array<double, 2> g{};             // rad/s, qubit-resonator coupling
  int q_levels = 3;
  int r_levels = 5;
  std::optional<double> Q_i;             // internal quality factor
  std::optional<double> kappa;           // rad/s
  std::optional<double> g_eff;           // rad/s
  std::optional<double> t_gate;          // s

  int dim() const { return q_levels * q_levels * r_levels; }

  void validate() const {
    if (q_levels < 3) throw ValidationError("q_levels must be >= 3");
    if (r_levels < 2) throw ValidationError("r_levels must be >= 2");
    if (!(omega_r > 0.0)) throw ValidationError("omega_r must be positive");
    if (kappa && !(*kappa >= 0.0)) throw ValidationError("kappa must be >= 0");
    if (Q_i && !(*Q_i > 0.0)) throw ValidationError("Q_i must be positive");
    if (kappa && Q_i && std::isfinite(*Q_i)) {
      const double lhs = *kappa * *Q_i;
      if (std::abs(lhs - omega_r) > 1e-9 * omega_r) {
        throw ValidationError("kappa * Q_i must equal omega_r (got " + std::to_string(lhs) +
                              " vs " + std::to_string(omega_r) + ")");
      }
    }
    if (t_gate && !(*t_gate >= 0.0)) throw ValidationError("t_gate must be >= 0");
  }

  /// Photon loss rate; explicit kappa wins, then omega_r / Q_i, else 0.
  double kappa_value() const {
    if (kappa) return *kappa;
    if (Q_i) return std::isfinite(*Q_i) ? omega_r / *Q_i : 0.0;
    return 0.0;
  }

  DeviceParams with_quality_factor(double q) const {
    DeviceParams p = *this;
    p.Q_i = q;
    p.kappa = std::isfinite(q) ? omega_r / q : 0.0;
    return p;
  }
};

/// Qubits at 5.6 / 5.8 GHz, -200 MHz anharmonicity, 6 GHz resonator,
/// 81.2 MHz couplings.
inline DeviceParams reference_device() {
  DeviceParams p;
  p.omega_r = kTwoPi * 6.0e9;
  p.omega01 = {kTwoPi * 5.6e9, kTwoPi * 5.8e9};
  p.eta = {kTwoPi * -200e6, kTwoPi * -200e6};
  p.g = {kTwoPi * 81.2e6, kTwoPi * 81.2e6};
  return p;
}

struct BasisState {
  int q1 = 0;
  int q2 = 0;
  int n = 0;
  int excitations() const { return q1 + q2 + n; }
};

inline int state_index(const DeviceParams& p, int q1, int q2, int n) {
  return (q1 * p.q_levels + q2) * p.r_levels + n;
}

inline BasisState state_of(const DeviceParams& p, int index) {
  BasisState s;
  s.n = index % p.r_levels;
  const int q = index / p.r_levels;
  s.q2 = q % p.q_levels;
  s.q1 = q / p.q_levels;
  return s;
}

inline std::vector<int> excitation_numbers(const DeviceParams& p) {
  std::vector<int> out(static_cast<std::size_t>(p.dim()));
  for (int i = 0; i < p.dim(); ++i) out[static_cast<std::size_t>(i)] = state_of(p, i).excitations();
  return out;
}

/// Computational states |00>, |01>, |10>, |11> with the resonator empty.
inline std::array<int, 4> computational_indices(const DeviceParams& p) {
  return {state_index(p, 0, 0, 0), state_index(p, 0, 1, 0), state_index(p, 1, 0, 0),
          state_index(p, 1, 1, 0)};
}

/// Resonator annihilation operator on the full space.
inline Matrix annihilation_resonator(const DeviceParams& p) {
  Matrix a = Matrix::Zero(p.dim(), p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    const auto s = state_of(p, i);
    if (s.n > 0) a(state_index(p, s.q1, s.q2, s.n - 1), i) = std::sqrt(static_cast<double>(s.n));
  }
  return a;
}

/// Annihilation operator of qubit k (0 or 1).
inline Matrix annihilation_qubit(const DeviceParams& p, int k) {
  Matrix b = Matrix::Zero(p.dim(), p.dim());
  for (int i = 0; i < p.dim(); ++i) {
    const auto s = state_of(p, i);
    const int level = k == 0 ? s.q1 : s.q2;
    if (level == 0) continue;
    const int j = k == 0 ? state_index(p, s.q1 - 1, s.q2, s.n) : state_index(p, s.q1, s.q2 - 1, s.n);
    b(j, i) = std::sqrt(static_cast<double>(level));
  }
  return b;
}

inline Matrix build_hamiltonian(const DeviceParams& p) {
  p.validate();
  const Matrix a = annihilation_resonator(p);
  const Matrix ad = a.adjoint();
  Matrix h = p.omega_r * (ad * a);
  const Matrix id = Matrix::Identity(p.dim(), p.dim());
  for (int k = 0; k < 2; ++k) {
    const Matrix b = annihilation_qubit(p, k);
    const Matrix n = b.adjoint() * b;
    h += p.omega01[k] * n + 0.5 * p.eta[k] * n * (n - id) + p.g[k] * (ad * b + a * b.adjoint());
  }
  return 0.5 * (h + h.adjoint());
}

/// Detuning of the |11> <-> |02> resonance: w1 - (w2 + eta2).
inline double check_cz_condition(const DeviceParams& p) {
  return p.omega01[0] - (p.omega01[1] + p.eta[1]);
}

inline double gate_time(double g_eff) {
  if (!(g_eff > 0.0)) throw ValidationError("g_eff must be positive");
  return std::numbers::pi / (std::sqrt(2.0) * g_eff);
}

/// Basis indices whose total excitation number equals n.
inline std::vector<int> sector(const DeviceParams& p, int n) {
  std::vector<int> out;
  for (int i = 0; i < p.dim(); ++i) {
    if (state_of(p, i).excitations() == n) out.push_back(i);
  }
  return out;
}

inline Matrix restrict(const Matrix& m, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  }
  return out;
}

struct AvoidedCrossing {
  double gap = 0.0;       // rad/s, splitting of the |11;0> / |02;0> branches
  double overlap_11 = 0;  // weight of bare |11;0> in its branch
  double overlap_02 = 0;
};

/// Splitting of the two two-excitation eigenstates that carry most of the
/// bare |11;0> and |02;0> weight at the given parameters.
inline AvoidedCrossing avoided_crossing(const DeviceParams& p) {
  const auto idx = sector(p, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> es(restrict(build_hamiltonian(p), idx));
  const auto& v = es.eigenvectors();
  const auto& e = es.eigenvalues();
  int pos11 = -1, pos02 = -1;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] == state_index(p, 1, 1, 0)) pos11 = static_cast<int>(k);
    if (idx[k] == state_index(p, 0, 2, 0)) pos02 = static_cast<int>(k);
  }
  // Two branches with the largest combined weight on span{|11;0>, |02;0>}.
  int first = -1, second = -1;
  double w_first = -1, w_second = -1;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double w = std::norm(v(pos11, c)) + std::norm(v(pos02, c));
    if (w > w_first) {
      second = first;
      w_second = w_first;
      first = static_cast<int>(c);
      w_first = w;
    } else if (w > w_second) {
      second = static_cast<int>(c);
      w_second = w;
    }
  }
  if (w_second < 0.5) {
    throw NumericalError("cannot identify the |11;0>/|02;0> branches (weight " +
                         std::to_string(w_second) + " < 0.5)");
  }
  AvoidedCrossing out;
  out.gap = std::abs(e(first) - e(second));
  out.overlap_11 = std::max(std::norm(v(pos11, first)), std::norm(v(pos11, second)));
  out.overlap_02 = std::max(std::norm(v(pos02, first)), std::norm(v(pos02, second)));
  return out;
}

struct CzResonance {
  double omega01_first = 0.0;  // rad/s, qubit-1 frequency at the minimum gap
  double min_gap = 0.0;        // rad/s
  double g_eff = 0.0;          // rad/s, min_gap / (2 sqrt 2)
};

/// Tunes qubit 1 across the |11;0>/|02;0> avoided crossing (golden-section
/// search within +-|eta_2|/2 of the bare condition) and reports the minimum
/// splitting.
inline CzResonance find_cz_resonance(const DeviceParams& p) {
  p.validate();
  const double centre = p.omega01[1] + p.eta[1];
  const double half = 0.5 * std::max(std::abs(p.eta[1]), kTwoPi * 1e6);
  auto gap_at = [&](double w1) {
    DeviceParams q = p;
    q.omega01[0] = w1;
    return avoided_crossing(q).gap;
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = centre - half, hi = centre + half;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = gap_at(x1), f2 = gap_at(x2);
  for (int it = 0; it < 200 && (hi - lo) > kTwoPi * 1.0; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = gap_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = gap_at(x2);
    }
  }
  CzResonance r;
  r.omega01_first = f1 < f2 ? x1 : x2;
  r.min_gap = std::min(f1, f2);
  r.g_eff = r.min_gap / (2.0 * std::sqrt(2.0));
  return r;
}

inline double estimate_g_eff(const DeviceParams& p) { return find_cz_resonance(p).g_eff; }

/// Copy of p with qubit 1 parked at the dressed resonance.
inline DeviceParams tune_to_cz_resonance(const DeviceParams& p) {
  const auto r = find_cz_resonance(p);
  DeviceParams q = p;
  q.omega01[0] = r.omega01_first;
  q.g_eff = r.g_eff;
  return q;
}

/// Resonator-dressed images of the photon-free states.
///
/// Within each excitation sector the eigenvectors with the most photon-free
/// weight span the dressed qubit subspace. Bare photon-free states are
/// projected into it and symmetrically orthonormalised, which is the
/// block-diagonalising transformation closest to the identity. The
/// qubit-qubit structure inside the block (e.g. |11> vs |02>) is left
/// untouched.
struct DressedBasis {
  std::array<Vector, 4> states;      // dressed |00>, |01>, |10>, |11>
  std::array<double, 4> energies{};  // <s|H|s>, rad/s
};

inline DressedBasis dressed_computational_basis(const DeviceParams& p) {
  const Matrix h = build_hamiltonian(p);
  const auto comp = computational_indices(p);
  DressedBasis out;
  for (int n = 0; n <= 2; ++n) {
    const auto idx = sector(p, n);
    std::vector<int> photon_free;  // positions inside idx
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (state_of(p, idx[k]).n == 0) photon_free.push_back(static_cast<int>(k));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(restrict(h, idx));
    const Matrix& v = es.eigenvectors();
    const auto m = static_cast<Eigen::Index>(photon_free.size());
    std::vector<std::pair<double, Eigen::Index>> weight;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      double w = 0;
      for (int r : photon_free) w += std::norm(v(r, c));
      weight.emplace_back(w, c);
    }
    std::sort(weight.begin(), weight.end(), [](auto& a, auto& b) { return a.first > b.first; });
    Matrix block(v.rows(), m);
    for (Eigen::Index k = 0; k < m; ++k) block.col(k) = v.col(weight[static_cast<std::size_t>(k)].second);
    const Matrix proj = block * block.adjoint();
    Matrix x(v.rows(), m);
    for (Eigen::Index k = 0; k < m; ++k) x.col(k) = proj.col(photon_free[static_cast<std::size_t>(k)]);
    Eigen::SelfAdjointEigenSolver<Matrix> gram(x.adjoint() * x);
    if (gram.eigenvalues().minCoeff() < 1e-6) {
      throw NumericalError("dressed subspace is degenerate in excitation sector " + std::to_string(n));
    }
    const Matrix inv_sqrt =
        gram.eigenvectors() * gram.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
        gram.eigenvectors().adjoint();
    const Matrix ortho = x * inv_sqrt;

    for (int c = 0; c < 4; ++c) {
      for (Eigen::Index k = 0; k < m; ++k) {
        if (idx[static_cast<std::size_t>(photon_free[static_cast<std::size_t>(k)])] != comp[static_cast<std::size_t>(c)]) continue;
        Vector full = Vector::Zero(p.dim());
        for (std::size_t r = 0; r < idx.size(); ++r) full(idx[r]) = ortho(static_cast<Eigen::Index>(r), k);
        out.states[static_cast<std::size_t>(c)] = full;
        out.energies[static_cast<std::size_t>(c)] = (full.adjoint() * h * full)(0, 0).real();
      }
    }
  }
  return out;
}

}  // namespace pseudo2d::cz
