#pragma once

// Lindblad evolution with the resonator as the only loss channel:
//
//   drho/dt = -i [H, rho] + kappa (a rho a' - 1/2 {a'a, rho})
//
// H and the jump operator never raise the total excitation number, so a state
// supported on {N <= n} stays there. evolve() integrates on that subspace
// and in the frame rotating at omega_r * N (exact, because [H, N] = 0), then
// maps the result back to the lab frame on the full space.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "pseudo2d/cz_model.hpp"
#include "pseudo2d/errors.hpp"
#include "pseudo2d/ode.hpp"

namespace pseudo2d::cz {

struct DensityOp {
  Matrix matrix;

  Eigen::Index dim() const { return matrix.rows(); }

  static DensityOp pure(const Vector& psi) { return DensityOp{psi * psi.adjoint()}; }

  static DensityOp basis(const DeviceParams& p, int q1, int q2, int n) {
    Vector psi = Vector::Zero(p.dim());
    psi(state_index(p, q1, q2, n)) = 1.0;
    return pure(psi);
  }

  Complex trace() const { return matrix.trace(); }
  double purity() const { return (matrix * matrix).trace().real(); }
  double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (matrix + matrix.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
};

struct EvolveOptions {
  ode::Tolerances tolerances{};
  // Integrate only on the smallest invariant excitation subspace. Turning
  // this off integrates the full q_levels^2 * r_levels space.
  bool restrict_subspace = true;
};

/// Largest total excitation number touched by rho (rows or columns).
inline int max_excitation(const DeviceParams& p, const Matrix& rho) {
  const auto exc = excitation_numbers(p);
  int n = 0;
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.cols(); ++c) {
      if (rho(r, c) != Complex(0.0, 0.0)) {
        n = std::max({n, exc[static_cast<std::size_t>(r)], exc[static_cast<std::size_t>(c)]});
      }
    }
  }
  return n;
}

inline DensityOp evolve(const DeviceParams& p, const DensityOp& rho0, double t,
                        const EvolveOptions& opt = {}, ode::Stats* stats = nullptr) {
  p.validate();
  if (rho0.dim() != p.dim()) {
    throw ValidationError("density operator has dimension " + std::to_string(rho0.dim()) +
                          ", expected " + std::to_string(p.dim()));
  }
  if (!(t >= 0.0)) throw ValidationError("evolution time must be >= 0");

  const auto exc = excitation_numbers(p);
  std::vector<int> idx;
  if (opt.restrict_subspace) {
    const int n_max = max_excitation(p, rho0.matrix);
    for (int i = 0; i < p.dim(); ++i) {
      if (exc[static_cast<std::size_t>(i)] <= n_max) idx.push_back(i);
    }
  } else {
    for (int i = 0; i < p.dim(); ++i) idx.push_back(i);
  }

  Matrix h = build_hamiltonian(p);
  for (int i = 0; i < p.dim(); ++i) h(i, i) -= p.omega_r * exc[static_cast<std::size_t>(i)];
  const Matrix hs = restrict(h, idx);
  const Matrix as = restrict(annihilation_resonator(p), idx);
  const Matrix ads = as.adjoint();
  const double kappa = p.kappa_value();
  // Non-Hermitian effective Hamiltonian: -i H rho + rho (i H) - kappa/2 {a'a, rho}
  const Matrix heff = hs - Complex(0.0, 0.5 * kappa) * (ads * as);
  const Matrix minus_i_heff = Complex(0.0, -1.0) * heff;
  const Matrix plus_i_heff_dag = Complex(0.0, 1.0) * heff.adjoint();

  auto rhs = [&](const Matrix& rho) -> Matrix {
    Matrix d = minus_i_heff * rho + rho * plus_i_heff_dag;
    if (kappa > 0.0) d.noalias() += kappa * (as * rho * ads);
    return d;
  };

  const Matrix start = restrict(rho0.matrix, idx);
  const Matrix end = ode::integrate(rhs, start, t, opt.tolerances, stats);

  DensityOp out{Matrix::Zero(p.dim(), p.dim())};
  const auto n = idx.size();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const int dn = exc[static_cast<std::size_t>(idx[r])] - exc[static_cast<std::size_t>(idx[c])];
      const double phase = -p.omega_r * t * dn;
      out.matrix(idx[r], idx[c]) = end(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                                   std::polar(1.0, phase);
    }
  }
  return out;
}

}  // namespace pseudo2d::cz
