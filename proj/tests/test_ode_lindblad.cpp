#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "pseudo2d/lindblad.hpp"
#include "pseudo2d/ode.hpp"

using namespace pseudo2d;
using namespace pseudo2d::cz;

namespace {

DeviceParams small_device(double q) {
  DeviceParams p = reference_device();
  p.r_levels = 3;
  return p.with_quality_factor(q);
}

// Column-stacked Liouvillian on the full space, lab frame.
Matrix liouvillian(const DeviceParams& p) {
  const Matrix h = build_hamiltonian(p);
  const Matrix a = annihilation_resonator(p);
  const Matrix n = a.adjoint() * a;
  const Matrix id = Matrix::Identity(p.dim(), p.dim());
  const double k = p.kappa_value();
  Matrix l = Complex(0, -1) * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
  l += k * Eigen::kroneckerProduct(a.conjugate(), a).eval();
  l -= 0.5 * k * (Eigen::kroneckerProduct(id, n).eval() + Eigen::kroneckerProduct(n.transpose(), id).eval());
  return l;
}

DensityOp superposition(const DeviceParams& p) {
  Vector psi = Vector::Zero(p.dim());
  psi(state_index(p, 0, 1, 0)) = 1.0;
  psi(state_index(p, 1, 0, 0)) = Complex(0.0, 1.0);
  psi(state_index(p, 1, 1, 0)) = -1.0;
  psi(state_index(p, 0, 0, 1)) = 0.5;
  psi.normalize();
  return DensityOp::pure(psi);
}

}  // namespace

TEST(Ode, ExponentialDecay) {
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  ode::Stats st;
  const auto out = ode::integrate([](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -v; }, y, 3.0, {}, &st);
  EXPECT_NEAR(out(0), std::exp(-3.0), 1e-9);
  EXPECT_NEAR(out(1), 2.0 * std::exp(-3.0), 1e-9);
  EXPECT_GT(st.accepted, 0);
  EXPECT_EQ(st.rhs_evals, 1 + 6 * (st.accepted + st.rejected));
}

TEST(Ode, HarmonicOscillatorPhase) {
  Eigen::VectorXcd y(1);
  y << Complex(1.0, 0.0);
  const double w = 7.0;
  const auto out = ode::integrate([&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return Complex(0, w) * v; },
                                  y, 10.0);
  EXPECT_NEAR(std::abs(out(0) - std::polar(1.0, w * 10.0)), 0.0, 1e-7);
}

TEST(Ode, ZeroTimeReturnsInput) {
  Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 4.0);
  EXPECT_EQ(ode::integrate([](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v; }, y, 0.0), y);
}

TEST(Ode, NonFiniteAndNegativeTime) {
  Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  auto bad = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v * std::nan(""); };
  EXPECT_THROW(ode::integrate(bad, y, 1.0), NumericalError);
  EXPECT_THROW(ode::integrate([](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v; }, y, -1.0),
               NumericalError);
}

TEST(Ode, StepBudget) {
  Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  ode::Tolerances tol;
  tol.max_steps = 3;
  auto stiff = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return -1e4 * v; };
  EXPECT_THROW(ode::integrate(stiff, y, 10.0, tol), NumericalError);
}

TEST(Evolve, MatchesLiouvillianExponential) {
  const auto p = small_device(50.0);
  const auto rho0 = superposition(p);
  const double t = 3e-9;
  const auto rho = evolve(p, rho0, t);

  const Matrix l = liouvillian(p);
  const Eigen::Map<const Vector> v0(rho0.matrix.data(), rho0.matrix.size());
  const Vector v = (l * t).exp() * v0;
  const Eigen::Map<const Matrix> oracle(v.data(), p.dim(), p.dim());
  EXPECT_LT((rho.matrix - oracle).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Evolve, FullSpaceAgreesWithRestricted) {
  const auto p = small_device(300.0);
  const auto rho0 = superposition(p);
  EvolveOptions full;
  full.restrict_subspace = false;
  const auto a = evolve(p, rho0, 5e-9);
  const auto b = evolve(p, rho0, 5e-9, full);
  EXPECT_LT((a.matrix - b.matrix).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Evolve, PhysicalState) {
  const auto p = reference_device().with_quality_factor(1e3);
  const auto rho = evolve(p, superposition(p), 20e-9);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-8);
  EXPECT_NEAR(rho.trace().imag(), 0.0, 1e-10);
  EXPECT_LT(rho.hermiticity_error(), 1e-8);
  EXPECT_GT(rho.min_eigenvalue(), -1e-8);
  EXPECT_LT(rho.purity(), 1.0 + 1e-8);
}

TEST(Evolve, UnitaryWithoutLossPreservesPurity) {
  auto p = reference_device();
  p.Q_i = std::numeric_limits<double>::infinity();
  const auto rho = evolve(p, superposition(p), 20e-9);
  EXPECT_NEAR(rho.purity(), 1.0, 1e-7);
}

TEST(Evolve, PhotonDecaysAtKappa) {
  auto p = reference_device().with_quality_factor(500.0);
  p.g = {0.0, 0.0};
  const auto rho0 = DensityOp::basis(p, 0, 0, 1);
  const Matrix a = annihilation_resonator(p);
  const Matrix n = a.adjoint() * a;
  for (double t : {0.5e-9, 2e-9, 10e-9}) {
    const auto rho = evolve(p, rho0, t);
    const double mean_n = (n * rho.matrix).trace().real();
    EXPECT_NEAR(mean_n, std::exp(-p.kappa_value() * t), 1e-8) << "t=" << t;
  }
}

TEST(Evolve, RejectsBadInput) {
  const auto p = reference_device();
  EXPECT_THROW(evolve(p, DensityOp{Matrix::Identity(3, 3)}, 1e-9), ValidationError);
  EXPECT_THROW(evolve(p, DensityOp::basis(p, 0, 0, 0), -1.0), ValidationError);
  auto bad = p;
  bad.Q_i = 100.0;
  bad.kappa = 1.0;
  EXPECT_THROW(evolve(bad, DensityOp::basis(p, 0, 0, 0), 1e-9), ValidationError);
}

TEST(Evolve, GroundStateIsStationary) {
  const auto p = reference_device().with_quality_factor(100.0);
  const auto rho0 = DensityOp::basis(p, 0, 0, 0);
  const auto rho = evolve(p, rho0, 50e-9);
  EXPECT_LT((rho.matrix - rho0.matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolve, MaxExcitation) {
  const auto p = reference_device();
  EXPECT_EQ(max_excitation(p, DensityOp::basis(p, 1, 1, 0).matrix), 2);
  EXPECT_EQ(max_excitation(p, DensityOp::basis(p, 2, 1, 1).matrix), 4);
  EXPECT_EQ(max_excitation(p, Matrix::Zero(p.dim(), p.dim())), 0);
}
