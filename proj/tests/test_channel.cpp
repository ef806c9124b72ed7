#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "pseudo2d/channel.hpp"

using namespace pseudo2d;
using namespace pseudo2d::cz;

namespace {

// Random CPTP map with three Kraus operators from a Haar-ish isometry.
QuantumChannel random_channel(std::mt19937_64& rng, int n_kraus = 3) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(4 * n_kraus, 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  const Eigen::MatrixXcd v = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), 4);
  std::vector<Mat4> kraus;
  for (int k = 0; k < n_kraus; ++k) kraus.push_back(v.block(4 * k, 0, 4, 4));
  return {ptm_from_kraus(kraus), true};
}

QuantumChannel identity_channel() { return {ptm_from_unitary(Mat4::Identity()), true}; }

QuantumChannel depolarizing() {
  Ptm r = Ptm::Zero();
  r(0, 0) = 1.0;
  return {r, true};
}

}  // namespace

TEST(Ptm, UnitaryChannelsAreOrthogonal) {
  const Ptm r = ptm_from_unitary(cz_unitary());
  EXPECT_LT((r * r.transpose() - Ptm::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((identity_channel().ptm - Ptm::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  // CZ is self-inverse.
  EXPECT_LT((r * r - Ptm::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ptm, ZRotationClosedFormMatchesUnitary) {
  for (double t1 : {-2.0, 0.0, 0.4, 3.1}) {
    for (double t2 : {-0.7, 1.3}) {
      const Ptm a = z_rotation_ptm(t1, t2);
      const Ptm b = ptm_from_unitary(z_rotations(t1, t2));
      EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12) << t1 << "," << t2;
    }
  }
}

TEST(Ptm, ApplyMatchesKraus) {
  std::mt19937_64 rng(3);
  const auto ch = random_channel(rng);
  Eigen::Vector4cd psi(Complex(1, 0), Complex(0, 1), Complex(-0.5, 0.2), Complex(0.3, 0));
  psi.normalize();
  const Mat4 rho = psi * psi.adjoint();
  const Mat4 out = apply_channel(ch, rho);
  EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
  EXPECT_LT((out - out.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  const Mat4 u_out = apply_channel(ideal_cz(), rho);
  EXPECT_LT((u_out - cz_unitary() * rho * cz_unitary().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ptm, CompletePositivity) {
  std::mt19937_64 rng(9);
  EXPECT_TRUE(is_completely_positive(random_channel(rng)));
  EXPECT_TRUE(is_completely_positive(depolarizing()));
  QuantumChannel transpose{Ptm::Identity(), true};
  // Transposition flips the sign of every Y-odd Pauli and is not CP.
  const auto& P = detail::two_qubit_paulis();
  for (int a = 0; a < 16; ++a) {
    if ((P[a].transpose() - P[a]).cwiseAbs().maxCoeff() > 1e-12) transpose.ptm(a, a) = -1.0;
  }
  EXPECT_FALSE(is_completely_positive(transpose));
}

TEST(Ptm, MaxOutputTrace) {
  EXPECT_NEAR(max_output_trace(ideal_cz()), 1.0, 1e-12);
  QuantumChannel half{0.5 * Ptm::Identity(), false};
  EXPECT_NEAR(max_output_trace(half), 0.5, 1e-12);
}

TEST(Fidelity, IdentityVersusCz) {
  EXPECT_NEAR(avg_gate_fidelity(identity_channel(), ideal_cz()), 0.4, 1e-9);
  EXPECT_NEAR(avg_gate_fidelity(ideal_cz(), ideal_cz()), 1.0, 1e-12);
}

TEST(Fidelity, CompletelyDepolarizing) { EXPECT_NEAR(avg_gate_fidelity(depolarizing()), 0.25, 1e-12); }

TEST(Fidelity, LeakyChannelUsesTraceLoss) {
  // Damp everything by a factor s: F scales by s.
  QuantumChannel s{0.7 * ideal_cz().ptm, false};
  EXPECT_NEAR(avg_gate_fidelity(s), 0.7, 1e-12);
}

TEST(Fidelity, MonteCarloAgreesForRandomChannels) {
  std::mt19937_64 rng(2024);
  int outside = 0;
  for (int k = 0; k < 20; ++k) {
    const auto ch = random_channel(rng, 1 + k % 4);
    const double exact = avg_gate_fidelity(ch, ideal_cz());
    const auto mc = avg_gate_fidelity_mc(ch, cz_unitary(), 10000, 100 + k);
    EXPECT_EQ(mc.samples, 10000);
    if (std::abs(mc.mean - exact) > 3.0 * mc.std_error) ++outside;
  }
  // At 3 sigma about 0.3% of estimates fall outside; allow one.
  EXPECT_LE(outside, 1);
}

TEST(Fidelity, MonteCarloLeakyChannel) {
  QuantumChannel s{0.6 * ideal_cz().ptm, false};
  const auto mc = avg_gate_fidelity_mc(s, cz_unitary(), 2000, 1);
  EXPECT_NEAR(mc.mean, 0.6, 1e-12);
  EXPECT_THROW(avg_gate_fidelity_mc(s, cz_unitary(), 1, 1), ValidationError);
}

TEST(Fidelity, MonteCarloIsSeeded) {
  std::mt19937_64 rng(1);
  const auto ch = random_channel(rng);
  const auto a = avg_gate_fidelity_mc(ch, cz_unitary(), 500, 77);
  const auto b = avg_gate_fidelity_mc(ch, cz_unitary(), 500, 77);
  EXPECT_EQ(a.mean, b.mean);
}

TEST(PhaseCorrect, RecoversKnownRotations) {
  const QuantumChannel skewed = compose({z_rotation_ptm(0.3, -0.7), true}, ideal_cz());
  const auto pc = phase_correct(skewed);
  EXPECT_NEAR(pc.theta1, -0.3, 1e-6);
  EXPECT_NEAR(pc.theta2, 0.7, 1e-6);
  EXPECT_NEAR(pc.fidelity_after, 1.0, 1e-10);
  EXPECT_LT(pc.fidelity_before, 1.0);
}

TEST(PhaseCorrect, NeverWorse) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 10; ++k) {
    const auto ch = compose(random_channel(rng, 1), ideal_cz());
    const auto pc = phase_correct(ch);
    EXPECT_GE(pc.fidelity_after, pc.fidelity_before - 1e-12);
    EXPECT_LE(std::abs(pc.theta1), std::numbers::pi);
    EXPECT_LE(std::abs(pc.theta2), std::numbers::pi);
  }
}

TEST(PhaseCorrect, IdealNeedsNoCorrection) {
  const auto pc = phase_correct(ideal_cz());
  EXPECT_NEAR(pc.theta1, 0.0, 1e-6);
  EXPECT_NEAR(pc.theta2, 0.0, 1e-6);
}
