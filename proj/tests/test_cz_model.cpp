#include <gtest/gtest.h>

#include <cmath>

#include "pseudo2d/cz_model.hpp"

using namespace pseudo2d;
using namespace pseudo2d::cz;

namespace {

DeviceParams with_coupling(double g_hz) {
  auto p = reference_device();
  p.g = {kTwoPi * g_hz, kTwoPi * g_hz};
  return p;
}

}  // namespace

TEST(Basis, IndexRoundTrip) {
  const auto p = reference_device();
  EXPECT_EQ(p.dim(), 45);
  for (int i = 0; i < p.dim(); ++i) {
    const auto s = state_of(p, i);
    EXPECT_EQ(state_index(p, s.q1, s.q2, s.n), i);
  }
  const auto comp = computational_indices(p);
  EXPECT_EQ(comp[0], 0);
  EXPECT_EQ(comp[3], state_index(p, 1, 1, 0));
}

TEST(Operators, LadderCommutators) {
  const auto p = reference_device();
  const Matrix a = annihilation_resonator(p);
  const Matrix b = annihilation_qubit(p, 1);
  // [a, a'] = 1 away from the truncation edge.
  const Matrix c = a * a.adjoint() - a.adjoint() * a;
  for (int i = 0; i < p.dim(); ++i) {
    if (state_of(p, i).n < p.r_levels - 1) {
      EXPECT_NEAR(std::abs(c(i, i) - 1.0), 0.0, 1e-12);
    }
  }
  EXPECT_LT((a * b - b * a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hamiltonian, HermitianAndExcitationConserving) {
  const auto p = reference_device();
  const Matrix h = build_hamiltonian(p);
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-6);
  const auto exc = excitation_numbers(p);
  for (int r = 0; r < p.dim(); ++r) {
    for (int c = 0; c < p.dim(); ++c) {
      if (exc[r] != exc[c]) {
        EXPECT_EQ(h(r, c), Complex(0.0, 0.0));
      }
    }
  }
}

TEST(Hamiltonian, BareDiagonal) {
  const auto p = reference_device();
  const Matrix h = build_hamiltonian(p);
  const double e02 = 2 * p.omega01[1] + p.eta[1];
  EXPECT_NEAR(h(state_index(p, 0, 2, 0), state_index(p, 0, 2, 0)).real(), e02, 1e-3);
  EXPECT_NEAR(h(state_index(p, 1, 1, 0), state_index(p, 1, 1, 0)).real(), p.omega01[0] + p.omega01[1], 1e-3);
  EXPECT_NEAR(h(state_index(p, 0, 0, 3), state_index(p, 0, 0, 3)).real(), 3 * p.omega_r, 1e-3);
  EXPECT_NEAR(std::abs(h(state_index(p, 1, 0, 0), state_index(p, 0, 0, 1))), p.g[0], 1e-6);
}

TEST(CzCondition, ReferenceDeviceSitsOnResonance) {
  EXPECT_NEAR(check_cz_condition(reference_device()), 0.0, 1e-3);
  auto p = reference_device();
  p.omega01[0] += kTwoPi * 10e6;
  EXPECT_NEAR(check_cz_condition(p) / kTwoPi, 10e6, 1e-3);
}

TEST(GateTime, ClosedForm) {
  EXPECT_NEAR(gate_time(kTwoPi * 3e6), 117.851e-9, 0.01e-9);
  EXPECT_NEAR(gate_time(kTwoPi * 3e6) * 1e9, 117.9, 0.1);
  EXPECT_THROW(gate_time(0.0), ValidationError);
  EXPECT_THROW(gate_time(-1.0), ValidationError);
}

TEST(DeviceParams, Validation) {
  auto p = reference_device();
  EXPECT_NO_THROW(p.validate());
  p.q_levels = 2;
  EXPECT_THROW(p.validate(), ValidationError);
  p = reference_device();
  p.Q_i = 1e4;
  p.kappa = p.omega_r / 1e4;
  EXPECT_NO_THROW(p.validate());
  p.kappa = 2 * p.omega_r / 1e4;
  EXPECT_THROW(p.validate(), ValidationError);
  p = reference_device();
  p.kappa = -1.0;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(DeviceParams, KappaFromQuality) {
  const auto p = reference_device().with_quality_factor(2e3);
  EXPECT_NEAR(p.kappa_value() * 2e3, p.omega_r, 1e-3);
  EXPECT_EQ(reference_device().with_quality_factor(std::numeric_limits<double>::infinity()).kappa_value(), 0.0);
  EXPECT_EQ(reference_device().kappa_value(), 0.0);
}

TEST(Resonance, ReferenceDeviceEffectiveCoupling) {
  const auto r = find_cz_resonance(reference_device());
  // Measured numerically for the reference device; see README.
  EXPECT_NEAR(r.g_eff / kTwoPi / 1e6, 15.50, 0.05);
  EXPECT_NEAR(r.min_gap / kTwoPi / 1e6, 43.84, 0.1);
  EXPECT_NEAR(r.omega01_first / kTwoPi / 1e9, 5.6096, 0.0005);
  EXPECT_NEAR(r.g_eff, r.min_gap / (2 * std::sqrt(2.0)), 1e-9 * r.g_eff);
}

TEST(Resonance, GapIsMinimalAtTunedPoint) {
  const auto p = reference_device();
  const auto r = find_cz_resonance(p);
  for (double dw : {-2e6, -0.5e6, 0.5e6, 2e6}) {
    auto q = p;
    q.omega01[0] = r.omega01_first + kTwoPi * dw;
    EXPECT_GT(avoided_crossing(q).gap, r.min_gap);
  }
  auto q = tune_to_cz_resonance(p);
  EXPECT_EQ(q.omega01[0], r.omega01_first);
  ASSERT_TRUE(q.g_eff.has_value());
  const auto ac = avoided_crossing(q);
  EXPECT_GT(ac.overlap_11, 0.3);
  EXPECT_GT(ac.overlap_02, 0.3);
}

TEST(Resonance, WeakCouplingScalesQuadratically) {
  const double a = estimate_g_eff(with_coupling(5e6));
  const double b = estimate_g_eff(with_coupling(10e6));
  EXPECT_NEAR(b / a, 4.0, 0.1);
}

TEST(Resonance, NoCouplingMeansNoGap) {
  EXPECT_LT(estimate_g_eff(with_coupling(0.0)) / kTwoPi, 10.0);
}

TEST(DressedBasis, OrthonormalAndCloseToBare) {
  const auto p = tune_to_cz_resonance(reference_device());
  const auto db = dressed_computational_basis(p);
  const auto comp = computational_indices(p);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Complex ov = db.states[i].dot(db.states[j]);
      EXPECT_NEAR(std::abs(ov - (i == j ? 1.0 : 0.0)), 0.0, 1e-9);
    }
    EXPECT_GT(std::norm(db.states[i](comp[i])), 0.8) << "state " << i;
  }
  // Vacuum is exact; single excitations are pushed by the dispersive shift.
  EXPECT_NEAR(db.energies[0], 0.0, 1e-3);
  EXPECT_LT(db.energies[1], p.omega01[1]);
  EXPECT_LT(db.energies[2], p.omega01[0]);
}

TEST(Sector, SizesAndRestriction) {
  const auto p = reference_device();
  EXPECT_EQ(sector(p, 0).size(), 1u);
  EXPECT_EQ(sector(p, 1).size(), 3u);
  EXPECT_EQ(sector(p, 2).size(), 6u);
  const Matrix m = Matrix::Identity(p.dim(), p.dim());
  EXPECT_EQ(restrict(m, sector(p, 2)), Matrix::Identity(6, 6));
}
