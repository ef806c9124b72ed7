// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <Eigen/QR>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pseudo2d/channel.hpp"
#include "pseudo2d/freq_alloc.hpp"
#include "pseudo2d/layout.hpp"
#include "pseudo2d/mw_analysis.hpp"
#include "pseudo2d/q_sweep.hpp"

using namespace pseudo2d;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

// ---- 1 ---------------------------------------------------------------------

Outcome resource_arithmetic() {
  const auto r15 = resource_estimate({15, 1});
  const auto r21 = resource_estimate({21, 1});
  bool ok = r15.M == 29 && r15.max_airbridges_per_resonator == 14 && r21.M == 41 &&
            r21.max_airbridges_per_resonator == 20;
  std::string rotated;
  for (int d : {3, 5, 7}) {
    const auto r = resource_estimate({d, 1, Encoding::Rotated});
    ok = ok && r.qubits_per_logical_block == 2LL * d * d - 1;
    rotated += " " + std::to_string(r.qubits_per_logical_block);
  }
  return {ok, fmt("d=15: M=%d bridges=%d; d=21: M=%d bridges=%d; rotated blocks", r15.M,
                  r15.max_airbridges_per_resonator, r21.M, r21.max_airbridges_per_resonator) +
                  rotated};
}

// ---- 2 ---------------------------------------------------------------------

std::set<std::pair<int, int>> nearest_neighbours(const PhysicalLayout& l) {
  std::set<std::pair<int, int>> s;
  for (const auto& a : l.qubits) {
    for (const auto& b : l.qubits) {
      const int dist = std::abs(a.grid_pos.row - b.grid_pos.row) + std::abs(a.grid_pos.col - b.grid_pos.col);
      if (a.id < b.id && dist == 1) s.insert({a.id, b.id});
    }
  }
  return s;
}

std::set<std::pair<int, int>> edges(const PhysicalLayout& l) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : l.resonators) s.insert(std::minmax(e.endpoints.first, e.endpoints.second));
  return s;
}

Outcome fold_correctness() {
  int cases = 0, bad = 0;
  std::string first_bad;
  for (int d : {3, 5, 7}) {
    for (int n : {1, 2, 3}) {
      const auto grid = build_grid({d, n});
      const auto folded = fold(grid);
      int max_cross = 0;
      for (const auto& e : folded.resonators) max_cross = std::max(max_cross, e.crossings);
      const bool ok = unfold(folded) == grid && edges(folded) == nearest_neighbours(grid) &&
                      edges(grid) == edges(folded) && max_cross == d - 1;
      ++cases;
      if (!ok) {
        ++bad;
        if (first_bad.empty()) first_bad = fmt(" first failure d=%d N=%d", d, n);
      }
    }
  }
  return {bad == 0, fmt("%d/%d layouts correct", cases - bad, cases) + first_bad};
}

// ---- 3 ---------------------------------------------------------------------

Outcome frequency_allocation() {
  const auto layout = fold(build_grid({3, 2}));
  const auto graph = crossing_graph(layout);
  const auto res = allocate(graph, {7.0e9, 10.2e9}, 10e6);
  const auto* plan = std::get_if<FrequencyPlan>(&res);
  const std::size_t violations = plan ? verify(*plan, graph).size() : 0;

  CrossingGraph k5;
  for (int i = 0; i < 5; ++i) {
    k5.nodes.push_back(i);
    for (int j = i + 1; j < 5; ++j) k5.edges.push_back({i, j});
  }
  const auto narrow = allocate(k5, {8.0e9, 8.03e9}, 10e6);
  const auto* inf = std::get_if<Infeasible>(&narrow);
  const bool ok = plan && violations == 0 && inf;
  return {ok, fmt("d=3 N=2: %s, %zu resonators, %zu violations; 5-clique in 30 MHz: %s",
                  plan ? "allocated" : "infeasible", plan ? plan->assignment.size() : 0, violations,
                  inf ? (inf->kind == Infeasible::Kind::Clique ? "infeasible (clique)" : "infeasible (saturated)")
                      : "allocated")};
}

// ---- 4 ---------------------------------------------------------------------

Outcome cz_curve() {
  const std::vector<double> qs(cz::kDefaultQualityGrid.begin(), cz::kDefaultQualityGrid.end());
  const auto r = cz::q_sweep(cz::reference_device(), qs);
  double i5 = 0, i6 = 0;
  for (const auto& p : r.points) {
    if (p.Q_i == 1e5) i5 = p.infidelity;
    if (p.Q_i == 1e6) i6 = p.infidelity;
  }
  const bool a = r.monotone;
  const bool b = r.threshold_crossing_q && *r.threshold_crossing_q >= 1e3 && *r.threshold_crossing_q <= 4e3;
  const bool c = rel(i5, i6) <= 0.10;
  std::string crossing = r.threshold_crossing_q ? fmt("%.3g", *r.threshold_crossing_q) : "none";
  return {a && b && c,
          fmt("(a) monotone %s; (b) 0.75%% crossing at Q=%s, want [1e3, 4e3] %s; (c) infid(1e5)=%.4f%% "
              "infid(1e6)=%.4f%% %s; t_gate=%.3f ns",
              a ? "ok" : "FAIL", crossing.c_str(), b ? "ok" : "FAIL", 100 * i5, 100 * i6, c ? "ok" : "FAIL",
              r.calibration.t_gate * 1e9)};
}

// ---- 5 ---------------------------------------------------------------------

Outcome gate_time_identity() {
  const double t = cz::gate_time(cz::kTwoPi * 3e6) * 1e9;
  return {std::abs(t - 117.9) <= 0.1, fmt("pi/(sqrt2 * 2pi * 3 MHz) = %.3f ns", t)};
}

// ---- 6 ---------------------------------------------------------------------

cz::QuantumChannel random_channel(std::mt19937_64& rng, int n_kraus) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(4 * n_kraus, 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = cz::Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  const Eigen::MatrixXcd v = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), 4);
  std::vector<cz::Mat4> kraus;
  for (int k = 0; k < n_kraus; ++k) kraus.push_back(v.block(4 * k, 0, 4, 4));
  return {cz::ptm_from_kraus(kraus), true};
}

Outcome fidelity_cross_validation() {
  std::mt19937_64 rng(20240607);
  int within = 0;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto ch = random_channel(rng, 1 + k % 4);
    const double exact = cz::avg_gate_fidelity(ch);
    const auto mc = cz::avg_gate_fidelity_mc(ch, cz::cz_unitary(), 10000, 1000 + k);
    const double z = std::abs(mc.mean - exact) / mc.std_error;
    worst = std::max(worst, z);
    if (z <= 3.0) ++within;
  }
  const cz::QuantumChannel identity{cz::ptm_from_unitary(cz::Mat4::Identity()), true};
  const double f_id = cz::avg_gate_fidelity(identity);
  const bool ok = within == 20 && std::abs(f_id - 0.4) <= 1e-9;
  return {ok, fmt("%d/20 channels within 3 SE (worst %.2f SE); F(identity, CZ) = %.12f", within, worst, f_id)};
}

// ---- 7 ---------------------------------------------------------------------

mw::ResonatorFit reference_resonator() {
  mw::ResonatorFit p;
  p.f_r = 10.1326e9;
  p.Q_i = 2.3e4;
  p.Q_c_mag = 3.141e5;
  p.Q_l = 1.0 / (1.0 / p.Q_i + 1.0 / p.Q_c_mag);
  return p;
}

double worst_error(const mw::ResonatorFit& f, const mw::ResonatorFit& p) {
  return std::max({rel(f.f_r, p.f_r), rel(f.Q_l, p.Q_l), rel(f.Q_i, p.Q_i), rel(f.Q_c_mag, p.Q_c_mag)});
}

Outcome resonator_round_trip() {
  const auto p = reference_resonator();
  const double noiseless = worst_error(mw::fit_resonance(mw::synthesize(p, mw::frequency_grid(p.f_r, p.Q_l, 10, 201))), p);

  const auto clean = mw::synthesize(p, mw::frequency_grid(p.f_r, p.Q_l, 5, 2001));
  const double sigma = std::pow(10.0, -40.0 / 20.0) / std::sqrt(2.0);
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    auto t = clean;
    for (auto& z : t.s21) z += cz::Complex(n(rng), n(rng));
    try {
      const double e = worst_error(mw::fit_resonance(t), p);
      worst = std::max(worst, e);
      if (e <= 0.05) ++good;
    } catch (const NumericalError&) {
      worst = std::max(worst, 1.0);
    }
  }
  const bool ok = noiseless <= 1e-3 && good == 100;
  return {ok, fmt("noiseless worst error %.2e; 40 dB: %d/100 seeds within 5%% (worst %.2f%%)", noiseless, good,
                  100 * worst)};
}

// ---- 8 ---------------------------------------------------------------------

Outcome crosstalk_metric() {
  const double depth = 3.548e-3;
  mw::ResonatorFit p;
  p.f_r = 8.6645e9;
  p.Q_l = 1e4;
  p.Q_c_mag = p.Q_l / depth;
  p.Q_i = mw::internal_q(p.Q_l, p.Q_c_mag, 0.0);
  const auto t = mw::synthesize(p, mw::frequency_grid(p.f_r, p.Q_l, 20, 2001));
  const auto r = mw::crosstalk_spectrum(t);
  const double bin = t.freq[1] - t.freq[0];
  const bool ok = std::abs(r.max_db + 49.0) <= 0.2 && std::abs(r.f_at_max - p.f_r) <= bin;
  return {ok, fmt("max %.3f dB at %.6f GHz", r.max_db, r.f_at_max / 1e9)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "resource arithmetic", 1e-3, resource_arithmetic},
      {2, "fold correctness", 1.0, fold_correctness},
      {3, "frequency allocation", 1.0, frequency_allocation},
      {4, "CZ infidelity versus Q", 300.0, cz_curve},
      {5, "gate-time identity", 1e-3, gate_time_identity},
      {6, "fidelity cross-validation", 60.0, fidelity_cross_validation},
      {7, "resonator fit round-trip", 30.0, resonator_round_trip},
      {8, "crosstalk metric", 1.0, crosstalk_metric},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s: %s (%.3g s, budget %.3g s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), s, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
