#pragma once

// Resonator frequency assignment for the folded network.
//
// Two resonators that cross through an airbridge couple on resonance, so
// each crossing pair must be detuned by at least delta_min. Candidate
// frequencies live on a lattice of step delta_min / 2 starting at f_min; on
// that lattice the constraint reads |slot_i - slot_j| >= 2.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pseudo2d/errors.hpp"
#include "pseudo2d/layout.hpp"

namespace pseudo2d {

inline constexpr double kDefaultDeltaMinHz = 10e6;
// Slack for detunings that land exactly on delta_min after floating-point
// arithmetic.
inline constexpr double kDetuningToleranceHz = 1e-6;

struct CrossingGraph {
  std::vector<int> nodes;                  // resonator ids, ascending
  std::vector<std::pair<int, int>> edges;  // i < j, sorted

  std::map<int, std::vector<int>> adjacency() const {
    std::map<int, std::vector<int>> adj;
    for (int n : nodes) adj[n];
    for (auto [i, j] : edges) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    for (auto& [n, v] : adj) std::sort(v.begin(), v.end());
    return adj;
  }

  int max_degree() const {
    int best = 0;
    for (const auto& [n, v] : adjacency()) best = std::max(best, static_cast<int>(v.size()));
    return best;
  }
};

struct Band {
  double f_min = 0.0;  // Hz
  double f_max = 0.0;  // Hz
  double width() const { return f_max - f_min; }
};

struct FrequencyPlan {
  Band band;
  double delta_min = kDefaultDeltaMinHz;
  std::map<int, double> assignment;  // resonator id -> Hz
};

struct Infeasible {
  enum class Kind { Clique, SaturatedNode };
  Kind kind = Kind::SaturatedNode;
  // For Clique: the clique members. For SaturatedNode: the node that could
  // not be placed followed by its neighbours.
  std::vector<int> certificate;
  std::string message;
};

using AllocationResult = std::variant<FrequencyPlan, Infeasible>;

struct Violation {
  int i = 0;
  int j = 0;
  double detuning = 0.0;  // Hz
};

/// Edge (i, j) iff resonators i and j are inter-column links joining the
/// same column pair and routed around the same end of the fold.
inline CrossingGraph crossing_graph(const PhysicalLayout& layout) {
  if (!layout.is_folded()) throw ValidationError("crossing_graph requires a folded layout");
  CrossingGraph g;
  g.nodes.reserve(layout.resonators.size());
  for (std::size_t i = 0; i < layout.resonators.size(); ++i) g.nodes.push_back(static_cast<int>(i));
  for (const auto& [key, links] : detail::group_links(layout)) {
    for (std::size_t a = 0; a < links.size(); ++a) {
      for (std::size_t b = a + 1; b < links.size(); ++b) {
        const int i = static_cast<int>(links[a].second);
        const int j = static_cast<int>(links[b].second);
        g.edges.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

inline std::vector<Violation> verify(const FrequencyPlan& plan, const CrossingGraph& graph) {
  for (int n : graph.nodes) {
    if (!plan.assignment.count(n)) {
      throw ValidationError("plan has no frequency for resonator " + std::to_string(n));
    }
  }
  std::vector<Violation> out;
  for (auto [i, j] : graph.edges) {
    const double det = std::abs(plan.assignment.at(i) - plan.assignment.at(j));
    if (det < plan.delta_min - kDetuningToleranceHz) out.push_back({i, j, det});
  }
  return out;
}

namespace detail {

// Grows a clique around `seed` greedily, preferring high-degree neighbours.
inline std::vector<int> grow_clique(int seed, const std::map<int, std::vector<int>>& adj) {
  std::vector<int> clique{seed};
  std::vector<int> cand = adj.at(seed);
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
    return adj.at(a).size() > adj.at(b).size();
  });
  for (int c : cand) {
    const auto& nc = adj.at(c);
    const bool joins = std::all_of(clique.begin(), clique.end(), [&](int m) {
      return std::binary_search(nc.begin(), nc.end(), m);
    });
    if (joins) clique.push_back(c);
  }
  std::sort(clique.begin(), clique.end());
  return clique;
}

}  // namespace detail

/// Greedy slot assignment in descending-degree order with bounded
/// backtracking (at most one backtrack per node).
inline AllocationResult allocate(const CrossingGraph& graph, const Band& band,
                                 double delta_min = kDefaultDeltaMinHz) {
  if (!(delta_min > 0.0) || !std::isfinite(delta_min)) {
    throw ValidationError("delta_min must be positive");
  }
  if (!(band.width() > 0.0) || !std::isfinite(band.f_min) || !std::isfinite(band.f_max)) {
    throw ValidationError("frequency band must have positive width");
  }
  const double step = delta_min / 2.0;
  const long slots = static_cast<long>(std::floor(band.width() / step + 1e-9)) + 1;

  const auto adj = graph.adjacency();
  std::vector<int> order = graph.nodes;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto da = adj.at(a).size(), db = adj.at(b).size();
    return da != db ? da > db : a < b;
  });

  std::map<int, long> slot_of;
  std::vector<long> tried(order.size(), -1);
  std::size_t budget = order.size();
  int stuck = -1;

  auto feasible = [&](int node, long s) {
    for (int nb : adj.at(node)) {
      auto it = slot_of.find(nb);
      if (it != slot_of.end() && std::labs(it->second - s) < 2) return false;
    }
    return true;
  };

  std::size_t k = 0;
  while (k < order.size()) {
    const int node = order[k];
    slot_of.erase(node);
    long s = tried[k] + 1;
    while (s < slots && !feasible(node, s)) ++s;
    if (s < slots) {
      slot_of[node] = s;
      tried[k] = s;
      ++k;
      continue;
    }
    if (stuck < 0) stuck = node;
    if (k == 0 || budget == 0) break;
    --budget;
    tried[k] = -1;
    --k;
  }

  if (k < order.size()) {
    const int node = stuck >= 0 ? stuck : order[k];
    auto clique = detail::grow_clique(node, adj);
    const double need = static_cast<double>(clique.size() - 1) * delta_min;
    Infeasible inf;
    if (need > band.width() + kDetuningToleranceHz) {
      inf.kind = Infeasible::Kind::Clique;
      inf.certificate = clique;
      inf.message = "clique of " + std::to_string(clique.size()) + " crossing resonators needs " +
                    std::to_string(need) + " Hz but the band is " + std::to_string(band.width()) +
                    " Hz wide";
    } else {
      inf.kind = Infeasible::Kind::SaturatedNode;
      inf.certificate.push_back(node);
      for (int nb : adj.at(node)) inf.certificate.push_back(nb);
      inf.message = "no free frequency slot for resonator " + std::to_string(node) +
                    " after bounded backtracking";
    }
    return inf;
  }

  FrequencyPlan plan;
  plan.band = band;
  plan.delta_min = delta_min;
  for (const auto& [node, s] : slot_of) plan.assignment[node] = band.f_min + static_cast<double>(s) * step;
  return plan;
}

/// Copies plan frequencies onto the layout's resonators.
inline void apply_plan(PhysicalLayout& layout, const FrequencyPlan& plan) {
  for (const auto& [id, hz] : plan.assignment) {
    if (id < 0 || static_cast<std::size_t>(id) >= layout.resonators.size()) {
      throw ValidationError("plan references unknown resonator " + std::to_string(id));
    }
    layout.resonators[static_cast<std::size_t>(id)].frequency = hz;
  }
}

}  // namespace pseudo2d
