#pragma once

// Surface-code qubit grids and the bi-linear fold.
//
// A layout starts as a 2D nearest-neighbour grid of M = 2d-1 rows. Logical
// blocks of M columns are separated by single spacer columns, so N logical
// qubits occupy NM + (N-1) columns. Folding stacks the columns onto two
// rails (even columns on rail 0, odd columns on rail 1). Inter-column links
// then have to hop one another through airbridges, and the hop count per
// link is bounded by d-1.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pseudo2d/errors.hpp"

namespace pseudo2d {

enum class Encoding { Square, Rotated };

enum class Role { Data, SyndromeX, SyndromeZ };

inline std::string_view to_string(Encoding e) {
  return e == Encoding::Square ? "Square" : "Rotated";
}

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Data:
      return "Data";
    case Role::SyndromeX:
      return "SyndromeX";
    case Role::SyndromeZ:
      return "SyndromeZ";
  }
  return "Data";
}

inline Encoding encoding_from_string(std::string_view s) {
  if (s == "Square" || s == "square") return Encoding::Square;
  if (s == "Rotated" || s == "rotated") return Encoding::Rotated;
  throw ValidationError("unknown encoding '" + std::string(s) + "'");
}

inline Role role_from_string(std::string_view s) {
  if (s == "Data") return Role::Data;
  if (s == "SyndromeX") return Role::SyndromeX;
  if (s == "SyndromeZ") return Role::SyndromeZ;
  throw ValidationError("unknown qubit role '" + std::string(s) + "'");
}

struct SurfaceCodeSpec {
  int d = 3;
  int N = 1;
  Encoding encoding = Encoding::Square;

  void validate() const {
    if (d < 3 || d % 2 == 0) {
      throw ValidationError("code distance must be an odd integer >= 3, got " + std::to_string(d));
    }
    if (N < 1) {
      throw ValidationError("logical qubit count must be >= 1, got " + std::to_string(N));
    }
  }

  /// Qubits per column.
  int rows() const { return 2 * d - 1; }
  int block_width() const { return 2 * d - 1; }
  int columns() const { return N * block_width() + (N - 1); }

  friend bool operator==(const SurfaceCodeSpec&, const SurfaceCodeSpec&) = default;
};

struct GridPos {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

struct FoldedPos {
  int rail = 0;
  int index = 0;
  friend auto operator<=>(const FoldedPos&, const FoldedPos&) = default;
};

struct QubitNode {
  int id = 0;
  Role role = Role::Data;
  GridPos grid_pos;
  std::optional<FoldedPos> folded_pos;

  friend bool operator==(const QubitNode&, const QubitNode&) = default;
};

struct ResonatorEdge {
  std::pair<int, int> endpoints;
  int crossings = 0;
  std::optional<double> frequency;  // Hz
  // Couplings into spacer columns are placed but not driven.
  bool active = true;

  friend bool operator==(const ResonatorEdge&, const ResonatorEdge&) = default;
};

struct PhysicalLayout {
  SurfaceCodeSpec spec;
  std::vector<QubitNode> qubits;
  std::vector<ResonatorEdge> resonators;

  bool is_folded() const {
    return !qubits.empty() && std::all_of(qubits.begin(), qubits.end(), [](const QubitNode& q) {
             return q.folded_pos.has_value();
           });
  }

  /// Grid extent actually occupied (not the spec's nominal extent).
  int grid_rows() const {
    int r = 0;
    for (const auto& q : qubits) r = std::max(r, q.grid_pos.row + 1);
    return r;
  }
  int grid_columns() const {
    int c = 0;
    for (const auto& q : qubits) c = std::max(c, q.grid_pos.col + 1);
    return c;
  }

  friend bool operator==(const PhysicalLayout&, const PhysicalLayout&) = default;
};

struct ResourceSummary {
  int M = 0;
  int columns = 0;
  long long total_qubits = 0;
  int max_airbridges_per_resonator = 0;
  long long qubits_per_logical_block = 0;
};

namespace detail {

// Column classification inside the block/spacer pattern.
struct ColumnInfo {
  int block = 0;
  int local = 0;  // 0..M-1 inside a block, M for the spacer
  bool spacer = false;
};

inline ColumnInfo classify_column(const SurfaceCodeSpec& spec, int col) {
  const int period = spec.block_width() + 1;
  ColumnInfo info;
  info.block = col / period;
  info.local = col % period;
  info.spacer = info.local == spec.block_width();
  return info;
}

// Planar (square) patch: data on even-parity sites, X checks on odd rows,
// Z checks on even rows.
inline Role square_role(int row, int local_col) {
  if ((row + local_col) % 2 == 0) return Role::Data;
  return row % 2 == 1 ? Role::SyndromeX : Role::SyndromeZ;
}

// Rotated patch drawn as a diamond centred in the (2d-1)x(2d-1) box.
// Returns nullopt for empty cells.
inline std::optional<Role> rotated_role(int d, int row, int local_col) {
  const int dr = row - (d - 1);
  const int dc = local_col - (d - 1);
  const int dist = std::abs(dr) + std::abs(dc);
  if (dist <= d - 1) {
    if (dist % 2 == 0) return Role::Data;
    return (std::abs(dr) % 2 == 1) ? Role::SyndromeX : Role::SyndromeZ;
  }
  if (dist != d || dr == 0 || dc == 0) return std::nullopt;
  // Weight-two boundary checks sit on alternate sites of each side; opposite
  // sides carry the same check type.
  const int k = std::abs(dr);
  const bool same_sign = (dr > 0) == (dc > 0);
  const bool keep = same_sign ? (k % 2 == 1) : (k % 2 == 0);
  if (!keep) return std::nullopt;
  return (k % 2 == 1) ? Role::SyndromeX : Role::SyndromeZ;
}

inline std::optional<Role> cell_role(const SurfaceCodeSpec& spec, int row, int col) {
  const auto info = classify_column(spec, col);
  if (info.spacer) return Role::Data;
  if (spec.encoding == Encoding::Square) return square_role(row, info.local);
  return rotated_role(spec.d, row, info.local);
}

inline bool is_spacer_column(const SurfaceCodeSpec& spec, int col) {
  return col >= 0 && col < spec.columns() && classify_column(spec, col).spacer;
}

}  // namespace detail

/// Builds the pre-fold nearest-neighbour grid. Qubit ids are row-major;
/// resonators are sorted by (lower id, higher id).
inline PhysicalLayout build_grid(const SurfaceCodeSpec& spec) {
  spec.validate();
  const int rows = spec.rows();
  const int cols = spec.columns();

  PhysicalLayout layout;
  layout.spec = spec;
  std::vector<int> id_at(static_cast<std::size_t>(rows) * cols, -1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      auto role = detail::cell_role(spec, r, c);
      if (!role) continue;
      const int id = static_cast<int>(layout.qubits.size());
      id_at[static_cast<std::size_t>(r) * cols + c] = id;
      layout.qubits.push_back(QubitNode{id, *role, GridPos{r, c}, std::nullopt});
    }
  }

  auto at = [&](int r, int c) { return id_at[static_cast<std::size_t>(r) * cols + c]; };
  for (const auto& q : layout.qubits) {
    const auto [r, c] = q.grid_pos;
    const std::pair<int, int> nbrs[] = {{r, c + 1}, {r + 1, c}};
    for (auto [nr, nc] : nbrs) {
      if (nr >= rows || nc >= cols) continue;
      const int other = at(nr, nc);
      if (other < 0) continue;
      ResonatorEdge e;
      e.endpoints = {std::min(q.id, other), std::max(q.id, other)};
      e.active = !detail::is_spacer_column(spec, c) && !detail::is_spacer_column(spec, nc);
      layout.resonators.push_back(e);
    }
  }
  std::sort(layout.resonators.begin(), layout.resonators.end(),
            [](const ResonatorEdge& a, const ResonatorEdge& b) { return a.endpoints < b.endpoints; });
  return layout;
}

/// Where an inter-column link sits in the folded stack.
struct LinkPlacement {
  int left_column = 0;  // link joins left_column and left_column + 1
  int row = 0;
  bool top_group = true;  // routed around the top end of the fold
};

namespace detail {

inline const QubitNode& node(const PhysicalLayout& layout, int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= layout.qubits.size() ||
      layout.qubits[static_cast<std::size_t>(id)].id != id) {
    throw ValidationError("resonator endpoint " + std::to_string(id) + " is not a qubit id");
  }
  return layout.qubits[static_cast<std::size_t>(id)];
}

}  // namespace detail

/// Inter-column placement of a resonator, or nullopt for an in-column link.
inline std::optional<LinkPlacement> link_placement(const PhysicalLayout& layout,
                                                   const ResonatorEdge& e, int rows) {
  const auto& a = detail::node(layout, e.endpoints.first).grid_pos;
  const auto& b = detail::node(layout, e.endpoints.second).grid_pos;
  if (a.col == b.col) return std::nullopt;
  const int mid = (rows - 1) / 2;
  return LinkPlacement{std::min(a.col, b.col), a.row, a.row <= mid};
}

namespace detail {

// Inter-column links keyed by (left column, group), each list sorted by row.
using LinkGroups = std::map<std::pair<int, bool>, std::vector<std::pair<int, std::size_t>>>;

inline LinkGroups group_links(const PhysicalLayout& layout) {
  LinkGroups groups;
  const int rows = layout.grid_rows();
  for (std::size_t i = 0; i < layout.resonators.size(); ++i) {
    auto p = link_placement(layout, layout.resonators[i], rows);
    if (!p) continue;
    groups[{p->left_column, p->top_group}].emplace_back(p->row, i);
  }
  for (auto& [key, v] : groups) std::sort(v.begin(), v.end());
  return groups;
}

}  // namespace detail

/// Stacks columns onto two rails and counts airbridge hops.
///
/// Column c goes to rail c % 2 at index (c / 2) * rows + row. The fold flips
/// every other column, so links between adjacent columns arrive in reversed
/// order. Each link is routed around the nearer end of the fold (rows up to
/// the middle go round the top) and hops every same-group link that lies
/// between it and that end.
inline PhysicalLayout fold(PhysicalLayout layout) {
  if (layout.qubits.empty()) throw ValidationError("cannot fold an empty layout");
  const int rows = layout.grid_rows();
  for (auto& q : layout.qubits) {
    q.folded_pos = FoldedPos{q.grid_pos.col % 2, (q.grid_pos.col / 2) * rows + q.grid_pos.row};
  }
  for (auto& e : layout.resonators) e.crossings = 0;
  for (const auto& [key, links] : detail::group_links(layout)) {
    const bool top = key.second;
    const auto n = links.size();
    for (std::size_t k = 0; k < n; ++k) {
      layout.resonators[links[k].second].crossings = static_cast<int>(top ? k : n - 1 - k);
    }
  }
  return layout;
}

/// Inverse of fold(): drops rail positions and crossing counts.
inline PhysicalLayout unfold(PhysicalLayout layout) {
  if (!layout.is_folded()) throw ValidationError("unfold requires a folded layout");
  for (auto& q : layout.qubits) q.folded_pos.reset();
  for (auto& e : layout.resonators) e.crossings = 0;
  return layout;
}

inline ResourceSummary resource_estimate(const SurfaceCodeSpec& spec) {
  spec.validate();
  const long long d = spec.d;
  const long long n = spec.N;
  ResourceSummary s;
  s.M = spec.rows();
  s.columns = spec.columns();
  s.max_airbridges_per_resonator = spec.d - 1;
  if (spec.encoding == Encoding::Square) {
    s.qubits_per_logical_block = (2 * d - 1) * (2 * d - 1);
    s.total_qubits = (2 * d - 1) * (2 * d * n - 1);
  } else {
    s.qubits_per_logical_block = 2 * d * d - 1;
    s.total_qubits = n * s.qubits_per_logical_block + (n - 1) * s.M;
  }
  return s;
}

/// Qubits on each rail of a folded layout.
inline std::pair<int, int> rail_sizes(const PhysicalLayout& layout) {
  std::pair<int, int> sizes{0, 0};
  for (const auto& q : layout.qubits) {
    if (!q.folded_pos) throw ValidationError("rail_sizes requires a folded layout");
    (q.folded_pos->rail == 0 ? sizes.first : sizes.second)++;
  }
  return sizes;
}

}  // namespace pseudo2d
