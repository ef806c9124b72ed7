#pragma once

// SVG schematics of a PhysicalLayout. Pre-fold layouts are drawn on their
// grid; folded layouts as two horizontal rails with resonators hopping
// between them. Airbridges are drawn as short bars across the resonator.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pseudo2d/errors.hpp"
#include "pseudo2d/layout.hpp"

namespace pseudo2d {

struct SvgStyle {
  double pitch = 40.0;
  double margin = 30.0;
  double radius = 9.0;
  double rail_gap = 120.0;
};

namespace detail {

struct Pt {
  double x = 0.0;
  double y = 0.0;
};

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* role_fill(Role r) {
  switch (r) {
    case Role::Data: return "#f28e2b";
    case Role::SyndromeX: return "#4e79a7";
    case Role::SyndromeZ: return "#59a14f";
  }
  return "#000";
}

inline const char* role_class(Role r) {
  switch (r) {
    case Role::Data: return "data";
    case Role::SyndromeX: return "syndrome-x";
    case Role::SyndromeZ: return "syndrome-z";
  }
  return "";
}

}  // namespace detail

inline std::string emit_svg(const PhysicalLayout& layout, const SvgStyle& style = {}) {
  if (layout.qubits.empty()) throw ValidationError("cannot draw an empty layout");
  using detail::fmt_num;
  using detail::Pt;

  const bool folded = layout.is_folded();
  std::map<int, Pt> pos;
  for (const auto& q : layout.qubits) {
    Pt p;
    if (folded) {
      p.x = style.margin + style.pitch * q.folded_pos->index;
      p.y = style.margin + style.rail_gap * q.folded_pos->rail;
    } else {
      p.x = style.margin + style.pitch * q.grid_pos.col;
      p.y = style.margin + style.pitch * q.grid_pos.row;
    }
    pos[q.id] = p;
  }
  double width = 0.0, height = 0.0;
  for (const auto& [id, p] : pos) {
    width = std::max(width, p.x);
    height = std::max(height, p.y);
  }
  width += style.margin;
  height += style.margin;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_num(width) << "\" height=\""
      << fmt_num(height) << "\" viewBox=\"0 0 " << fmt_num(width) << ' ' << fmt_num(height) << "\">\n";
  out << "<desc>d=" << layout.spec.d << " N=" << layout.spec.N << " encoding=" << to_string(layout.spec.encoding)
      << (folded ? " folded" : " grid") << "</desc>\n";

  // Regions: one rect per logical block, one per spacer column.
  std::map<std::pair<bool, int>, std::pair<Pt, Pt>> regions;
  const bool spec_ok = layout.spec.d >= 3 && layout.spec.N >= 1;
  if (spec_ok) {
    for (const auto& q : layout.qubits) {
      const auto info = detail::classify_column(layout.spec, q.grid_pos.col);
      const Pt p = pos[q.id];
      auto [it, fresh] = regions.try_emplace({info.spacer, info.block}, p, p);
      if (!fresh) {
        auto& [lo, hi] = it->second;
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
      }
    }
  }
  const double pad = style.radius + 4.0;
  for (const auto& [key, box] : regions) {
    const auto& [lo, hi] = box;
    const bool spacer = key.first;
    out << "<rect class=\"" << (spacer ? "spacer" : "logical-block") << "\" data-block=\"" << key.second
        << "\" x=\"" << fmt_num(lo.x - pad) << "\" y=\"" << fmt_num(lo.y - pad) << "\" width=\""
        << fmt_num(hi.x - lo.x + 2 * pad) << "\" height=\"" << fmt_num(hi.y - lo.y + 2 * pad) << "\" fill=\""
        << (spacer ? "#e15759" : "#bab0ac") << "\" fill-opacity=\"" << (spacer ? "0.25" : "0.12")
        << "\" stroke=\"" << (spacer ? "#e15759" : "#79706e") << "\"/>\n";
  }

  for (const auto& e : layout.resonators) {
    const Pt a = pos.at(e.endpoints.first);
    const Pt b = pos.at(e.endpoints.second);
    std::vector<Pt> path{a};
    if (folded && a.y != b.y) {
      // Dogleg between rails; the horizontal run carries the airbridges.
      const double ym = 0.5 * (a.y + b.y);
      path.push_back({a.x, ym});
      path.push_back({b.x, ym});
    } else if (folded) {
      const double bow = 0.3 * style.pitch * (a.y < style.margin + 1.0 ? -1.0 : 1.0);
      path.push_back({0.5 * (a.x + b.x), a.y + bow});
    }
    path.push_back(b);
    out << "<polyline class=\"resonator" << (e.active ? "" : " inactive") << "\" data-endpoints=\""
        << e.endpoints.first << ',' << e.endpoints.second << "\" data-crossings=\"" << e.crossings << '"';
    if (e.frequency) out << " data-frequency-hz=\"" << fmt_num(*e.frequency) << '"';
    out << " points=\"";
    for (std::size_t k = 0; k < path.size(); ++k) out << (k ? " " : "") << fmt_num(path[k].x) << ',' << fmt_num(path[k].y);
    out << "\" fill=\"none\" stroke=\"" << (e.active ? "#333" : "#bbb") << "\" stroke-width=\"2\"/>\n";

    if (e.crossings > 0) {
      // Spread the markers along the longest segment.
      std::size_t seg = 0;
      double best = -1.0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double len = std::hypot(path[k + 1].x - path[k].x, path[k + 1].y - path[k].y);
        if (len > best) {
          best = len;
          seg = k;
        }
      }
      const Pt s = path[seg], t = path[seg + 1];
      const double len = std::max(best, 1e-9);
      const double nx = -(t.y - s.y) / len, ny = (t.x - s.x) / len;
      for (int k = 1; k <= e.crossings; ++k) {
        const double f = static_cast<double>(k) / (e.crossings + 1);
        const Pt m{s.x + f * (t.x - s.x), s.y + f * (t.y - s.y)};
        out << "<line class=\"airbridge\" x1=\"" << fmt_num(m.x - 5 * nx) << "\" y1=\"" << fmt_num(m.y - 5 * ny)
            << "\" x2=\"" << fmt_num(m.x + 5 * nx) << "\" y2=\"" << fmt_num(m.y + 5 * ny)
            << "\" stroke=\"#b07aa1\" stroke-width=\"3\"/>\n";
      }
    }
  }

  for (const auto& q : layout.qubits) {
    const Pt p = pos[q.id];
    out << "<circle class=\"qubit " << detail::role_class(q.role) << "\" data-id=\"" << q.id << "\" cx=\""
        << fmt_num(p.x) << "\" cy=\"" << fmt_num(p.y) << "\" r=\"" << fmt_num(style.radius) << "\" fill=\""
        << detail::role_fill(q.role) << "\" stroke=\"#222\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace pseudo2d
