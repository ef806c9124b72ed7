#pragma once

// JSON and CSV (de)serialisation. Physical quantities in device-parameter
// files carry their unit in the key name and are linear frequencies (Hz);
// they are converted to angular units on load.

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pseudo2d/cz_model.hpp"
#include "pseudo2d/errors.hpp"
#include "pseudo2d/freq_alloc.hpp"
#include "pseudo2d/layout.hpp"
#include "pseudo2d/mw_analysis.hpp"

namespace pseudo2d::io {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key '" + key + "' in " + std::string(what));
  }
}

template <class T>
T get(const json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw ValidationError("missing key '" + std::string(key) + "' in " + std::string(what));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("bad value for '" + std::string(key) + "' in " + std::string(what) + ": " + e.what());
  }
}

inline std::array<double, 2> pair_of(const json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key, "device parameters");
  if (v.size() != 2) throw ValidationError(std::string(key) + " must have two entries");
  return {v[0], v[1]};
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

// ---- layout ---------------------------------------------------------------

inline json to_json(const SurfaceCodeSpec& s) {
  return {{"d", s.d}, {"N", s.N}, {"encoding", std::string(to_string(s.encoding))}};
}

inline SurfaceCodeSpec spec_from_json(const json& j) {
  detail::reject_unknown(j, {"d", "N", "encoding"}, "spec");
  SurfaceCodeSpec s;
  s.d = detail::get<int>(j, "d", "spec");
  s.N = detail::get<int>(j, "N", "spec");
  s.encoding = encoding_from_string(detail::get<std::string>(j, "encoding", "spec"));
  s.validate();
  return s;
}

inline json to_json(const PhysicalLayout& layout) {
  json qubits = json::array();
  for (const auto& q : layout.qubits) {
    json jq = {{"id", q.id},
               {"role", std::string(to_string(q.role))},
               {"grid_pos", {{"row", q.grid_pos.row}, {"col", q.grid_pos.col}}}};
    jq["folded_pos"] = q.folded_pos ? json{{"rail", q.folded_pos->rail}, {"index", q.folded_pos->index}} : json(nullptr);
    qubits.push_back(std::move(jq));
  }
  json resonators = json::array();
  for (const auto& e : layout.resonators) {
    json je = {{"endpoints", {e.endpoints.first, e.endpoints.second}}, {"crossings", e.crossings}};
    je["frequency"] = e.frequency ? json(*e.frequency) : json(nullptr);
    je["active"] = e.active;
    resonators.push_back(std::move(je));
  }
  return {{"spec", to_json(layout.spec)}, {"qubits", qubits}, {"resonators", resonators}};
}

inline PhysicalLayout layout_from_json(const json& j) {
  detail::reject_unknown(j, {"spec", "qubits", "resonators"}, "layout");
  PhysicalLayout layout;
  layout.spec = spec_from_json(detail::get<json>(j, "spec", "layout"));
  std::set<int> ids;
  for (const auto& jq : detail::get<json>(j, "qubits", "layout")) {
    detail::reject_unknown(jq, {"id", "role", "grid_pos", "folded_pos"}, "qubit");
    QubitNode q;
    q.id = detail::get<int>(jq, "id", "qubit");
    q.role = role_from_string(detail::get<std::string>(jq, "role", "qubit"));
    const auto gp = detail::get<json>(jq, "grid_pos", "qubit");
    q.grid_pos = {detail::get<int>(gp, "row", "grid_pos"), detail::get<int>(gp, "col", "grid_pos")};
    if (jq.contains("folded_pos") && !jq["folded_pos"].is_null()) {
      const auto& fp = jq["folded_pos"];
      q.folded_pos = FoldedPos{detail::get<int>(fp, "rail", "folded_pos"), detail::get<int>(fp, "index", "folded_pos")};
    }
    if (!ids.insert(q.id).second) throw ValidationError("duplicate qubit id " + std::to_string(q.id));
    layout.qubits.push_back(q);
  }
  for (const auto& je : detail::get<json>(j, "resonators", "layout")) {
    detail::reject_unknown(je, {"endpoints", "crossings", "frequency", "active"}, "resonator");
    ResonatorEdge e;
    const auto ends = detail::get<std::vector<int>>(je, "endpoints", "resonator");
    if (ends.size() != 2) throw ValidationError("resonator endpoints must have two entries");
    if (!ids.count(ends[0]) || !ids.count(ends[1])) throw ValidationError("resonator refers to an unknown qubit");
    e.endpoints = {ends[0], ends[1]};
    e.crossings = je.value("crossings", 0);
    if (je.contains("frequency") && !je["frequency"].is_null()) e.frequency = je["frequency"].get<double>();
    e.active = je.value("active", true);
    layout.resonators.push_back(e);
  }
  return layout;
}

inline json to_json(const ResourceSummary& r) {
  return {{"M", r.M},
          {"columns", r.columns},
          {"total_qubits", r.total_qubits},
          {"max_airbridges_per_resonator", r.max_airbridges_per_resonator},
          {"qubits_per_logical_block", r.qubits_per_logical_block}};
}

// ---- frequency plan -------------------------------------------------------

inline json to_json(const FrequencyPlan& plan) {
  json assignment = json::object();
  for (const auto& [id, f] : plan.assignment) assignment[std::to_string(id)] = f;
  return {{"band", {{"f_min", plan.band.f_min}, {"f_max", plan.band.f_max}}},
          {"delta_min", plan.delta_min},
          {"assignment", assignment}};
}

inline FrequencyPlan plan_from_json(const json& j) {
  detail::reject_unknown(j, {"band", "delta_min", "assignment"}, "frequency plan");
  FrequencyPlan plan;
  const auto band = detail::get<json>(j, "band", "frequency plan");
  detail::reject_unknown(band, {"f_min", "f_max"}, "band");
  plan.band = {detail::get<double>(band, "f_min", "band"), detail::get<double>(band, "f_max", "band")};
  plan.delta_min = detail::get<double>(j, "delta_min", "frequency plan");
  const auto assignment = detail::get<json>(j, "assignment", "frequency plan");
  if (!assignment.is_object()) throw ValidationError("assignment must be an object of id -> Hz");
  for (const auto& [key, value] : assignment.items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError("assignment key '" + key + "' is not a resonator id");
    }
    if (!value.is_number()) throw ValidationError("assignment for " + key + " is not a number");
    plan.assignment[id] = value.get<double>();
  }
  return plan;
}

inline json to_json(const Infeasible& inf) {
  return {{"kind", inf.kind == Infeasible::Kind::Clique ? "clique" : "saturated_node"},
          {"certificate", inf.certificate},
          {"message", inf.message}};
}

inline json to_json(const std::vector<Violation>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back({{"i", x.i}, {"j", x.j}, {"detuning_hz", x.detuning}});
  return out;
}

// ---- device parameters ----------------------------------------------------

inline cz::DeviceParams device_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"omega_r_hz", "omega01_hz", "eta_hz", "g_hz", "q_levels", "r_levels", "Q_i",
                          "kappa_rad_s", "g_eff_hz", "t_gate_s"},
                         "device parameters");
  cz::DeviceParams p;
  p.omega_r = cz::kTwoPi * detail::get<double>(j, "omega_r_hz", "device parameters");
  p.omega01 = detail::pair_of(j, "omega01_hz");
  p.eta = detail::pair_of(j, "eta_hz");
  p.g = detail::pair_of(j, "g_hz");
  for (int k = 0; k < 2; ++k) {
    p.omega01[k] *= cz::kTwoPi;
    p.eta[k] *= cz::kTwoPi;
    p.g[k] *= cz::kTwoPi;
  }
  p.q_levels = j.value("q_levels", 3);
  p.r_levels = j.value("r_levels", 5);
  if (j.contains("Q_i")) p.Q_i = detail::get<double>(j, "Q_i", "device parameters");
  if (j.contains("kappa_rad_s")) p.kappa = detail::get<double>(j, "kappa_rad_s", "device parameters");
  if (j.contains("g_eff_hz")) p.g_eff = cz::kTwoPi * detail::get<double>(j, "g_eff_hz", "device parameters");
  if (j.contains("t_gate_s")) p.t_gate = detail::get<double>(j, "t_gate_s", "device parameters");
  p.validate();
  return p;
}

inline json to_json(const cz::DeviceParams& p) {
  auto hz = [](double w) { return w / cz::kTwoPi; };
  json j = {{"omega_r_hz", hz(p.omega_r)},
            {"omega01_hz", {hz(p.omega01[0]), hz(p.omega01[1])}},
            {"eta_hz", {hz(p.eta[0]), hz(p.eta[1])}},
            {"g_hz", {hz(p.g[0]), hz(p.g[1])}},
            {"q_levels", p.q_levels},
            {"r_levels", p.r_levels}};
  if (p.Q_i) j["Q_i"] = *p.Q_i;
  if (p.kappa) j["kappa_rad_s"] = *p.kappa;
  if (p.g_eff) j["g_eff_hz"] = hz(*p.g_eff);
  if (p.t_gate) j["t_gate_s"] = *p.t_gate;
  return j;
}

// ---- traces and fits ------------------------------------------------------

inline constexpr const char* kTraceHeader = "frequency_hz,s21_re,s21_im";

inline mw::S21Trace read_trace_csv(std::istream& in) {
  mw::S21Trace t;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty()) continue;
    if (!header) {
      if (line != kTraceHeader) {
        throw ValidationError("line " + std::to_string(lineno) + ": expected header '" + kTraceHeader + "'");
      }
      header = true;
      continue;
    }
    std::array<double, 3> v{};
    std::stringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 3) throw ValidationError("line " + std::to_string(lineno) + ": expected 3 columns");
      try {
        std::size_t used = 0;
        v[k] = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(lineno) + ": cannot parse '" + cell + "' as a number");
      }
      ++k;
    }
    if (k != 3) throw ValidationError("line " + std::to_string(lineno) + ": expected 3 columns");
    if (!t.freq.empty() && !(v[0] > t.freq.back())) {
      throw ValidationError("line " + std::to_string(lineno) + ": frequencies must be strictly increasing");
    }
    t.freq.push_back(v[0]);
    t.s21.emplace_back(v[1], v[2]);
  }
  if (!header) throw ValidationError("trace file is empty");
  t.validate();
  return t;
}

inline mw::S21Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_trace_csv(in);
}

inline void write_trace_csv(std::ostream& os, const mw::S21Trace& t) {
  os << kTraceHeader << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < t.freq.size(); ++k) os << t.freq[k] << ',' << t.s21[k].real() << ',' << t.s21[k].imag() << '\n';
}

inline json to_json(const mw::ResonatorFit& f) {
  return {{"f_r", f.f_r}, {"Q_l", f.Q_l},   {"Q_c_mag", f.Q_c_mag}, {"phi", f.phi}, {"Q_i", f.Q_i},
          {"tau", f.tau}, {"a", f.a},       {"alpha", f.alpha},     {"residual", f.residual}};
}

inline mw::ResonatorFit fit_from_json(const json& j) {
  detail::reject_unknown(j, {"f_r", "Q_l", "Q_c_mag", "phi", "Q_i", "tau", "a", "alpha", "residual"}, "resonator fit");
  mw::ResonatorFit f;
  f.f_r = detail::get<double>(j, "f_r", "resonator fit");
  f.Q_l = detail::get<double>(j, "Q_l", "resonator fit");
  f.Q_c_mag = detail::get<double>(j, "Q_c_mag", "resonator fit");
  f.phi = j.value("phi", 0.0);
  f.Q_i = j.value("Q_i", mw::internal_q(f.Q_l, f.Q_c_mag, f.phi));
  f.tau = j.value("tau", 0.0);
  f.a = j.value("a", 1.0);
  f.alpha = j.value("alpha", 0.0);
  f.residual = j.value("residual", 0.0);
  return f;
}

inline json to_json(const mw::CrosstalkResult& c) {
  return {{"freq", c.freq},
          {"crosstalk_db", c.crosstalk_db},
          {"max_db", c.max_db},
          {"f_at_max", c.f_at_max},
          {"bandwidth_3db_hz", c.bandwidth_3db_hz},
          {"bandwidth_definition", "full width within 3 dB of max_db"}};
}

}  // namespace pseudo2d::io
