// pseudo2d command-line front end.
//
// Exit codes: 0 success, 2 validation / input error, 3 infeasible frequency
// allocation, 4 numerical failure.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pseudo2d/channel.hpp"
#include "pseudo2d/errors.hpp"
#include "pseudo2d/freq_alloc.hpp"
#include "pseudo2d/io.hpp"
#include "pseudo2d/layout.hpp"
#include "pseudo2d/mw_analysis.hpp"
#include "pseudo2d/q_sweep.hpp"
#include "pseudo2d/svg.hpp"

namespace {

using namespace pseudo2d;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

// JSON config: top-level keys are global flags, nested objects are
// subcommand blocks. Keys are flag names; '_' and '-' are interchangeable.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConfigError("writing JSON configs is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
      std::ostringstream ss;
      ss << std::setprecision(17) << v.get<double>();
      return ss.str();
    }
    throw CLI::ConfigError("unsupported config value " + v.dump());
  }

  static void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (value.is_object()) {
        auto p = parents;
        p.push_back(name);
        collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text_file(path, text);
  }
}

// ---- layout ---------------------------------------------------------------

struct LayoutArgs {
  int d = 3;
  int n = 1;
  std::string encoding = "square";
  bool no_fold = false;
  std::string out;
  std::string svg;
};

int cmd_layout(const LayoutArgs& a) {
  SurfaceCodeSpec spec{a.d, a.n, encoding_from_string(a.encoding)};
  spec.validate();
  auto layout = build_grid(spec);
  if (!a.no_fold) layout = fold(layout);
  const auto summary = resource_estimate(spec);

  int measured = 0;
  for (const auto& e : layout.resonators) measured = std::max(measured, e.crossings);

  std::cout << "spec: d=" << spec.d << " N=" << spec.N << " encoding=" << to_string(spec.encoding) << '\n';
  std::cout << std::left;
  std::cout << "  " << std::setw(30) << "M" << summary.M << '\n';
  std::cout << "  " << std::setw(30) << "columns" << summary.columns << '\n';
  std::cout << "  " << std::setw(30) << "total_qubits" << summary.total_qubits << '\n';
  std::cout << "  " << std::setw(30) << "max_airbridges_per_resonator" << summary.max_airbridges_per_resonator
            << '\n';
  std::cout << "  " << std::setw(30) << "qubits_per_logical_block" << summary.qubits_per_logical_block << '\n';
  std::cout << "  " << std::setw(30) << "layout_qubits" << layout.qubits.size() << '\n';
  std::cout << "  " << std::setw(30) << "layout_resonators" << layout.resonators.size() << '\n';
  if (layout.is_folded()) {
    const auto [r0, r1] = rail_sizes(layout);
    std::cout << "  " << std::setw(30) << "rail_sizes" << r0 << " / " << r1 << '\n';
    std::cout << "  " << std::setw(30) << "max_crossings_in_layout" << measured << '\n';
  }

  if (!a.out.empty()) io::write_text_file(a.out, io::to_json(layout).dump(2) + "\n");
  if (!a.svg.empty()) io::write_text_file(a.svg, emit_svg(layout));
  return kExitOk;
}

// ---- freqalloc ------------------------------------------------------------

struct FreqArgs {
  std::string layout;
  double f_min_hz = 7.0e9;
  double f_max_hz = 10.2e9;
  double delta_min_hz = kDefaultDeltaMinHz;
  std::string out;
  std::string check;
};

int cmd_freqalloc(const FreqArgs& a) {
  auto layout = io::layout_from_json(io::read_json_file(a.layout));
  if (!layout.is_folded()) layout = fold(layout);
  const auto graph = crossing_graph(layout);

  if (!a.check.empty()) {
    const auto plan = io::plan_from_json(io::read_json_file(a.check));
    const auto violations = verify(plan, graph);
    std::cout << violations.size() << " violations\n";
    for (const auto& v : violations) {
      std::cout << "  resonators " << v.i << " and " << v.j << ": detuning " << v.detuning << " Hz\n";
    }
    return violations.empty() ? kExitOk : kExitInfeasible;
  }

  const auto result = allocate(graph, Band{a.f_min_hz, a.f_max_hz}, a.delta_min_hz);
  if (const auto* inf = std::get_if<Infeasible>(&result)) {
    std::cerr << "infeasible: " << inf->message << '\n';
    std::cerr << io::to_json(*inf).dump(2) << '\n';
    return kExitInfeasible;
  }
  const auto& plan = std::get<FrequencyPlan>(result);
  const auto violations = verify(plan, graph);
  std::cerr << "resonators: " << graph.nodes.size() << ", crossing pairs: " << graph.edges.size()
            << ", max degree: " << graph.max_degree() << '\n';
  std::cerr << violations.size() << " violations\n";
  emit(a.out, io::to_json(plan).dump(2) + "\n");
  return kExitOk;
}

// ---- czsweep --------------------------------------------------------------

struct SweepArgs {
  std::string params;
  std::vector<double> q{cz::kDefaultQualityGrid.begin(), cz::kDefaultQualityGrid.end()};
  std::string out;
  std::string basis = "dressed";
  bool no_tune = false;
  bool no_calibrate = false;
  std::optional<double> t_gate_s;
  std::optional<double> kappa_rad_s;
  double threshold = cz::kSurfaceCodeThreshold;
  int mc_samples = 0;
  std::uint64_t seed = 20240607;
};

int cmd_czsweep(const SweepArgs& a, bool q_given) {
  if (!(a.threshold > 0.0 && a.threshold < 1.0)) throw ValidationError("--threshold must lie in (0, 1)");
  auto params = a.params.empty() ? cz::reference_device() : io::device_from_json(io::read_json_file(a.params));
  std::vector<double> qs = a.q;
  if (a.kappa_rad_s) {
    if (!(*a.kappa_rad_s > 0.0)) throw ValidationError("--kappa-rad-s must be positive");
    if (!q_given) {
      qs = {params.omega_r / *a.kappa_rad_s};
    } else if (qs.size() != 1) {
      throw ValidationError("--kappa-rad-s fixes a single quality factor; pass at most one --q");
    }
    cz::DeviceParams check = params;
    check.Q_i = qs.front();
    check.kappa = *a.kappa_rad_s;
    check.validate();
  }
  if (a.t_gate_s) params.t_gate = *a.t_gate_s;

  cz::SweepOptions opt;
  opt.tune_to_resonance = !a.no_tune;
  opt.calibrate = !a.no_calibrate && !a.t_gate_s;
  if (a.basis == "dressed") {
    opt.tomography.basis = cz::ComputationalBasis::Dressed;
  } else if (a.basis == "bare") {
    opt.tomography.basis = cz::ComputationalBasis::Bare;
  } else {
    throw ValidationError("--basis must be 'dressed' or 'bare'");
  }
  opt.mc_samples = a.mc_samples;
  opt.mc_seed = a.seed;

  const auto result = cz::q_sweep(params, qs, opt);
  std::ostringstream csv;
  cz::write_sweep_csv(csv, result.points);
  emit(a.out, csv.str());

  std::ostream& log = a.out.empty() || a.out == "-" ? std::cerr : std::cout;
  const auto& cal = result.calibration;
  log << std::setprecision(6);
  log << "g_eff/2pi = " << cal.g_eff / cz::kTwoPi / 1e6 << " MHz, t_nominal = " << cal.t_nominal * 1e9
      << " ns, t_gate = " << cal.t_gate * 1e9 << " ns\n";
  log << "omega01_1/2pi = " << cal.params.omega01[0] / cz::kTwoPi / 1e9 << " GHz (basis " << a.basis << ")\n";
  if (a.mc_samples > 0) {
    log << "monte-carlo: " << a.mc_samples << " samples per point, seed " << a.seed << '\n';
    for (const auto& p : result.points) {
      log << "  Q=" << p.Q_i << " exact F=" << p.avg_fidelity << " mc F=" << p.mc->mean << " +- "
          << p.mc->std_error << '\n';
    }
  }
  log << "monotone: " << (result.monotone ? "yes" : "no") << '\n';
  auto sorted = result.points;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.Q_i < y.Q_i; });
  const auto crossing = cz::threshold_crossing(sorted, a.threshold);
  if (!crossing) {
    log << "corrected infidelity does not cross " << a.threshold * 100 << "% in the sampled range\n";
  } else if (sorted.front().infidelity <= a.threshold) {
    log << "corrected infidelity is already below " << a.threshold * 100 << "% at the lowest Q = " << *crossing
        << '\n';
  } else {
    log << "corrected infidelity crosses " << a.threshold * 100 << "% at Q = " << *crossing << '\n';
  }
  return kExitOk;
}

// ---- fitres / crosstalk / synth-trace -------------------------------------

struct FitArgs {
  std::string trace;
  std::optional<double> power_dbm;
  std::string out;
};

int cmd_fitres(const FitArgs& a) {
  auto trace = io::read_trace_csv(a.trace);
  const auto fit = mw::fit_resonance(trace);
  json j = io::to_json(fit);
  if (a.power_dbm) {
    j["applied_power_dbm"] = *a.power_dbm;
    j["photon_number"] = mw::avg_photon_number(fit, mw::dbm_to_watts(*a.power_dbm));
    j["photon_number_convention"] = mw::kPhotonNumberConvention;
  }
  emit(a.out, j.dump(2) + "\n");
  return kExitOk;
}

struct CrosstalkArgs {
  std::string trace;
  std::string out;
};

int cmd_crosstalk(const CrosstalkArgs& a) {
  const auto res = mw::crosstalk_spectrum(io::read_trace_csv(a.trace));
  std::cerr << std::setprecision(6) << "max crosstalk " << res.max_db << " dB at " << res.f_at_max / 1e9
            << " GHz, -3 dB width " << res.bandwidth_3db_hz / 1e6 << " MHz\n";
  emit(a.out, io::to_json(res).dump(2) + "\n");
  return kExitOk;
}

struct SynthArgs {
  double f_r_hz = 10.1326e9;
  double q_i = 2.3e4;
  double q_c = 3.141e5;
  double phi = 0.0;
  double tau_s = 0.0;
  int points = 2001;
  double linewidths = 5.0;
  std::optional<double> snr_db;
  std::uint64_t seed = 20240607;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  if (a.points < 16) throw ValidationError("--points must be >= 16");
  mw::ResonatorFit p;
  p.f_r = a.f_r_hz;
  p.Q_i = a.q_i;
  p.Q_c_mag = a.q_c;
  p.phi = a.phi;
  p.tau = a.tau_s;
  p.Q_l = 1.0 / (1.0 / p.Q_i + std::cos(p.phi) / p.Q_c_mag);
  if (!(p.Q_l > 0.0)) throw ValidationError("parameters give a nonpositive loaded quality factor");
  auto trace = mw::synthesize(p, mw::frequency_grid(p.f_r, p.Q_l, a.linewidths, static_cast<std::size_t>(a.points)));
  if (a.snr_db) {
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> n(0.0, std::pow(10.0, -*a.snr_db / 20.0) / std::sqrt(2.0));
    for (auto& z : trace.s21) z += mw::Complex(n(rng), n(rng));
    std::cerr << "noise seed " << a.seed << '\n';
  }
  std::ostringstream os;
  io::write_trace_csv(os, trace);
  emit(a.out, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-2D surface-code toolkit: layout, frequency allocation, CZ sweeps, resonator analysis"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with default option values (flags override it)");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  LayoutArgs la;
  auto* layout = app.add_subcommand("layout", "Build (and fold) a surface-code layout");
  layout->add_option("--d", la.d, "Code distance (odd, >= 3)")->capture_default_str();
  layout->add_option("--n", la.n, "Logical qubits")->capture_default_str();
  layout->add_option("--encoding", la.encoding, "square or rotated")->capture_default_str();
  layout->add_flag("--no-fold", la.no_fold, "Write the pre-fold grid");
  layout->add_option("--out", la.out, "Layout JSON output");
  layout->add_option("--svg", la.svg, "SVG output");

  FreqArgs fa;
  auto* freq = app.add_subcommand("freqalloc", "Assign resonator frequencies to avoid crossing crosstalk");
  freq->add_option("--layout", fa.layout, "Layout JSON")->required();
  freq->add_option("--f-min-hz", fa.f_min_hz)->capture_default_str();
  freq->add_option("--f-max-hz", fa.f_max_hz)->capture_default_str();
  freq->add_option("--delta-min-hz", fa.delta_min_hz)->capture_default_str();
  freq->add_option("--out", fa.out, "Plan JSON output (stdout if omitted)");
  freq->add_option("--check", fa.check, "Verify an existing plan instead of allocating");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("czsweep", "CZ infidelity versus resonator quality factor");
  sweep->add_option("--params", sa.params, "Device parameter JSON (reference device if omitted)");
  auto* q_opt = sweep->add_option("--q", sa.q, "Quality factors")->capture_default_str();
  sweep->add_option("--out", sa.out, "CSV output (stdout if omitted)");
  sweep->add_option("--basis", sa.basis, "dressed or bare computational basis")->capture_default_str();
  sweep->add_flag("--no-tune", sa.no_tune, "Keep qubit 1 at its configured frequency");
  sweep->add_flag("--no-calibrate", sa.no_calibrate, "Use pi/(sqrt2 g_eff) or t_gate_s without refinement");
  sweep->add_option("--t-gate-s", sa.t_gate_s, "Fixed gate time (disables calibration)");
  sweep->add_option("--kappa-rad-s", sa.kappa_rad_s, "Photon loss rate; must satisfy kappa*Q = omega_r");
  sweep->add_option("--threshold", sa.threshold)->capture_default_str();
  sweep->add_option("--mc-samples", sa.mc_samples, "Haar samples for a Monte-Carlo fidelity check")
      ->capture_default_str();
  sweep->add_option("--seed", sa.seed, "Monte-Carlo seed")->capture_default_str();

  FitArgs fit_a;
  auto* fitres = app.add_subcommand("fitres", "Fit a notch resonator S21 trace");
  fitres->add_option("--trace", fit_a.trace, "CSV frequency_hz,s21_re,s21_im")->required();
  fitres->add_option("--power-dbm", fit_a.power_dbm, "Applied power for the photon-number estimate");
  fitres->add_option("--out", fit_a.out, "JSON output (stdout if omitted)");

  CrosstalkArgs ca;
  auto* crosstalk = app.add_subcommand("crosstalk", "Crosstalk spectrum 20 log10(1 - |S21|)");
  crosstalk->add_option("--trace", ca.trace, "CSV frequency_hz,s21_re,s21_im")->required();
  crosstalk->add_option("--out", ca.out, "JSON output (stdout if omitted)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth-trace", "Write a synthetic notch resonator trace");
  synth->add_option("--f-r-hz", sy.f_r_hz)->capture_default_str();
  synth->add_option("--q-i", sy.q_i)->capture_default_str();
  synth->add_option("--q-c", sy.q_c)->capture_default_str();
  synth->add_option("--phi", sy.phi)->capture_default_str();
  synth->add_option("--tau-s", sy.tau_s)->capture_default_str();
  synth->add_option("--points", sy.points)->capture_default_str();
  synth->add_option("--linewidths", sy.linewidths, "Half-span in loaded linewidths")->capture_default_str();
  synth->add_option("--snr-db", sy.snr_db, "Add complex Gaussian noise at this SNR");
  synth->add_option("--seed", sy.seed, "Noise seed")->capture_default_str();
  synth->add_option("--out", sy.out, "CSV output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*layout) return cmd_layout(la);
    if (*freq) return cmd_freqalloc(fa);
    if (*sweep) return cmd_czsweep(sa, q_opt->count() > 0);
    if (*fitres) return cmd_fitres(fit_a);
    if (*crosstalk) return cmd_crosstalk(ca);
    if (*synth) return cmd_synth(sy);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}
