#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "ejc/dynamics.hpp"
#include "ejc/effective.hpp"
#include "ejc/errors.hpp"
#include "ejc/gates.hpp"
#include "ejc/hamiltonian.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"
#include "ejc/spectra.hpp"

#ifndef EJC_VERSION
#define EJC_VERSION "0.0.0"
#endif

namespace ejc::app {

namespace {

std::vector<std::uint64_t> spin_counts(const SystemParams& p) {
  std::vector<std::uint64_t> n;
  for (const auto& e : p.ensembles) n.push_back(e.n_spins);
  return n;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json complex_matrix(const Eigen::MatrixXcd& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

Json regime_json(const RegimeReport& r) {
  Json j{{"collective_coupling", r.collective_coupling},
         {"anharmonicity_scale", r.anharmonicity_scale},
         {"hierarchy_valid", r.hierarchy_valid},
         {"resonant_strong_coupling", r.resonant_strong_coupling},
         {"two_level_valid", r.two_level_valid},
         {"dispersive_applicable", r.dispersive_applicable},
         {"dispersive_strong_coupling", r.dispersive_strong_coupling}};
  j["margin_ratios"] = Json::object();
  for (const auto& [k, v] : r.margin_ratios) j["margin_ratios"][k] = v;
  return j;
}

Json metadata(const RunConfig& cfg, const std::string& command) {
  return {{"command", command},
          {"version", version_string()},
          {"mode", cfg.mode == UnitMode::si ? "SI" : "dimensionless"},
          {"units", cfg.mode == UnitMode::si ? Json{{"rate", "rad/s"}, {"time", "s"}}
                                             : Json{{"rate", "g_c"}, {"time", "1/g_c"}}},
          {"seed", cfg.seed},
          {"params", params_to_json(cfg.params)},
          {"truncation", truncation_to_json(cfg.truncation)}};
}

Section command_section(const RunConfig& cfg, const std::string& name) {
  static const Json empty = Json::object();
  if (cfg.root.contains(name) && !cfg.root.at(name).is_null()) return Section(cfg.root.at(name), name);
  return Section(empty, name);
}

EnumeratedBasis make_basis(const RunConfig& cfg) {
  return EnumeratedBasis(cfg.truncation, spin_counts(cfg.params), cfg.max_dimension);
}

// Largest total_excitation_max that fits the cap with the configured n_max, k_max.
std::string suggest_truncation(const RunConfig& cfg) {
  SpaceTruncation t = cfg.truncation;
  std::optional<int> fits;
  for (int total = 1; total <= 64; ++total) {
    t.total_excitation_max = total;
    try {
      EnumeratedBasis b(t, spin_counts(cfg.params), cfg.max_dimension);
      fits = total;
    } catch (const DimensionError&) {
      break;
    }
  }
  if (!fits) return "reduce the number of ensembles or raise truncation.max_dimension";
  return "try truncation.total_excitation_max=" + std::to_string(*fits);
}

template <class F>
auto with_cap_hint(const RunConfig& cfg, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DimensionError& e) {
    throw DimensionError(std::string(e.what()) + "; " + suggest_truncation(cfg));
  }
}

std::vector<double> parse_grid(Section& s) {
  if (s.has("t_grid")) {
    const Json& g = s.raw("t_grid");
    if (!g.is_array() || g.empty()) throw ConfigError("'dynamics.t_grid' must be a non-empty array");
    std::vector<double> t;
    for (std::size_t i = 0; i < g.size(); ++i) t.push_back(as_number(g[i], "dynamics.t_grid." + std::to_string(i)));
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw ConfigError("'dynamics.t_grid' must be strictly ascending");
    if (t.front() < 0.0) throw ConfigError("'dynamics.t_grid' must start at t >= 0");
    if (s.has("t_end") || s.has("n_points")) throw ConfigError("give either dynamics.t_grid or t_end/n_points");
    s.number("t_end", 0.0);
    s.count("n_points", 0);
    return t;
  }
  s.explicit_null("t_grid");
  const double t_end = s.number("t_end");
  const auto n = s.count("n_points", 201);
  if (!(t_end > 0.0)) throw ConfigError("'dynamics.t_end' must be positive");
  if (n < 2) throw ConfigError("'dynamics.n_points' must be at least 2");
  return linear_grid(t_end, n);
}

struct InitialState {
  Eigen::VectorXcd psi;
  Json description;
};

InitialState parse_initial(Section& s, const RunConfig& cfg, const EnumeratedBasis& basis) {
  const auto dim = static_cast<Eigen::Index>(basis.size());
  if (!s.has("initial")) {
    s.explicit_null("initial");
    throw ConfigError("missing required key 'dynamics.initial'");
  }
  const Json& init = s.raw("initial");
  if (init.is_string()) {
    const auto name = init.get<std::string>();
    if (name == "hybrid_excited" || name == "hybrid_ground") {
      const EmbeddedJcReport r = embedded_jc_analysis(cfg.params, basis);
      return {name == "hybrid_excited" ? r.hybrid_excited_state : r.hybrid_ground_state, name};
    }
    throw ConfigError("'dynamics.initial' must be a basis state object, 'hybrid_excited' or 'hybrid_ground'");
  }
  Section st(init, "dynamics.initial");
  BasisState b;
  b.transmon = static_cast<int>(st.integer("transmon", 0));
  b.photons = static_cast<int>(st.integer("photons", 0));
  b.k.assign(cfg.params.ensembles.size(), 0);
  if (st.has("k")) {
    const Json& k = st.raw("k");
    if (!k.is_array() || k.size() != b.k.size())
      throw ConfigError("'dynamics.initial.k' must list one excitation number per ensemble");
    for (std::size_t j = 0; j < k.size(); ++j)
      b.k[j] = static_cast<int>(as_count(k[j], "dynamics.initial.k." + std::to_string(j)));
  } else {
    st.explicit_null("k");
  }
  st.finish();
  const auto idx = basis.index_of(b);
  if (!idx) throw ConfigError("initial state " + b.label() + " is outside the truncated basis");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi(static_cast<Eigen::Index>(*idx)) = 1.0;
  return {psi, b.label()};
}

std::vector<Observable> parse_observables(Section& s, const RunConfig& cfg, const EnumeratedBasis& basis,
                                          const SparseOperator& h) {
  std::vector<std::string> names;
  if (s.has("observables")) {
    const Json& list = s.raw("observables");
    if (!list.is_array()) throw ConfigError("'dynamics.observables' must be an array of names");
    for (const auto& n : list) {
      if (!n.is_string()) throw ConfigError("'dynamics.observables' must be an array of names");
      names.push_back(n.get<std::string>());
    }
  } else {
    s.explicit_null("observables");
    names = {"transmon_excited", "photon_number", "spin_excitation"};
  }
  std::vector<Observable> out;
  std::optional<EmbeddedJcReport> hybrid;
  for (const auto& name : names) {
    if (name == "transmon_excited") {
      out.push_back({name, transmon_excited_projector(basis)});
    } else if (name == "photon_number") {
      out.push_back({name, photon_number_operator(basis)});
    } else if (name == "excitation_number") {
      out.push_back({name, excitation_number_operator(basis)});
    } else if (name == "energy") {
      out.push_back({name, h});
    } else if (name == "spin_excitation") {
      for (std::size_t j = 0; j < basis.num_ensembles(); ++j)
        out.push_back({"spin_excitation_" + std::to_string(j), ensemble_excitation_operator(basis, j)});
    } else if (name == "hybrid_excited_population") {
      if (!hybrid) hybrid = embedded_jc_analysis(cfg.params, basis);
      const Eigen::VectorXcd& v = hybrid->hybrid_excited_state;
      SparseMatrix proj = (v * v.adjoint()).sparseView(1e-300, 1.0);
      out.push_back({name, SparseOperator(std::move(proj), true)});
    } else if (name.rfind("population:", 0) == 0) {
      const std::string label = name.substr(std::string("population:").size());
      std::optional<std::size_t> found;
      for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis.state(i).label() == label) found = i;
      if (!found) throw ConfigError("observable '" + name + "': no basis state labelled '" + label + "'");
      SparseMatrix m(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
      m.insert(static_cast<Eigen::Index>(*found), static_cast<Eigen::Index>(*found)) = 1.0;
      out.push_back({name, SparseOperator(std::move(m), true)});
    } else {
      throw ConfigError("unknown observable '" + name +
                        "' (expected transmon_excited, photon_number, excitation_number, energy, spin_excitation, "
                        "hybrid_excited_population or population:<label>)");
    }
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::vector<std::string> header{"t"};
  for (const auto& [name, _] : traj.observables) header.push_back(name);
  CsvWriter csv(header);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<std::string> row{format_double(traj.times[i])};
    for (const auto& [_, series] : traj.observables) row.push_back(format_double(series[i]));
    csv.row(row);
  }
  return csv.str();
}

Json fit_json(const FitResult& f) {
  return {{"rate", f.rate}, {"amplitude", f.amplitude}, {"offset", f.offset}, {"rms_residual", f.rms_residual}};
}

GateOptions parse_gate_options(Section& s) {
  GateOptions o;
  o.park_detuning = s.number("park_detuning", o.park_detuning);
  o.max_scaled_duration = s.number("max_scaled_duration", o.max_scaled_duration);
  o.stark_compensation = s.boolean("stark_compensation", o.stark_compensation);
  o.min_dispersive_ratio = s.number("min_dispersive_ratio", o.min_dispersive_ratio);
  o.max_coupling_ratio = s.number("max_coupling_ratio", o.max_coupling_ratio);
  return o;
}

Schedule parse_schedule(const Json& list, std::size_t n_ensembles) {
  if (!list.is_array()) throw ConfigError("'gate.schedule' must be an array of segments");
  Schedule out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "gate.schedule." + std::to_string(i);
    Section seg(list[i], where);
    PulseSegment p;
    p.duration = seg.number("duration");
    if (!(p.duration > 0.0)) throw ConfigError("'" + where + ".duration' must be positive");
    p.label = seg.string("label", "segment_" + std::to_string(i));
    Section ov = seg.child("overrides");
    p.overrides.delta = ov.optional_number("delta");
    p.overrides.g_c = ov.optional_number("g_c");
    p.overrides.g_m = ov.optional_number("g_m");
    if (ov.has("detunings")) {
      const Json& d = ov.raw("detunings");
      if (!d.is_array() || d.size() > n_ensembles)
        throw ConfigError("'" + where + ".overrides.detunings' must be an array with at most one entry per ensemble");
      for (std::size_t j = 0; j < d.size(); ++j)
        p.overrides.detunings.push_back(d[j].is_null() ? std::nullopt
                                                       : std::optional<double>(as_number(d[j], where + ".detunings")));
    } else {
      ov.explicit_null("detunings");
    }
    ov.finish();
    seg.finish();
    out.push_back(std::move(p));
  }
  return out;
}

Json schedule_json(const Schedule& s) {
  Json out = Json::array();
  for (const auto& seg : s) {
    Json ov = Json::object();
    if (seg.overrides.delta) ov["delta"] = *seg.overrides.delta;
    if (seg.overrides.g_c) ov["g_c"] = *seg.overrides.g_c;
    if (seg.overrides.g_m) ov["g_m"] = *seg.overrides.g_m;
    if (!seg.overrides.detunings.empty()) {
      Json d = Json::array();
      for (const auto& x : seg.overrides.detunings) d.push_back(x ? Json(*x) : Json(nullptr));
      ov["detunings"] = d;
    }
    out.push_back({{"label", seg.label}, {"duration", seg.duration}, {"overrides", ov}});
  }
  return out;
}

std::size_t ensemble_index(Section& s, const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(s.count(key, fallback));
}

}  // namespace

std::string version_string() { return std::string("embedded-jc ") + EJC_VERSION; }

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DimensionError*>(&e)) return kExitCap;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return 1;
}

Json estimate_report(const RunConfig& cfg) {
  if (cfg.mode != UnitMode::si) throw ConfigError("estimate requires config.mode = \"SI\"");
  Section s = command_section(cfg, "estimate");
  const double omega_c = s.number("omega_c");
  const double g_c_limit = max_electric_coupling(omega_c);
  const double g_c = s.number("g_c", g_c_limit);
  const double volume = s.number("mode_volume");
  const double density = s.number("density_cm3");
  const double thickness = s.number("thickness");
  const double width = s.number("width");
  const double length = s.number("length");
  const auto temperature = s.optional_number("temperature");
  const double reference_g_m = s.number("reference_g_m", 1e3);
  const auto g_m_override = s.optional_number("g_m");
  RegimeOptions ropt;
  ropt.hierarchy_factor = s.number("hierarchy_factor", ropt.hierarchy_factor);
  s.finish();

  if (!(density > 0.0)) throw ConfigError("'estimate.density_cm3' must be positive");
  const double g_m = magnetic_coupling(omega_c, g_c, volume);
  const SpinCount count = spin_count(density, thickness, width, length);
  if (count.count == 0) throw ConfigError("the dopant slab holds fewer than one spin");

  SystemParams p = cfg.params;
  p.g_c = g_c;
  p.g_m = g_m_override.value_or(g_m);
  p.omega_c = omega_c;
  p.ensembles.resize(1);
  p.ensembles[0].n_spins = count.count;
  p.ensembles[0].g_m.reset();
  const RegimeReport regime = classify_regime(p, ropt);

  const double ratio = g_m / reference_g_m;
  Json j;
  j["constants"] = {{"bohr_magneton", kCodata2018.bohr_magneton},
                    {"vacuum_permeability", kCodata2018.vacuum_permeability},
                    {"hbar", kCodata2018.hbar},
                    {"fine_structure_alpha", kCodata2018.fine_structure_alpha},
                    {"boltzmann", kCodata2018.boltzmann}};
  j["omega_c"] = omega_c;
  j["g_c_limit"] = g_c_limit;
  j["g_c"] = g_c;
  j["g_m"] = g_m;
  j["g_m_reference"] = reference_g_m;
  j["g_m_ratio_to_reference"] = ratio;
  j["g_m_same_order_as_reference"] = std::abs(std::log10(ratio)) <= 1.0;
  j["g_m_used_for_regime"] = p.g_m;
  j["n_spins"] = count.count;
  j["n_spins_below_one"] = count.below_one;
  j["collective_coupling"] = collective_coupling(g_m, static_cast<double>(count.count));
  j["thermal_occupation"] = temperature ? Json(thermal_occupation(omega_c, *temperature)) : Json(nullptr);
  j["regime"] = regime_json(regime);
  return j;
}

Json regime_report(const RunConfig& cfg) { return regime_json(classify_regime(cfg.params)); }

Json spectrum_report(const RunConfig& cfg, std::string* eigenvalue_csv) {
  Section s = command_section(cfg, "spectrum");
  const bool embedded = s.boolean("embedded", false);
  const bool include_convergence = s.boolean("convergence", false);
  s.finish();

  return with_cap_hint(cfg, [&] {
    const EnumeratedBasis basis = make_basis(cfg);
    const SparseOperator h = build_hamiltonian(cfg.params, basis);
    const Spectrum spec = eigensystem(h, basis, false);
    Json j;
    j["dimension"] = spec.dimension;
    j["max_residual"] = spec.max_residual;
    j["block_minima"] = Json::object();
    for (const auto& b : spec.blocks) j["block_minima"][std::to_string(b.excitation)] = b.values(0);
    if (spec.has_block(0) && spec.has_block(1) && spec.has_block(2)) {
      const Anharmonicity a = anharmonicity(spec);
      j["anharmonicity"] = {{"ladder_step", a.ladder_step}, {"manifold_gap", a.manifold_gap}};
    } else {
      j["anharmonicity"] = nullptr;
    }
    Json ladder = Json::array();
    for (int n = 1; n <= cfg.truncation.n_max; ++n) {
      const auto [lo, hi] = jc_ladder(cfg.params.g_c, cfg.params.delta, n);
      ladder.push_back({{"n", n}, {"lower", lo}, {"upper", hi}});
    }
    j["jc_ladder"] = ladder;
    if (embedded) {
      const EmbeddedJcReport r = embedded_jc_analysis(cfg.params, basis);
      Json e{{"lower_energy", r.lower_energy},
             {"upper_energy", r.upper_energy},
             {"splitting", r.splitting},
             {"collective_coupling", r.collective_coupling},
             {"coefficient_magnitudes", {r.coefficient_magnitudes[0], r.coefficient_magnitudes[1],
                                         r.coefficient_magnitudes[2]}},
             {"leakage", r.leakage},
             {"off_resonant_population", r.off_resonant_population}};
      e["anharmonicity"] = r.anharmonicity ? Json(*r.anharmonicity) : Json(nullptr);
      j["embedded"] = e;
    }
    if (include_convergence) {
      std::vector<SpaceTruncation> truncs;
      const int top = cfg.truncation.total_excitation_max.value_or(cfg.truncation.n_max + 1);
      for (int t = std::max(2, top - 2); t <= top; ++t)
        truncs.push_back(SpaceTruncation{std::max(cfg.truncation.n_max - (top - t), 1),
                                         std::max(cfg.truncation.k_max - (top - t), 1), t});
      const ConvergenceTable table = convergence_scan(cfg.params, truncs);
      Json rows = Json::array();
      for (const auto& r : table.rows)
        rows.push_back({{"truncation", truncation_to_json(r.truncation)},
                        {"dimension", r.dimension},
                        {"doublet_lower", r.doublet_lower},
                        {"doublet_upper", r.doublet_upper},
                        {"change", r.change ? Json(*r.change) : Json(nullptr)}});
      j["convergence"] = {{"rows", rows}, {"converged", table.converged}, {"monotone", table.monotone}};
    }
    if (eigenvalue_csv) {
      CsvWriter csv({"block", "index", "eigenvalue"});
      for (const auto& b : spec.blocks)
        for (Eigen::Index i = 0; i < b.values.size(); ++i)
          csv.row({std::to_string(b.excitation), std::to_string(i), format_double(b.values(i))});
      *eigenvalue_csv = csv.str();
    }
    return j;
  });
}

Json basis_dump(const RunConfig& cfg) {
  return with_cap_hint(cfg, [&] {
    const EnumeratedBasis basis = make_basis(cfg);
    Json labels = Json::array();
    for (const auto& st : basis.states()) labels.push_back(st.label());
    return Json{{"dimension", basis.size()}, {"truncation", truncation_to_json(cfg.truncation)}, {"states", labels}};
  });
}

Json gate_report(const RunConfig& cfg) {
  Section s = command_section(cfg, "gate");
  const std::string kind = s.string("kind", "sqrt_swap");
  const GateOptions opt = parse_gate_options(s);
  const std::size_t i = ensemble_index(s, "ensemble_i", 0);
  const std::size_t j_idx = ensemble_index(s, "ensemble_j", 1);
  EvaluateOptions eopt;
  eopt.dissipative = s.boolean("dissipative", false);
  eopt.worst_case_samples = static_cast<std::size_t>(s.count("worst_case_samples", eopt.worst_case_samples));
  if (s.has("truncation")) {
    std::size_t unused = 0;
    eopt.truncation = parse_truncation(s.child("truncation"), &unused);
  } else {
    s.child("truncation");
  }
  std::optional<Schedule> explicit_schedule;
  if (s.has("schedule")) explicit_schedule = parse_schedule(s.raw("schedule"), cfg.params.ensembles.size());
  else s.explicit_null("schedule");
  const std::string source = s.string("source", "ensemble:0");
  const std::string target = s.string("target", "transmon");
  s.finish();

  Json out;
  out["kind"] = kind;
  if (kind == "transfer") {
    const GateEndpoint src = parse_endpoint(source), dst = parse_endpoint(target);
    const Schedule sched = explicit_schedule ? *explicit_schedule : transfer_schedule(cfg.params, src, dst, opt);
    const TransferReport r = evaluate_transfer(sched, cfg.params, src, dst);
    out["source"] = source;
    out["target"] = target;
    out["schedule"] = schedule_json(sched);
    out["transfer"] = {{"target_population", r.target_population},
                       {"source_population", r.source_population},
                       {"total_duration", r.total_duration}};
    return out;
  }

  GateTarget tgt;
  try {
    tgt = gate_target_from_string(kind);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("gate.kind: ") + e.what() + " or transfer");
  }
  if (cfg.params.ensembles.size() < 2)
    throw ConfigError("gate '" + kind + "' acts on two ensembles but params.ensembles has only one");
  Schedule sched;
  if (explicit_schedule) sched = *explicit_schedule;
  else if (tgt == GateTarget::sqrt_swap) sched = sqrt_swap_schedule(cfg.params, i, j_idx, opt);
  else if (tgt == GateTarget::swap) sched = swap_schedule(cfg.params, i, j_idx, opt);
  const GateReport r = evaluate_gate(sched, cfg.params, i, j_idx, tgt, eopt);
  out["ensemble_i"] = i;
  out["ensemble_j"] = j_idx;
  out["schedule"] = schedule_json(sched);
  out["report"] = {{"target", r.target},
                   {"average_fidelity", r.average_fidelity},
                   {"worst_case_state_fidelity", r.worst_case_state_fidelity},
                   {"leakage", r.leakage},
                   {"total_duration", r.total_duration},
                   {"dissipative", r.dissipative},
                   {"local_phases", {{"pre", {r.phases.pre[0], r.phases.pre[1]}},
                                     {"post", {r.phases.post[0], r.phases.post[1]}}}},
                   {"realized_unitary", complex_matrix(r.realized_unitary)}};
  return out;
}

OutputBundle cmd_estimate(const RunConfig& cfg) {
  const Json j = estimate_report(cfg);
  OutputBundle b;
  Json full = metadata(cfg, "estimate");
  full["estimate"] = j;
  b.files["estimate.json"] = dump(full);
  std::ostringstream os;
  os << "g_c limit (sqrt(alpha) omega_c): " << format_double(j["g_c_limit"].get<double>()) << " rad/s\n"
     << "g_m: " << format_double(j["g_m"].get<double>()) << " rad/s (reference "
     << format_double(j["g_m_reference"].get<double>()) << ", ratio "
     << format_double(j["g_m_ratio_to_reference"].get<double>()) << ")\n"
     << "N_s: " << j["n_spins"].get<std::uint64_t>() << "\n"
     << "G: " << format_double(j["collective_coupling"].get<double>()) << " rad/s\n"
     << "two_level_valid: " << (j["regime"]["two_level_valid"].get<bool>() ? "true" : "false") << "\n";
  if (!j["thermal_occupation"].is_null())
    os << "thermal occupation: " << format_double(j["thermal_occupation"].get<double>()) << "\n";
  b.console = os.str();
  return b;
}

OutputBundle cmd_spectrum(const RunConfig& cfg) {
  std::string csv;
  const Json j = spectrum_report(cfg, &csv);
  OutputBundle b;
  Json full = metadata(cfg, "spectrum");
  full["spectrum"] = j;
  b.files["spectrum.json"] = dump(full);
  b.files["eigenvalues.csv"] = csv;
  std::ostringstream os;
  os << "dimension " << j["dimension"].get<std::size_t>() << ", max residual "
     << format_double(j["max_residual"].get<double>()) << "\n";
  if (j.contains("embedded"))
    os << "hybrid doublet splitting " << format_double(j["embedded"]["splitting"].get<double>()) << "\n";
  b.console = os.str();
  return b;
}

OutputBundle cmd_dynamics(const RunConfig& cfg) {
  Section s = command_section(cfg, "dynamics");
  const std::string kind = s.string("kind", "unitary");
  Json meta = metadata(cfg, "dynamics");
  meta["kind"] = kind;
  OutputBundle b;

  if (kind == "effective") {
    const double t_end = s.number("t_end");
    ValidationOptions vopt;
    vopt.samples = static_cast<std::size_t>(s.count("samples", vopt.samples));
    vopt.stark_shifts = s.boolean("stark_shifts", vopt.stark_shifts);
    s.finish();
    const DeviationReport r = validate_effective(cfg.params, t_end, vopt);
    Json j{{"freq_full", r.freq_full},           {"freq_eff", r.freq_eff},
           {"rel_error", r.rel_error},           {"max_photon_pop", r.max_photon_pop},
           {"max_population_deviation", r.max_population_deviation}, {"breakdown", r.breakdown}};
    j["validity_ratios"] = Json::object();
    for (const auto& [k, v] : r.validity_ratios) j["validity_ratios"][k] = v;
    meta["effective"] = j;
    b.files["effective.json"] = dump(meta);
    b.console = "exchange frequency full " + format_double(r.freq_full) + ", relative error " +
                format_double(r.rel_error) + "\n";
    return b;
  }

  if (kind == "cooling") {
    const auto initial_k = s.count("initial_k", 1);
    const std::vector<double> grid = parse_grid(s);
    s.finish();
    const CoolingResult r = cooling_simulation(cfg.params, static_cast<int>(initial_k), grid);
    meta["initial_k"] = initial_k;
    meta["fit"] = fit_json(r.fit);
    meta["purcell_estimate"] = r.purcell_estimate;
    meta["warnings"] = r.warnings;
    b.files["trajectory.csv"] = trajectory_csv(r.trajectory);
    b.files["trajectory.json"] = dump(meta);
    b.console = "fitted cooling rate " + format_double(r.fit.rate) + ", Purcell estimate " +
                format_double(r.purcell_estimate) + "\n";
    for (const auto& w : r.warnings) b.console += "warning: " + w + "\n";
    return b;
  }

  if (kind != "unitary" && kind != "lindblad")
    throw ConfigError("'dynamics.kind' must be unitary, lindblad, cooling or effective");

  return with_cap_hint(cfg, [&] {
    const EnumeratedBasis basis = make_basis(cfg);
    const std::vector<double> grid = parse_grid(s);
    const InitialState init = parse_initial(s, cfg, basis);
    const SparseOperator h = build_hamiltonian(cfg.params, basis);
    const std::vector<Observable> obs = parse_observables(s, cfg, basis, h);
    const std::string fit_name = s.string("fit", "");
    Json tolerances;
    Trajectory traj;
    if (kind == "unitary") {
      UnitaryOptions u;
      u.tolerance = s.number("tolerance", u.tolerance);
      u.keep_states = false;
      s.number("rel_tol", 0.0);
      s.number("abs_tol", 0.0);
      s.finish();
      tolerances = {{"krylov", u.tolerance}};
      traj = evolve_unitary(h, init.psi, grid, obs, u);
    } else {
      LindbladOptions l;
      l.rel_tol = s.number("rel_tol", l.rel_tol);
      l.abs_tol = s.number("abs_tol", l.abs_tol);
      s.number("tolerance", 0.0);
      s.finish();
      l.keep_states = false;
      tolerances = {{"rel_tol", l.rel_tol}, {"abs_tol", l.abs_tol}};
      const LindbladModel model = build_collapse_ops(cfg.params, basis);
      const Eigen::MatrixXcd rho0 = init.psi * init.psi.adjoint();
      traj = evolve_lindblad(model, rho0, grid, obs, l);
    }
    meta["dimension"] = basis.size();
    meta["initial"] = init.description;
    meta["tolerances"] = tolerances;
    if (!fit_name.empty()) {
      auto it = traj.observables.find(fit_name);
      if (it == traj.observables.end()) throw ConfigError("'dynamics.fit' names an observable that was not recorded");
      meta["fit"] = fit_json(fit_decay(it->second, traj.times));
      meta["fit_observable"] = fit_name;
    }
    b.files["trajectory.csv"] = trajectory_csv(traj);
    b.files["trajectory.json"] = dump(meta);
    b.console = std::to_string(traj.times.size()) + " time points, dimension " + std::to_string(basis.size()) + "\n";
    return b;
  });
}

OutputBundle cmd_gate(const RunConfig& cfg) {
  const Json j = gate_report(cfg);
  OutputBundle b;
  Json full = metadata(cfg, "gate");
  full["gate"] = j;
  b.files["gate.json"] = dump(full);
  if (j.contains("report"))
    b.console = "average fidelity " + format_double(j["report"]["average_fidelity"].get<double>()) + ", leakage " +
                format_double(j["report"]["leakage"].get<double>()) + "\n";
  else
    b.console = "target population " + format_double(j["transfer"]["target_population"].get<double>()) + "\n";
  return b;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EMBEDDED_JC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("EMBEDDED_JC_THREADS must be a positive integer");
    n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace ejc::app
