#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "commands.hpp"
#include "ejc/dynamics.hpp"
#include "ejc/effective.hpp"
#include "ejc/errors.hpp"
#include "ejc/gates.hpp"
#include "ejc/hamiltonian.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"
#include "ejc/spectra.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

std::vector<std::uint64_t> spin_counts(const ejc::SystemParams& p) {
  std::vector<std::uint64_t> n;
  for (const auto& e : p.ensembles) n.push_back(e.n_spins);
  return n;
}

ejc::EnumeratedBasis make_basis(const ejc::SystemParams& p, const ejc::SpaceTruncation& t, std::size_t cap) {
  const auto n = spin_counts(p);
  return ejc::EnumeratedBasis(t, n, cap);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Embedded Jaynes-Cummings core: basis, Hamiltonian, spectra, dynamics, gates";

  auto base = py::register_exception<ejc::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ejc::DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ejc::DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ejc::NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ejc::app::ConfigError>(m, "ConfigError", base.ptr());

  py::enum_<ejc::SpinModel>(m, "SpinModel")
      .value("exact_dicke", ejc::SpinModel::exact_dicke)
      .value("bosonic", ejc::SpinModel::bosonic);

  py::class_<ejc::Ensemble>(m, "Ensemble")
      .def(py::init([](std::uint64_t n, double detuning, std::optional<double> g_m) {
             return ejc::Ensemble{n, detuning, g_m};
           }),
           "n_spins"_a = 1, "detuning"_a = 0.0, "g_m"_a = py::none())
      .def_readwrite("n_spins", &ejc::Ensemble::n_spins)
      .def_readwrite("detuning", &ejc::Ensemble::detuning)
      .def_readwrite("g_m", &ejc::Ensemble::g_m);

  py::class_<ejc::SystemParams>(m, "SystemParams")
      .def(py::init<>())
      .def_readwrite("g_c", &ejc::SystemParams::g_c)
      .def_readwrite("g_m", &ejc::SystemParams::g_m)
      .def_readwrite("ensembles", &ejc::SystemParams::ensembles)
      .def_readwrite("delta", &ejc::SystemParams::delta)
      .def_readwrite("omega_c", &ejc::SystemParams::omega_c)
      .def_readwrite("kappa_c", &ejc::SystemParams::kappa_c)
      .def_readwrite("gamma_jj", &ejc::SystemParams::gamma_jj)
      .def_readwrite("gamma_spin", &ejc::SystemParams::gamma_spin)
      .def_readwrite("spin_model", &ejc::SystemParams::spin_model)
      .def("validate", &ejc::SystemParams::validate)
      .def("collective_coupling", &ejc::SystemParams::collective_coupling, "ensemble"_a = 0);

  py::class_<ejc::SpaceTruncation>(m, "SpaceTruncation")
      .def(py::init([](int n_max, int k_max, std::optional<int> total) {
             return ejc::SpaceTruncation{n_max, k_max, total};
           }),
           "n_max"_a = 4, "k_max"_a = 3, "total_excitation_max"_a = 4)
      .def_readwrite("n_max", &ejc::SpaceTruncation::n_max)
      .def_readwrite("k_max", &ejc::SpaceTruncation::k_max)
      .def_readwrite("total_excitation_max", &ejc::SpaceTruncation::total_excitation_max);

  m.def("magnetic_coupling", [](double omega_c, double g_c, double v) { return ejc::magnetic_coupling(omega_c, g_c, v); },
        "omega_c"_a, "g_c"_a, "mode_volume"_a);
  m.def("max_electric_coupling", [](double omega_c) { return ejc::max_electric_coupling(omega_c); }, "omega_c"_a);
  m.def("spin_count", [](double density, double thickness, double width, double length) {
        return ejc::spin_count(density, thickness, width, length).count;
      }, "density_cm3"_a, "thickness"_a, "width"_a, "length"_a);
  m.def("classify_regime", [](const ejc::SystemParams& p, double factor) {
        const auto r = ejc::classify_regime(p, {factor});
        return py::dict("collective_coupling"_a = r.collective_coupling,
                        "anharmonicity_scale"_a = r.anharmonicity_scale,
                        "hierarchy_valid"_a = r.hierarchy_valid,
                        "resonant_strong_coupling"_a = r.resonant_strong_coupling,
                        "two_level_valid"_a = r.two_level_valid,
                        "dispersive_applicable"_a = r.dispersive_applicable,
                        "dispersive_strong_coupling"_a = r.dispersive_strong_coupling,
                        "margin_ratios"_a = r.margin_ratios);
      }, "params"_a, "hierarchy_factor"_a = 10.0);

  m.def("basis_labels", [](const ejc::SystemParams& p, const ejc::SpaceTruncation& t, std::size_t cap) {
        const auto basis = make_basis(p, t, cap);
        std::vector<std::string> out;
        for (const auto& s : basis.states()) out.push_back(s.label());
        return out;
      }, "params"_a, "truncation"_a = ejc::SpaceTruncation{}, "max_dimension"_a = ejc::kDefaultMaxDimension);
  m.def("hamiltonian", [](const ejc::SystemParams& p, const ejc::SpaceTruncation& t, std::size_t cap) {
        return ejc::build_hamiltonian(p, make_basis(p, t, cap)).dense();
      }, "params"_a, "truncation"_a = ejc::SpaceTruncation{}, "max_dimension"_a = ejc::kDefaultMaxDimension,
      "Dense rotating-frame Hamiltonian on the truncated basis.");
  m.def("eigenvalues", [](const ejc::SystemParams& p, const ejc::SpaceTruncation& t) {
        const auto basis = make_basis(p, t, ejc::kDefaultMaxDimension);
        return ejc::eigensystem(ejc::build_hamiltonian(p, basis), basis, false).eigenvalues;
      }, "params"_a, "truncation"_a = ejc::SpaceTruncation{});
  m.def("embedded_jc", [](const ejc::SystemParams& p, const ejc::SpaceTruncation& t) {
        const auto r = ejc::embedded_jc_analysis(p, make_basis(p, t, ejc::kDefaultMaxDimension));
        return py::dict("lower_energy"_a = r.lower_energy, "upper_energy"_a = r.upper_energy,
                        "splitting"_a = r.splitting, "collective_coupling"_a = r.collective_coupling,
                        "coefficient_magnitudes"_a = r.coefficient_magnitudes, "leakage"_a = r.leakage,
                        "off_resonant_population"_a = r.off_resonant_population,
                        "anharmonicity"_a = r.anharmonicity);
      }, "params"_a, "truncation"_a = ejc::SpaceTruncation{});

  m.def("fit_decay", [](const std::vector<double>& series, const std::vector<double>& t) {
        const auto f = ejc::fit_decay(series, t);
        return py::dict("rate"_a = f.rate, "amplitude"_a = f.amplitude, "offset"_a = f.offset,
                        "rms_residual"_a = f.rms_residual);
      }, "series"_a, "t_grid"_a);
  m.def("cooling_rate", [](const ejc::SystemParams& p, int initial_k, const std::vector<double>& t) {
        const auto r = ejc::cooling_simulation(p, initial_k, t);
        return py::make_tuple(r.fit.rate, r.purcell_estimate);
      }, "params"_a, "initial_k"_a, "t_grid"_a, "Fitted cooling rate and the 4 G^2 / kappa estimate.");

  m.def("dressed_resonance", &ejc::dressed_resonance, "delta"_a, "g_c"_a, "collective_coupling"_a, "offset"_a = 0.0);
  m.def("validate_effective", [](const ejc::SystemParams& p, double t_end, std::size_t samples) {
        const auto r = ejc::validate_effective(p, t_end, {samples, true});
        return py::dict("freq_full"_a = r.freq_full, "freq_eff"_a = r.freq_eff, "rel_error"_a = r.rel_error,
                        "max_photon_pop"_a = r.max_photon_pop, "breakdown"_a = r.breakdown,
                        "validity_ratios"_a = r.validity_ratios);
      }, "params"_a, "t_end"_a, "samples"_a = 4096);

  m.def("target_unitary", [](const std::string& name) {
        return Eigen::MatrixXcd(ejc::target_unitary(ejc::gate_target_from_string(name)));
      }, "name"_a);
  m.def("average_gate_fidelity", [](const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v) {
        return ejc::average_gate_fidelity(u, v);
      }, "target"_a, "realized"_a);
  m.def("evaluate_gate", [](const ejc::SystemParams& p, const std::string& name, bool dissipative) {
        const auto target = ejc::gate_target_from_string(name);
        const ejc::Schedule s = target == ejc::GateTarget::swap ? ejc::swap_schedule(p, 0, 1)
                                                                : ejc::sqrt_swap_schedule(p, 0, 1);
        ejc::EvaluateOptions o;
        o.dissipative = dissipative;
        const auto r = ejc::evaluate_gate(s, p, 0, 1, target, o);
        return py::dict("average_fidelity"_a = r.average_fidelity,
                        "worst_case_state_fidelity"_a = r.worst_case_state_fidelity, "leakage"_a = r.leakage,
                        "total_duration"_a = r.total_duration,
                        "realized_unitary"_a = Eigen::MatrixXcd(r.realized_unitary));
      }, "params"_a, "target"_a = "sqrt_swap", "dissipative"_a = false,
      "Builds the default schedule between ensembles 0 and 1 and evaluates it.");

  m.def("run_cli", [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return ejc::app::run_cli(args);
      }, "args"_a, "Runs the embedded-jc command line; returns the exit code.");
  m.attr("__version__") = ejc::app::version_string();
}
