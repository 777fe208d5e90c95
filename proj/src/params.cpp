#include "ejc/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ejc/errors.hpp"

namespace ejc {

namespace {

// num/den with the conventions 0/0 = 0 and x/0 = inf for x > 0.
double margin(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

}  // namespace

std::string to_string(SpinModel model) {
  return model == SpinModel::exact_dicke ? "exact_dicke" : "bosonic";
}

SpinModel spin_model_from_string(const std::string& name) {
  if (name == "exact_dicke") return SpinModel::exact_dicke;
  if (name == "bosonic") return SpinModel::bosonic;
  throw DomainError("unknown spin model '" + name + "' (expected exact_dicke or bosonic)");
}

void SystemParams::validate() const {
  if (!(g_c > 0.0) || !std::isfinite(g_c)) throw DomainError("g_c must be positive and finite");
  if (!(g_m >= 0.0) || !std::isfinite(g_m)) throw DomainError("g_m must be non-negative and finite");
  if (ensembles.empty()) throw DomainError("at least one ensemble is required");
  for (std::size_t j = 0; j < ensembles.size(); ++j) {
    const auto& e = ensembles[j];
    if (e.n_spins < 1) throw DomainError("ensemble " + std::to_string(j) + ": N_s must be >= 1");
    if (!std::isfinite(e.detuning))
      throw DomainError("ensemble " + std::to_string(j) + ": detuning must be finite");
    if (e.g_m && (!(*e.g_m >= 0.0) || !std::isfinite(*e.g_m)))
      throw DomainError("ensemble " + std::to_string(j) + ": g_m must be non-negative");
  }
  if (!std::isfinite(delta)) throw DomainError("delta must be finite");
  if (omega_c && !(*omega_c > 0.0)) throw DomainError("omega_c must be positive");
  if (!(kappa_c >= 0.0)) throw DomainError("kappa_c must be non-negative");
  if (!(gamma_jj >= 0.0)) throw DomainError("gamma_JJ must be non-negative");
  if (!(gamma_spin >= 0.0)) throw DomainError("gamma_spin must be non-negative");
}

double SystemParams::spin_coupling(std::size_t ensemble) const {
  return ensembles.at(ensemble).g_m.value_or(g_m);
}

double SystemParams::collective_coupling(std::size_t ensemble) const {
  return ejc::collective_coupling(spin_coupling(ensemble),
                                  static_cast<double>(ensembles.at(ensemble).n_spins));
}

SystemParams to_dimensionless(const SystemParams& params) {
  params.validate();
  const double s = 1.0 / params.g_c;
  SystemParams out = params;
  out.g_c = 1.0;
  out.g_m *= s;
  out.delta *= s;
  if (out.omega_c) *out.omega_c *= s;
  out.kappa_c *= s;
  out.gamma_jj *= s;
  out.gamma_spin *= s;
  for (auto& e : out.ensembles) {
    e.detuning *= s;
    if (e.g_m) *e.g_m *= s;
  }
  return out;
}

double magnetic_coupling(double omega_c, double g_c, double mode_volume,
                         const PhysicalConstants& c) {
  if (!(mode_volume > 0.0)) throw DomainError("mode volume must be positive");
  if (!(g_c >= 0.0)) throw DomainError("g_c must be non-negative");
  if (!(omega_c > g_c)) throw DomainError("omega_c must exceed g_c");
  return c.bohr_magneton * std::sqrt(c.vacuum_permeability * (omega_c - g_c)) /
         std::sqrt(2.0 * c.hbar * mode_volume);
}

double max_electric_coupling(double omega_c, const PhysicalConstants& c) {
  if (!(omega_c >= 0.0)) throw DomainError("omega_c must be non-negative");
  return std::sqrt(c.fine_structure_alpha) * omega_c;
}

SpinCount spin_count(double density_per_cm3, double thickness, double width, double length) {
  if (!(density_per_cm3 > 0.0) || !(thickness > 0.0) || !(width > 0.0) || !(length > 0.0))
    throw DomainError("spin_count: density and all dimensions must be positive");
  const double per_m3 = density_per_cm3 * 1e6;
  const double x = per_m3 * thickness * width * length;
  if (!std::isfinite(x) || x >= 18446744073709551616.0)  // 2^64
    throw DomainError("spin_count: count overflows a 64-bit integer");
  SpinCount out;
  if (x < 1.0) {
    out.below_one = true;
    return out;
  }
  // Products of decimal inputs land a few ulp off exact integers; snap those.
  const double nearest = std::nearbyint(x);
  const double value = std::abs(x - nearest) <= 1e-9 * x ? nearest : std::floor(x);
  out.count = static_cast<std::uint64_t>(value);
  return out;
}

double collective_coupling(double g_m, double n_spins) {
  if (!(n_spins >= 1.0)) throw DomainError("collective_coupling: N_s must be >= 1");
  return g_m * std::sqrt(n_spins);
}

double dispersive_resonance(double delta, double g_c) {
  if (delta == 0.0) throw DomainError("dispersive_resonance: delta must be non-zero");
  return delta + g_c * g_c / delta;
}

double thermal_occupation(double omega, double temperature, const PhysicalConstants& c) {
  if (!(omega > 0.0) || !(temperature > 0.0))
    throw DomainError("thermal_occupation: omega and T must be positive");
  const double x = c.hbar * omega / (c.boltzmann * temperature);
  return 1.0 / std::expm1(x);
}

RegimeReport classify_regime(const SystemParams& params, const RegimeOptions& options) {
  params.validate();
  if (!(options.hierarchy_factor > 0.0)) throw DomainError("hierarchy factor must be positive");

  RegimeReport r;
  const double G = params.collective_coupling(0);
  r.collective_coupling = G;
  r.anharmonicity_scale = G * (std::sqrt(2.0) - 1.0);

  const double decoherence =
      std::max({params.kappa_c, params.gamma_jj, params.gamma_spin});

  const double hierarchy = margin(params.g_c, options.hierarchy_factor * G);
  const double two_level = margin(r.anharmonicity_scale, decoherence);
  const double resonant = margin(G, decoherence);

  r.margin_ratios["hierarchy"] = hierarchy;
  r.margin_ratios["two_level"] = two_level;
  r.margin_ratios["two_level_strong"] = two_level / options.hierarchy_factor;
  r.margin_ratios["resonant_strong_coupling"] = resonant;
  r.hierarchy_valid = hierarchy > 1.0;
  r.two_level_valid = two_level > 1.0;
  r.resonant_strong_coupling = resonant > 1.0;

  const double Delta = params.ensembles.front().detuning;
  r.dispersive_applicable = params.delta != 0.0 && Delta != 0.0;
  if (r.dispersive_applicable) {
    const double gc2 = params.g_c * params.g_c;
    const double cavity_channel = params.kappa_c * gc2 / (params.delta * params.delta);
    const double dispersive = margin(params.g_c * G / std::abs(Delta),
                                     std::max({cavity_channel, params.gamma_spin, params.gamma_jj}));
    r.margin_ratios["dispersive_strong_coupling"] = dispersive;
    r.dispersive_strong_coupling = dispersive > 1.0;
  }
  return r;
}

}  // namespace ejc
