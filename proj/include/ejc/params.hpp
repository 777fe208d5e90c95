#pragma once

// Physical parameter record, closed-form coupling estimators and the
// regime classifier for spin ensembles coupled to a transmon-loaded
// microstrip cavity. Estimators work in SI (rates in rad/s).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ejc {

struct PhysicalConstants {
  double bohr_magneton;        // J/T
  double vacuum_permeability;  // T m / A
  double hbar;                 // J s
  double fine_structure_alpha;
  double boltzmann;            // J/K
};

/// CODATA 2018 recommended values.
inline constexpr PhysicalConstants kCodata2018{
    9.2740100783e-24,
    1.25663706212e-6,
    1.054571817e-34,
    7.2973525693e-3,
    1.380649e-23,
};

enum class SpinModel { exact_dicke, bosonic };

std::string to_string(SpinModel model);
SpinModel spin_model_from_string(const std::string& name);

/// One spin ensemble. `detuning` is the red detuning of the Zeeman
/// transition from the cavity; `g_m` overrides the global single-spin
/// coupling when set.
struct Ensemble {
  std::uint64_t n_spins = 1;
  double detuning = 0.0;
  std::optional<double> g_m;
};

struct SystemParams {
  double g_c = 1.0;
  double g_m = 0.0;
  std::vector<Ensemble> ensembles{Ensemble{}};
  double delta = 0.0;
  std::optional<double> omega_c;
  double kappa_c = 0.0;
  double gamma_jj = 0.0;
  double gamma_spin = 0.0;
  SpinModel spin_model = SpinModel::exact_dicke;

  /// Throws DomainError when an invariant of the record is violated.
  void validate() const;

  double spin_coupling(std::size_t ensemble) const;
  /// G_j = g_m,j * sqrt(N_s,j).
  double collective_coupling(std::size_t ensemble) const;
};

/// Rescales every rate by 1/g_c so that g_c = 1 (times then in units of 1/g_c).
SystemParams to_dimensionless(const SystemParams& params);

/// Single-spin magnetic-dipole coupling mu_B sqrt(mu_0 (omega_c - g_c)) / sqrt(2 hbar V_c).
/// `mode_volume` is in m^3.
double magnetic_coupling(double omega_c, double g_c, double mode_volume,
                         const PhysicalConstants& constants = kCodata2018);

/// Fundamental limit sqrt(alpha) * omega_c of the transmon-cavity coupling.
double max_electric_coupling(double omega_c,
                             const PhysicalConstants& constants = kCodata2018);

struct SpinCount {
  std::uint64_t count = 0;
  /// Set when density * volume < 1 and the count therefore rounds to zero.
  bool below_one = false;
};

/// Number of dopant spins in a rectangular slab. Density in cm^-3, lengths in m.
SpinCount spin_count(double density_per_cm3, double thickness, double width,
                     double length);

double collective_coupling(double g_m, double n_spins);

/// Spin detuning delta + g_c^2/delta that makes the spins resonant with the
/// Stark-shifted transmon.
double dispersive_resonance(double delta, double g_c);

/// Bose-Einstein occupation 1/(exp(hbar omega / k_B T) - 1).
double thermal_occupation(double omega, double temperature,
                          const PhysicalConstants& constants = kCodata2018);

struct RegimeOptions {
  /// Factor used to read "much larger than".
  double hierarchy_factor = 10.0;
};

struct RegimeReport {
  double collective_coupling = 0.0;
  double anharmonicity_scale = 0.0;
  bool hierarchy_valid = false;
  bool resonant_strong_coupling = false;
  bool two_level_valid = false;
  bool dispersive_applicable = false;
  bool dispersive_strong_coupling = false;
  std::map<std::string, double> margin_ratios;
};

RegimeReport classify_regime(const SystemParams& params,
                             const RegimeOptions& options = {});

}  // namespace ejc
