#pragma once

// Dispersive (Schrieffer-Wolff) model with the cavity eliminated, and a
// harness comparing its exchange dynamics against the full model.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ejc/hamiltonian.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc {

struct EffectiveOptions {
  int k_max = 1;
  std::optional<int> total_excitation_max = 1;
  /// Second-order diagonal shifts -g_c^2/delta (transmon) and
  /// -g_m^2 |<k|S+|k-1>|^2 / Delta (spins), plus the cavity-mediated
  /// ensemble-ensemble exchange of the same order.
  bool stark_shifts = true;
};

struct EffectiveModel {
  /// g_c g_m,j / Delta_j per ensemble.
  std::vector<double> g_eff_single;
  /// g_c g_m,j sqrt(N_s,j) / Delta_j per ensemble.
  std::vector<double> g_eff_collective;
  double transmon_shift = 0.0;
  /// Shift of the single-excitation state of each ensemble.
  std::vector<double> spin_shift;
  bool stark_shifts = true;
  /// "coupling" = max_j G_j / g_c, "detuning_mismatch" = max_j |delta - Delta_j| / |Delta_j|,
  /// "dispersive" = g_c / |delta|.
  std::map<std::string, double> validity_ratios;
};

struct EffectiveSystem {
  EffectiveModel model;
  EnumeratedBasis basis;
  SparseOperator hamiltonian;
};

/// H_eff = diag(-delta t - sum_j Delta_j k_j + shifts)
///         + sum_j (g_c g_m,j / Delta_j) (S+_j sigma_ab + h.c.)
/// on the photon-free basis. Requires delta != 0 and every Delta_j != 0.
EffectiveSystem build_effective(const SystemParams& params, const EffectiveOptions& options = {});

/// Spin detuning that puts the cavity-dressed single spin excitation on the
/// cavity-dressed transmon level, each dressed exactly as a two-level
/// JC pair: D(Delta, G) = D(delta, g_c) - offset with
/// D(x, g) = x/2 + sgn(x) sqrt(x^2/4 + g^2). To second order this is
/// Delta + G^2/Delta = delta + g_c^2/delta - offset.
double dressed_resonance(double delta, double g_c, double collective_coupling, double offset = 0.0);

struct DeviationReport {
  double freq_full = 0.0;
  double freq_eff = 0.0;
  /// |freq_full - 2 g_eff| / (2 g_eff) with g_eff the collective coupling of ensemble 0.
  double rel_error = 0.0;
  double max_photon_pop = 0.0;
  /// max over t of |P_full - P_eff| for the transmon and spin excitations.
  double max_population_deviation = 0.0;
  /// Set when max_photon_pop exceeds 5 (g_c/delta)^2.
  bool breakdown = false;
  std::map<std::string, double> validity_ratios;
};

struct ValidationOptions {
  std::size_t samples = 4096;
  bool stark_shifts = true;
};

/// Starts from one collective excitation of ensemble 0 with the transmon and
/// cavity in the ground state and propagates under the full and the effective
/// model on a uniform grid over [0, t_end]. Frequencies are angular
/// frequencies of the transmon population, from the peak of its Hann-windowed
/// discrete-time Fourier transform.
DeviationReport validate_effective(const SystemParams& params, double t_end,
                                   const ValidationOptions& options = {});

/// Dominant angular frequency of a uniformly sampled real series (mean removed).
double dominant_frequency(std::span<const double> series, double dt);

}  // namespace ejc
