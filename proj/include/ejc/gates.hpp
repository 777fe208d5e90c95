#pragma once

// Piecewise-constant detuning schedules that move excitations between spin
// ensembles and the transmon bus, and gate evaluation on the two-ensemble
// computational subspace k_i, k_j in {0, 1}.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc {

/// Either the transmon or one ensemble (by index).
struct GateEndpoint {
  bool transmon = false;
  std::size_t ensemble = 0;

  static GateEndpoint bus() { return {true, 0}; }
  static GateEndpoint spins(std::size_t j) { return {false, j}; }
};

struct ParamOverrides {
  std::optional<double> delta;
  std::optional<double> g_c;
  std::optional<double> g_m;
  /// Per-ensemble detuning; entries left empty keep the base value.
  std::vector<std::optional<double>> detunings;

  SystemParams apply(const SystemParams& base) const;
};

struct PulseSegment {
  double duration = 0.0;
  ParamOverrides overrides;
  std::string label;
};

using Schedule = std::vector<PulseSegment>;

struct GateOptions {
  /// Detuning of ensembles that the segment does not address, in units of g_c.
  double park_detuning = 50.0;
  /// Upper bound on g_c * (segment duration).
  double max_scaled_duration = 1e5;
  /// Place the addressed ensemble with dressed_resonance (both levels dressed
  /// to all orders) instead of Delta = delta + g_c^2/delta.
  bool stark_compensation = true;
  double min_dispersive_ratio = 5.0;  // |delta| / g_c
  double max_coupling_ratio = 0.1;    // G / g_c
};

/// Moves one excitation between an ensemble and the transmon (one resonant
/// segment of duration pi / (2 g_eff)); ensemble to ensemble goes through
/// the transmon in two segments.
Schedule transfer_schedule(const SystemParams& params, GateEndpoint source, GateEndpoint target,
                           const GateOptions& options = {});

/// Exchange segment between the transmon and an ensemble parameterized in
/// units of g_eff: the dressed spin level sits detuning_ratio * g_eff above
/// the dressed transmon level and the segment lasts scaled_time / g_eff.
struct ExchangeCalibration {
  double detuning_ratio = 0.0;
  double scaled_time = 0.0;
  /// Average fidelity of the calibrated exchange-oracle unitary.
  double oracle_fidelity = 0.0;
};

enum class GateTarget { identity, sqrt_swap, swap };

std::string to_string(GateTarget target);
GateTarget gate_target_from_string(const std::string& name);
Eigen::Matrix4cd target_unitary(GateTarget target);

/// Two-qubit unitary on {|k_i k_j>} = {00, 01, 10, 11} produced by an ideal
/// transfer i -> transmon, the exchange segment, and the transfer back, with
/// the transmon-ensemble pair treated as a qubit coupled to a harmonic
/// ladder (second-rung coupling ladder_ratio * g_eff).
Eigen::Matrix4cd exchange_oracle_unitary(double detuning_ratio, double scaled_time, double ladder_ratio);

/// Nelder-Mead search for the exchange segment that maximizes the oracle
/// fidelity to `target` up to local phases.
ExchangeCalibration calibrate_exchange(GateTarget target, double ladder_ratio);

/// transfer(i -> transmon), calibrated exchange with ensemble j, transfer(transmon -> i).
Schedule sqrt_swap_schedule(const SystemParams& params, std::size_t ensemble_i, std::size_t ensemble_j,
                            const GateOptions& options = {});
Schedule swap_schedule(const SystemParams& params, std::size_t ensemble_i, std::size_t ensemble_j,
                       const GateOptions& options = {});

/// F = (|Tr(U^dag V)|^2 + d) / (d (d + 1)).
double average_gate_fidelity(const Eigen::MatrixXcd& target, const Eigen::MatrixXcd& realized);

/// Local Z phases (before and after) on each qubit: the compared target is
/// diag(post) * U * diag(pre) with diag(a, b) = diag(1, e^{ib}, e^{ia}, e^{i(a+b)}).
struct LocalPhases {
  std::array<double, 2> pre{};
  std::array<double, 2> post{};

  Eigen::Matrix4cd dress(const Eigen::Matrix4cd& u) const;
};

/// Maximizes |Tr((dressed U)^dag V)| over local phases by multi-start coordinate ascent.
LocalPhases optimize_local_phases(const Eigen::Matrix4cd& target, const Eigen::Matrix4cd& realized);

struct GateReport {
  std::string target;
  /// <x'| V |x> for computational states x, x'.
  Eigen::Matrix4cd realized_unitary = Eigen::Matrix4cd::Zero();
  LocalPhases phases;
  double average_fidelity = 0.0;
  double worst_case_state_fidelity = 0.0;
  double leakage = 0.0;
  double total_duration = 0.0;
  bool dissipative = false;
};

struct EvaluateOptions {
  /// Full-model truncation; the default holds every state two excitations reach.
  SpaceTruncation truncation{2, 2, 2};
  /// Include the collapse channels of the parameters (Lindblad evolution).
  bool dissipative = false;
  std::size_t worst_case_samples = 2000;
  double tolerance = 1e-10;
};

/// Propagates the computational states of ensembles (i, j) through the full
/// model, segment by segment, and compares with the target up to local phases.
GateReport evaluate_gate(const Schedule& schedule, const SystemParams& params, std::size_t ensemble_i,
                         std::size_t ensemble_j, GateTarget target, const EvaluateOptions& options = {});

struct TransferReport {
  /// Excitation left in the target (transmon excited or one spin excitation).
  double target_population = 0.0;
  double source_population = 0.0;
  double total_duration = 0.0;
};

/// Starts with one excitation in `source`, everything else in the ground
/// state, and propagates the ideal (dissipation-free) full model.
TransferReport evaluate_transfer(const Schedule& schedule, const SystemParams& params, GateEndpoint source,
                                 GateEndpoint target, const SpaceTruncation& truncation = {1, 1, 1});

}  // namespace ejc
