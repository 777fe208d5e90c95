#pragma once

// Subcommands of the embedded-jc tool. Each command computes its complete
// output in memory; files are written only once everything succeeded.

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "output.hpp"

namespace ejc::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCap = 3;
inline constexpr int kExitNumerical = 4;

std::string version_string();

/// 2 for configuration/domain errors, 3 for dimension caps, 4 for numerical failures.
int exit_code_for(const std::exception& e);

// Reports shared by the single commands and the sweep.
Json estimate_report(const RunConfig& cfg);
Json regime_report(const RunConfig& cfg);
Json spectrum_report(const RunConfig& cfg, std::string* eigenvalue_csv);
Json gate_report(const RunConfig& cfg);
/// Ordered state labels of the configured full basis.
Json basis_dump(const RunConfig& cfg);

OutputBundle cmd_estimate(const RunConfig& cfg);
OutputBundle cmd_spectrum(const RunConfig& cfg);
OutputBundle cmd_dynamics(const RunConfig& cfg);
OutputBundle cmd_gate(const RunConfig& cfg);

struct SweepOptions {
  std::filesystem::path out_dir;
  /// Stop (without writing the CSV) once this many new points are done.
  std::optional<std::size_t> stop_after;
};

/// Runs the grid, appending finished rows to `sweep.manifest` in out_dir and
/// skipping rows already recorded there. Returns sweep.csv and its sidecar
/// unless stopped early.
OutputBundle cmd_sweep(const RunConfig& cfg, const SweepOptions& options);

/// Worker count: hardware concurrency, capped by EMBEDDED_JC_THREADS and `jobs`.
std::size_t worker_count(std::size_t jobs);

/// Entry point shared by the executable and the tests.
int run_cli(const std::vector<std::string>& args);

}  // namespace ejc::app
