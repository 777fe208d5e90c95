#pragma once

// Block-wise dense eigensolves, analytic Jaynes-Cummings ladder, anharmonicity
// metrics and extraction of the embedded JC hybrid doublet.

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ejc/hamiltonian.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc {

struct BlockSpectrum {
  int excitation = 0;
  std::vector<std::size_t> indices;  // basis indices of the block
  Eigen::VectorXd values;            // ascending
  Eigen::MatrixXcd vectors;          // block-local columns; empty unless requested
};

struct Spectrum {
  std::size_t dimension = 0;
  /// All eigenvalues sorted ascending, with the excitation block of each.
  std::vector<double> eigenvalues;
  std::vector<int> block_tags;
  std::vector<BlockSpectrum> blocks;
  double max_residual = 0.0;

  const BlockSpectrum& block(int excitation) const;
  bool has_block(int excitation) const;
  double block_min(int excitation) const;
  bool has_vectors() const;
  /// Eigenvector `j` of the given block embedded in the full basis.
  Eigen::VectorXcd eigenvector(int excitation, std::size_t j) const;
};

/// Dense Hermitian eigensolve of every excitation block of H. Throws
/// NumericalError if H couples different blocks or if any eigenpair misses the
/// residual bound ||Hv - Ev|| <= 1e-9 ||H||.
Spectrum eigensystem(const SparseOperator& hamiltonian, const EnumeratedBasis& basis,
                     bool want_vectors);

/// Dressed energies of the n-excitation JC manifold in the frame rotating at
/// the cavity frequency: -delta/2 -+ sqrt(delta^2/4 + n g_c^2).
std::pair<double, double> jc_ladder(double g_c, double delta, int n);

struct Anharmonicity {
  /// [E(2) - E(1)] - [E(1) - E(0)] with E(n) the lowest level of block n.
  double ladder_step = 0.0;
  /// |E(2) - E(1)|: the gap between the lowest states of the one- and
  /// two-excitation manifolds once the harmonic reference is removed.
  double manifold_gap = 0.0;
};

Anharmonicity anharmonicity(const Spectrum& spectrum);

struct EmbeddedJcReport {
  std::size_t hybrid_ground_index = 0;  // into Spectrum::eigenvalues
  std::array<std::size_t, 2> hybrid_excited_indices{};
  double lower_energy = 0.0;
  double upper_energy = 0.0;
  double splitting = 0.0;
  double collective_coupling = 0.0;
  /// |<E,a,0|1>|, |<G,b,0|1>|, |<G,a,1|1>| for the lower doublet member.
  std::array<double, 3> coefficient_magnitudes{};
  std::array<Complex, 3> coefficients{};
  /// Population of the lower doublet member outside span{|E,a,0>,|G,b,0>,|G,a,1>}.
  double leakage = 0.0;
  /// Population on the polariton the spins are not resonant with.
  double off_resonant_population = 0.0;
  /// Embedded-ladder anharmonicity from blocks 0-2; absent if block 2 is missing.
  std::optional<double> anharmonicity;
  Eigen::VectorXcd hybrid_excited_state;
  Eigen::VectorXcd hybrid_ground_state;
};

/// Locates the hybrid doublet formed by |E,a,0> and the polariton of the
/// first ensemble's resonance, by overlap with those two bare vectors.
EmbeddedJcReport embedded_jc_analysis(const SystemParams& params, const EnumeratedBasis& basis);

struct ConvergenceRow {
  SpaceTruncation truncation;
  std::size_t dimension = 0;
  double doublet_lower = 0.0;
  double doublet_upper = 0.0;
  std::optional<double> second_manifold_min;
  /// Largest change of the tracked levels against the previous row.
  std::optional<double> change;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool converged = false;
  bool monotone = true;
};

ConvergenceTable convergence_scan(const SystemParams& params,
                                  const std::vector<SpaceTruncation>& truncations);

}  // namespace ejc
