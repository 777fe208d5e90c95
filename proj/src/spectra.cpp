#include "ejc/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ejc/errors.hpp"

namespace ejc {

const BlockSpectrum& Spectrum::block(int excitation) const {
  for (const auto& b : blocks)
    if (b.excitation == excitation) return b;
  throw DomainError("spectrum has no block with " + std::to_string(excitation) + " excitations");
}

bool Spectrum::has_block(int excitation) const {
  return std::any_of(blocks.begin(), blocks.end(),
                     [&](const BlockSpectrum& b) { return b.excitation == excitation; });
}

double Spectrum::block_min(int excitation) const { return block(excitation).values(0); }

bool Spectrum::has_vectors() const {
  return !blocks.empty() && blocks.front().vectors.size() > 0;
}

Eigen::VectorXcd Spectrum::eigenvector(int excitation, std::size_t j) const {
  const auto& b = block(excitation);
  if (b.vectors.size() == 0) throw DomainError("spectrum was computed without eigenvectors");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dimension));
  for (std::size_t a = 0; a < b.indices.size(); ++a)
    v(static_cast<Eigen::Index>(b.indices[a])) = b.vectors(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
  return v;
}

Spectrum eigensystem(const SparseOperator& hamiltonian, const EnumeratedBasis& basis,
                     bool want_vectors) {
  if (hamiltonian.dimension() != basis.size())
    throw DomainError("eigensystem: operator and basis dimensions differ");
  if (!hamiltonian.is_hermitian()) throw DomainError("eigensystem: operator is not flagged Hermitian");

  const auto& m = hamiltonian.matrix();
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (basis.block_of(static_cast<std::size_t>(it.row())) != basis.block_of(static_cast<std::size_t>(it.col())))
        throw NumericalError("eigensystem: operator couples different excitation blocks");

  const double scale = std::max(hamiltonian.norm_inf(), std::numeric_limits<double>::min());
  Spectrum spec;
  spec.dimension = basis.size();
  std::vector<std::pair<double, int>> flat;
  double worst = 0.0;

  for (std::size_t n = 0; n < basis.blocks().size(); ++n) {
    const auto& idx = basis.blocks()[n];
    if (idx.empty()) continue;
    const Eigen::MatrixXcd h = hamiltonian.dense_block(idx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
      throw NumericalError("eigensystem: dense solve failed in block " + std::to_string(n));
    BlockSpectrum b;
    b.excitation = static_cast<int>(n);
    b.indices = idx;
    b.values = solver.eigenvalues();
    const Eigen::MatrixXcd& vecs = solver.eigenvectors();
    for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
      const double res = (h * vecs.col(j) - b.values(j) * vecs.col(j)).norm();
      worst = std::max(worst, res);
      flat.emplace_back(b.values(j), static_cast<int>(n));
    }
    if (want_vectors) b.vectors = vecs;
    spec.blocks.push_back(std::move(b));
  }
  spec.max_residual = worst;
  if (worst > 1e-9 * scale) {
    std::ostringstream os;
    os << "eigensystem: worst residual " << worst << " exceeds 1e-9 * ||H|| = " << 1e-9 * scale;
    throw NumericalError(os.str());
  }

  std::stable_sort(flat.begin(), flat.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  spec.eigenvalues.reserve(flat.size());
  spec.block_tags.reserve(flat.size());
  for (const auto& [e, n] : flat) {
    spec.eigenvalues.push_back(e);
    spec.block_tags.push_back(n);
  }
  return spec;
}

std::pair<double, double> jc_ladder(double g_c, double delta, int n) {
  if (n < 1) throw DomainError("jc_ladder: manifold index must be >= 1");
  const double r = std::sqrt(0.25 * delta * delta + n * g_c * g_c);
  return {-0.5 * delta - r, -0.5 * delta + r};
}

Anharmonicity anharmonicity(const Spectrum& spectrum) {
  for (int n = 0; n <= 2; ++n)
    if (!spectrum.has_block(n))
      throw DomainError("anharmonicity: spectrum lacks the " + std::to_string(n) + "-excitation block");
  const double e0 = spectrum.block_min(0);
  const double e1 = spectrum.block_min(1);
  const double e2 = spectrum.block_min(2);
  return {(e2 - e1) - (e1 - e0), std::abs(e2 - e1)};
}

namespace {

// Position of an eigenvalue of `block` in the globally sorted list.
std::size_t flat_index(const Spectrum& spec, int block, double value) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    if (spec.block_tags[i] != block) continue;
    const double d = std::abs(spec.eigenvalues[i] - value);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

EmbeddedJcReport embedded_jc_analysis(const SystemParams& params, const EnumeratedBasis& basis) {
  const SparseOperator h = build_hamiltonian(params, basis);
  const Spectrum spec = eigensystem(h, basis, true);
  if (!spec.has_block(1)) throw DomainError("embedded_jc_analysis: basis has no one-excitation block");

  const std::size_t ne = basis.num_ensembles();
  BasisState spin_state{0, 0, std::vector<int>(ne, 0)};
  spin_state.k[0] = 1;
  const BasisState b0{1, 0, std::vector<int>(ne, 0)};
  const BasisState a1{0, 1, std::vector<int>(ne, 0)};
  const std::size_t i_spin = basis.require_index(spin_state);
  const std::size_t i_b0 = basis.require_index(b0);
  const std::size_t i_a1 = basis.require_index(a1);

  // Bare JC polaritons of {|a,1>, |b,0>}; the resonant one lies closest to the spin level.
  Eigen::Matrix2d jc;
  jc << 0.0, params.g_c, params.g_c, -params.delta;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> jc_solver(jc);
  const double spin_energy = -params.ensembles[0].detuning;
  const Eigen::Index res = std::abs(jc_solver.eigenvalues()(0) - spin_energy) <=
                                   std::abs(jc_solver.eigenvalues()(1) - spin_energy)
                               ? 0
                               : 1;
  const Eigen::Vector2d p_res = jc_solver.eigenvectors().col(res);
  const Eigen::Vector2d p_off = jc_solver.eigenvectors().col(1 - res);

  const BlockSpectrum& b1 = spec.block(1);
  const Eigen::Index n1 = b1.values.size();
  std::vector<double> weight(static_cast<std::size_t>(n1));
  for (Eigen::Index j = 0; j < n1; ++j) {
    const Eigen::VectorXcd v = spec.eigenvector(1, static_cast<std::size_t>(j));
    const Complex ov = p_res(0) * v(static_cast<Eigen::Index>(i_a1)) + p_res(1) * v(static_cast<Eigen::Index>(i_b0));
    weight[static_cast<std::size_t>(j)] = std::norm(v(static_cast<Eigen::Index>(i_spin))) + std::norm(ov);
  }
  if (n1 < 2) throw NumericalError("embedded_jc_analysis: one-excitation block is too small");
  std::vector<std::size_t> order(static_cast<std::size_t>(n1));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                    [&](std::size_t x, std::size_t y) { return weight[x] > weight[y]; });
  std::size_t lo = std::min(order[0], order[1]);
  std::size_t hi = std::max(order[0], order[1]);
  if (weight[lo] < 0.5 || weight[hi] < 0.5) {
    std::ostringstream os;
    os << "embedded_jc_analysis: hybrid doublet not resolvable (doublet weights " << weight[lo]
       << ", " << weight[hi] << "); G is too large compared with g_c";
    throw NumericalError(os.str());
  }

  EmbeddedJcReport r;
  r.collective_coupling = params.collective_coupling(0);
  r.lower_energy = b1.values(static_cast<Eigen::Index>(lo));
  r.upper_energy = b1.values(static_cast<Eigen::Index>(hi));
  r.splitting = r.upper_energy - r.lower_energy;
  const double floor = 1e-12 * std::max(1.0, h.norm_inf());
  if (r.collective_coupling > 0.0 && r.splitting < floor)
    throw NumericalError("embedded_jc_analysis: doublet splitting is below the numerical floor");

  r.hybrid_ground_index = flat_index(spec, 0, spec.block_min(0));
  r.hybrid_excited_indices = {flat_index(spec, 1, r.lower_energy), flat_index(spec, 1, r.upper_energy)};
  if (r.hybrid_excited_indices[0] == r.hybrid_excited_indices[1]) r.hybrid_excited_indices[1] += 1;

  r.hybrid_excited_state = spec.eigenvector(1, lo);
  r.hybrid_ground_state = spec.eigenvector(0, 0);
  const auto& v = r.hybrid_excited_state;
  r.coefficients = {v(static_cast<Eigen::Index>(i_spin)), v(static_cast<Eigen::Index>(i_b0)), v(static_cast<Eigen::Index>(i_a1))};
  double captured = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    r.coefficient_magnitudes[c] = std::abs(r.coefficients[c]);
    captured += std::norm(r.coefficients[c]);
  }
  r.leakage = std::max(0.0, v.squaredNorm() - captured);
  r.off_resonant_population = std::norm(p_off(0) * v(static_cast<Eigen::Index>(i_a1)) +
                                        p_off(1) * v(static_cast<Eigen::Index>(i_b0)));
  if (spec.has_block(2))
    r.anharmonicity = (spec.block_min(2) - r.lower_energy) - (r.lower_energy - spec.block_min(0));
  return r;
}

ConvergenceTable convergence_scan(const SystemParams& params,
                                  const std::vector<SpaceTruncation>& truncations) {
  if (truncations.size() < 2) throw DomainError("convergence_scan: need at least two truncations");
  std::vector<std::uint64_t> n_spins;
  for (const auto& e : params.ensembles) n_spins.push_back(e.n_spins);

  ConvergenceTable table;
  for (const auto& trunc : truncations) {
    const EnumeratedBasis basis(trunc, n_spins);
    const EmbeddedJcReport rep = embedded_jc_analysis(params, basis);
    ConvergenceRow row;
    row.truncation = trunc;
    row.dimension = basis.size();
    row.doublet_lower = rep.lower_energy;
    row.doublet_upper = rep.upper_energy;
    if (rep.anharmonicity) {
      const Spectrum spec = eigensystem(build_hamiltonian(params, basis), basis, false);
      row.second_manifold_min = spec.block_min(2);
    }
    if (!table.rows.empty()) {
      const auto& prev = table.rows.back();
      double change = std::max(std::abs(row.doublet_lower - prev.doublet_lower),
                               std::abs(row.doublet_upper - prev.doublet_upper));
      if (row.second_manifold_min && prev.second_manifold_min)
        change = std::max(change, std::abs(*row.second_manifold_min - *prev.second_manifold_min));
      else if (row.second_manifold_min.has_value() != prev.second_manifold_min.has_value())
        change = std::numeric_limits<double>::infinity();
      if (prev.change && change > *prev.change) table.monotone = false;
      row.change = change;
    }
    table.rows.push_back(row);
  }
  table.converged = table.rows.back().change && *table.rows.back().change < 1e-8 * params.g_c;
  return table;
}

}  // namespace ejc
