#include "ejc/hamiltonian.hpp"

#include <cmath>
#include <istream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ejc/errors.hpp"

namespace ejc {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& t) {
  SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(t.begin(), t.end());
  m.prune(Complex(0.0, 0.0));
  return m;
}

void check_ensembles(const SystemParams& params, const EnumeratedBasis& basis) {
  params.validate();
  if (params.ensembles.size() != basis.num_ensembles())
    throw DomainError("params describe " + std::to_string(params.ensembles.size()) +
                      " ensembles but the basis has " + std::to_string(basis.num_ensembles()));
  for (std::size_t j = 0; j < basis.num_ensembles(); ++j)
    if (params.ensembles[j].n_spins != basis.n_spins()[j])
      throw DomainError("ensemble " + std::to_string(j) + ": N_s differs between params and basis");
}

// Triplets of the photon-lowering part of each coupling: sigma_ab a^dagger is the
// adjoint of sigma_ba a, so we only emit the raising direction and mirror.
std::vector<Triplet> transmon_raise_photon_lower(const EnumeratedBasis& basis, double g) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    if (s.transmon != 0 || s.photons == 0) continue;
    BasisState to = s;
    to.transmon = 1;
    to.photons -= 1;
    if (auto r = basis.index_of(to))
      t.emplace_back(static_cast<int>(*r), static_cast<int>(i), g * std::sqrt(double(s.photons)));
  }
  return t;
}

std::vector<Triplet> spin_raise_photon_lower(const EnumeratedBasis& basis, std::size_t j,
                                             std::uint64_t n_spins, double g, SpinModel model) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    if (s.photons == 0) continue;
    BasisState to = s;
    to.k[j] += 1;
    to.photons -= 1;
    auto r = basis.index_of(to);
    if (!r) continue;
    const double amp = g * collective_raising_element(n_spins, s.k[j], model) * std::sqrt(double(s.photons));
    if (amp != 0.0) t.emplace_back(static_cast<int>(*r), static_cast<int>(i), amp);
  }
  return t;
}

void append_with_adjoint(std::vector<Triplet>& out, const std::vector<Triplet>& upper) {
  for (const auto& e : upper) {
    out.push_back(e);
    out.emplace_back(e.col(), e.row(), std::conj(e.value()));
  }
}

}  // namespace

double hermiticity_defect(const SparseMatrix& m) {
  SparseMatrix diff = m - SparseMatrix(m.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

SparseOperator::SparseOperator(SparseMatrix matrix, bool hermitian)
    : matrix_(std::move(matrix)), hermitian_(hermitian) {
  if (matrix_.rows() != matrix_.cols()) throw DomainError("operator must be square");
  matrix_.makeCompressed();
  if (hermitian_) {
    const double defect = hermiticity_defect(matrix_);
    if (defect > 1e-12 * max_abs())
      throw NumericalError("operator flagged Hermitian has max|A - A^dagger| = " +
                           std::to_string(defect));
  }
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (int k = 0; k < matrix_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

double SparseOperator::norm_inf() const {
  double m = 0.0;
  for (int k = 0; k < matrix_.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) row += std::abs(it.value());
    m = std::max(m, row);
  }
  return m;
}

Eigen::MatrixXcd SparseOperator::dense_block(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  std::vector<Eigen::Index> local(dimension(), -1);
  for (Eigen::Index a = 0; a < n; ++a) local[indices[static_cast<std::size_t>(a)]] = a;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (SparseMatrix::InnerIterator it(matrix_, static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)])); it; ++it) {
      const auto b = local[static_cast<std::size_t>(it.col())];
      if (b >= 0) out(a, b) = it.value();
    }
  }
  return out;
}

SparseOperator SparseOperator::adjoint() const {
  return SparseOperator(SparseMatrix(matrix_.adjoint()), hermitian_);
}

void SparseOperator::write_coo(std::ostream& os) const {
  os << dimension() << ' ' << nonzeros() << ' ' << (hermitian_ ? 1 : 0) << '\n';
  os << std::setprecision(17);
  for (int k = 0; k < matrix_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

SparseOperator SparseOperator::read_coo(std::istream& is) {
  std::size_t dim = 0, nnz = 0;
  int herm = 0;
  if (!(is >> dim >> nnz >> herm)) throw DomainError("COO: malformed header");
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t e = 0; e < nnz; ++e) {
    long r = 0, c = 0;
    double re = 0, im = 0;
    if (!(is >> r >> c >> re >> im)) throw DomainError("COO: truncated entry list");
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= dim || static_cast<std::size_t>(c) >= dim)
      throw DomainError("COO: index out of range");
    t.emplace_back(static_cast<int>(r), static_cast<int>(c), Complex(re, im));
  }
  return SparseOperator(from_triplets(dim, t), herm != 0);
}

void LindbladModel::validate() const {
  for (const auto& c : collapse_ops) {
    if (!(c.rate >= 0.0)) throw DomainError("collapse channel '" + c.name + "' has a negative rate");
    if (c.op.dimension() != hamiltonian.dimension())
      throw DomainError("collapse channel '" + c.name + "' dimension does not match H");
  }
}

SparseOperator build_hamiltonian(const SystemParams& params, const EnumeratedBasis& basis,
                                 const HamiltonianOptions& options) {
  check_ensembles(params, basis);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    double e = -params.delta * s.transmon;
    for (std::size_t j = 0; j < s.k.size(); ++j) e -= params.ensembles[j].detuning * s.k[j];
    if (e != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), e);
  }
  if (options.transmon_coupling) append_with_adjoint(t, transmon_raise_photon_lower(basis, params.g_c));
  for (std::size_t j = 0; j < basis.num_ensembles(); ++j)
    append_with_adjoint(t, spin_raise_photon_lower(basis, j, basis.n_spins()[j],
                                                   params.spin_coupling(j), params.spin_model));
  return SparseOperator(from_triplets(basis.size(), t), true);
}

SparseOperator annihilation_operator(const EnumeratedBasis& basis) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    if (s.photons == 0) continue;
    BasisState to = s;
    to.photons -= 1;
    if (auto r = basis.index_of(to))
      t.emplace_back(static_cast<int>(*r), static_cast<int>(i), std::sqrt(double(s.photons)));
  }
  return SparseOperator(from_triplets(basis.size(), t), false);
}

SparseOperator transmon_lowering(const EnumeratedBasis& basis) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    if (s.transmon == 0) continue;
    BasisState to = s;
    to.transmon = 0;
    if (auto r = basis.index_of(to)) t.emplace_back(static_cast<int>(*r), static_cast<int>(i), 1.0);
  }
  return SparseOperator(from_triplets(basis.size(), t), false);
}

SparseOperator collective_lowering(const EnumeratedBasis& basis, std::size_t ensemble,
                                   SpinModel model) {
  if (ensemble >= basis.num_ensembles()) throw DomainError("ensemble index out of range");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    if (s.k[ensemble] == 0) continue;
    BasisState to = s;
    to.k[ensemble] -= 1;
    auto r = basis.index_of(to);
    if (!r) continue;
    const double amp = collective_raising_element(basis.n_spins()[ensemble], to.k[ensemble], model);
    if (amp != 0.0) t.emplace_back(static_cast<int>(*r), static_cast<int>(i), amp);
  }
  return SparseOperator(from_triplets(basis.size(), t), false);
}

SparseOperator diagonal_operator(const EnumeratedBasis& basis, double (*value)(const BasisState&)) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double v = value(basis.state(i));
    if (v != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), v);
  }
  return SparseOperator(from_triplets(basis.size(), t), true);
}

SparseOperator excitation_number_operator(const EnumeratedBasis& basis) {
  return diagonal_operator(basis, [](const BasisState& s) { return double(s.total_excitation()); });
}

SparseOperator photon_number_operator(const EnumeratedBasis& basis) {
  return diagonal_operator(basis, [](const BasisState& s) { return double(s.photons); });
}

SparseOperator transmon_excited_projector(const EnumeratedBasis& basis) {
  return diagonal_operator(basis, [](const BasisState& s) { return double(s.transmon); });
}

SparseOperator ensemble_excitation_operator(const EnumeratedBasis& basis, std::size_t ensemble) {
  if (ensemble >= basis.num_ensembles()) throw DomainError("ensemble index out of range");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const int k = basis.state(i).k[ensemble];
    if (k != 0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), double(k));
  }
  return SparseOperator(from_triplets(basis.size(), t), true);
}

LindbladModel build_collapse_ops(const SystemParams& params, const EnumeratedBasis& basis,
                                 const HamiltonianOptions& options) {
  LindbladModel model{build_hamiltonian(params, basis, options), {}};
  if (params.kappa_c > 0.0)
    model.collapse_ops.push_back({"photon_loss", annihilation_operator(basis), params.kappa_c});
  if (params.gamma_jj > 0.0)
    model.collapse_ops.push_back({"transmon_relaxation", transmon_lowering(basis), params.gamma_jj});
  if (params.gamma_spin > 0.0) {
    for (std::size_t j = 0; j < basis.num_ensembles(); ++j) {
      // Normalized so that <G| L |E> = 1: the single-excitation state decays at gamma_spin.
      SparseMatrix l = collective_lowering(basis, j, params.spin_model).matrix();
      l /= std::sqrt(static_cast<double>(basis.n_spins()[j]));
      model.collapse_ops.push_back(
          {"spin_decay_" + std::to_string(j), SparseOperator(std::move(l), false), params.gamma_spin});
    }
  }
  model.validate();
  return model;
}

InteractionPictureGenerator::InteractionPictureGenerator(const SystemParams& params,
                                                         const EnumeratedBasis& basis)
    : dim_(basis.size()) {
  check_ensembles(params, basis);
  auto add = [&](const std::vector<Triplet>& raise, double freq) {
    SparseMatrix r = from_triplets(dim_, raise);
    r.makeCompressed();
    SparseMatrix l = SparseMatrix(r.adjoint());
    terms_.push_back({std::move(r), std::move(l), freq});
  };
  add(transmon_raise_photon_lower(basis, params.g_c), params.delta);
  for (std::size_t j = 0; j < basis.num_ensembles(); ++j)
    add(spin_raise_photon_lower(basis, j, basis.n_spins()[j], params.spin_coupling(j),
                                params.spin_model),
        params.ensembles[j].detuning);
}

SparseOperator InteractionPictureGenerator::at(double t) const {
  SparseMatrix h(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& term : terms_) {
    const Complex phase = std::polar(1.0, -term.frequency * t);
    h += phase * term.raising + std::conj(phase) * term.lowering;
  }
  return SparseOperator(std::move(h), true);
}

Eigen::VectorXcd InteractionPictureGenerator::apply(double t, const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& term : terms_) {
    const Complex phase = std::polar(1.0, -term.frequency * t);
    out += phase * (term.raising * v) + std::conj(phase) * (term.lowering * v);
  }
  return out;
}

SparseOperator interaction_picture_generator(const SystemParams& params,
                                             const EnumeratedBasis& basis, double t) {
  return InteractionPictureGenerator(params, basis).at(t);
}

}  // namespace ejc
