#pragma once

// Rotating-frame Hamiltonian, collapse channels and the explicitly
// time-dependent interaction-picture generator. Units: H/hbar in the same
// rate units as SystemParams.

#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// max |A - A^dagger| over entries.
double hermiticity_defect(const SparseMatrix& m);

class SparseOperator {
 public:
  SparseOperator() = default;
  /// When `hermitian` is set the matrix is checked against
  /// max|A - A^dagger| < 1e-12 max|A| and NumericalError is thrown otherwise.
  SparseOperator(SparseMatrix matrix, bool hermitian);

  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
  const SparseMatrix& matrix() const { return matrix_; }
  bool is_hermitian() const { return hermitian_; }
  std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
  double max_abs() const;
  /// Induced infinity norm (max absolute row sum).
  double norm_inf() const;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return matrix_ * v; }
  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }
  Eigen::MatrixXcd dense_block(std::span<const std::size_t> indices) const;
  SparseOperator adjoint() const;

  /// Coordinate list: header "dim nnz hermitian", then "row col re im" per entry.
  void write_coo(std::ostream& os) const;
  static SparseOperator read_coo(std::istream& is);

 private:
  SparseMatrix matrix_;
  bool hermitian_ = false;
};

struct CollapseChannel {
  std::string name;
  SparseOperator op;
  double rate = 0.0;
};

struct LindbladModel {
  SparseOperator hamiltonian;
  std::vector<CollapseChannel> collapse_ops;

  void validate() const;
};

struct HamiltonianOptions {
  /// Drop the g_c term, e.g. to model the cavity and spins alone.
  bool transmon_coupling = true;
};

/// H/hbar = -delta |b><b| - sum_j Delta_j k_j + g_c (sigma_ba a + h.c.)
///          + sum_j g_m,j (S+_j a + h.c.)
SparseOperator build_hamiltonian(const SystemParams& params, const EnumeratedBasis& basis,
                                 const HamiltonianOptions& options = {});

/// Hamiltonian plus photon loss (kappa_c), transmon relaxation (gamma_JJ) and
/// collective spin decay S-/sqrt(N_s) (gamma_spin) per ensemble. Zero-rate
/// channels are omitted.
LindbladModel build_collapse_ops(const SystemParams& params, const EnumeratedBasis& basis,
                                 const HamiltonianOptions& options = {});

// Elementary operators on the truncated basis. Matrix elements that would
// leave the basis are dropped.
SparseOperator annihilation_operator(const EnumeratedBasis& basis);
SparseOperator transmon_lowering(const EnumeratedBasis& basis);
/// S-_j with Dicke (or bosonic) matrix elements, not normalized.
SparseOperator collective_lowering(const EnumeratedBasis& basis, std::size_t ensemble,
                                   SpinModel model);

SparseOperator diagonal_operator(const EnumeratedBasis& basis,
                                 double (*value)(const BasisState&));
SparseOperator excitation_number_operator(const EnumeratedBasis& basis);
SparseOperator photon_number_operator(const EnumeratedBasis& basis);
SparseOperator transmon_excited_projector(const EnumeratedBasis& basis);
SparseOperator ensemble_excitation_operator(const EnumeratedBasis& basis, std::size_t ensemble);

/// Interaction-picture generator
/// H(t) = g_c (sigma_ba a e^{-i delta t} + h.c.) + sum_j g_m,j (S+_j a e^{-i Delta_j t} + h.c.).
class InteractionPictureGenerator {
 public:
  InteractionPictureGenerator(const SystemParams& params, const EnumeratedBasis& basis);

  SparseOperator at(double t) const;
  /// H(t) v without assembling H(t).
  Eigen::VectorXcd apply(double t, const Eigen::VectorXcd& v) const;

  struct Term {
    SparseMatrix raising;  // the e^{-i w t} part; its adjoint carries e^{+i w t}
    SparseMatrix lowering;
    double frequency;
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
  std::size_t dim_ = 0;
};

SparseOperator interaction_picture_generator(const SystemParams& params,
                                             const EnumeratedBasis& basis, double t);

}  // namespace ejc
