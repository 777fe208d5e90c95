#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "ejc/hamiltonian.hpp"

namespace ejc {

struct KrylovOptions {
  /// Bound on the accumulated a-posteriori error of one call, scaled by
  /// |t| / error_span when error_span is set (so a trajectory shares one budget).
  double tolerance = 1e-10;
  double error_span = 0.0;
  int max_dimension = 30;
  std::size_t max_substeps = 10'000'000;
};

struct KrylovStats {
  std::size_t substeps = 0;
  std::size_t matvecs = 0;
  double error_estimate = 0.0;
};

/// exp(-i H t) v by restarted Lanczos with full reorthogonalization. The
/// result has exactly the norm of v up to rounding.
Eigen::VectorXcd krylov_expmv(const SparseOperator& hamiltonian, double t,
                              const Eigen::VectorXcd& v, const KrylovOptions& options = {},
                              KrylovStats* stats = nullptr);

}  // namespace ejc
