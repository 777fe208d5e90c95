#include "ejc/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ejc/errors.hpp"

namespace ejc {

Eigen::VectorXcd krylov_expmv(const SparseOperator& hamiltonian, double t,
                              const Eigen::VectorXcd& v, const KrylovOptions& options,
                              KrylovStats* stats) {
  const auto dim = static_cast<Eigen::Index>(hamiltonian.dimension());
  if (v.size() != dim) throw DomainError("krylov_expmv: vector and operator sizes differ");
  if (t == 0.0 || v.norm() == 0.0) return v;

  const double direction = t > 0.0 ? 1.0 : -1.0;
  const double span = options.error_span > 0.0 ? options.error_span : std::abs(t);
  const double h_norm = std::max(hamiltonian.norm_inf(), 1e-300);
  const Eigen::Index m_max = std::min<Eigen::Index>(options.max_dimension, dim);
  const auto& h = hamiltonian.matrix();

  Eigen::VectorXcd w = v;
  double remaining = std::abs(t);
  double total_error = 0.0;
  std::size_t substeps = 0;
  std::size_t matvecs = 0;

  Eigen::MatrixXcd basis(dim, m_max + 1);
  while (remaining > 0.0) {
    if (++substeps > options.max_substeps)
      throw NumericalError("krylov_expmv: exceeded the substep limit");
    const double beta0 = w.norm();
    basis.col(0) = w / beta0;
    std::vector<double> alpha, beta;
    Eigen::Index m = 0;
    double next_beta = 0.0;
    for (Eigen::Index j = 0; j < m_max; ++j) {
      Eigen::VectorXcd u = h * basis.col(j);
      ++matvecs;
      alpha.push_back(basis.col(j).dot(u).real());
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd proj = basis.leftCols(j + 1).adjoint() * u;
        u -= basis.leftCols(j + 1) * proj;
      }
      m = j + 1;
      next_beta = u.norm();
      if (next_beta <= 1e-13 * h_norm) {
        next_beta = 0.0;  // invariant subspace: the projection is exact
        break;
      }
      if (j + 1 < m_max) {
        beta.push_back(next_beta);
        basis.col(j + 1) = u / next_beta;
      }
    }

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      tri(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
    const Eigen::VectorXd lambda = solver.eigenvalues();
    const Eigen::MatrixXd& q = solver.eigenvectors();
    const Eigen::VectorXd q0 = q.row(0).transpose();

    auto coefficients = [&](double tau) {
      Eigen::VectorXcd phase(m);
      for (Eigen::Index k = 0; k < m; ++k)
        phase(k) = std::polar(q0(k), -direction * tau * lambda(k));
      return Eigen::VectorXcd(q.cast<Complex>() * phase);
    };

    double tau = remaining;
    Eigen::VectorXcd y;
    double err = 0.0;
    for (;;) {
      y = coefficients(tau);
      err = beta0 * next_beta * std::abs(y(m - 1));
      const double allowed = options.tolerance * tau / span;
      if (err <= allowed || next_beta == 0.0) break;
      tau *= std::max(0.1, 0.9 * std::pow(allowed / err, 1.0 / static_cast<double>(m)));
      if (tau < 1e-15 * std::abs(t)) {
        std::ostringstream os;
        os << "krylov_expmv: step size underflow (error estimate " << err << ", Krylov dimension "
           << m << ")";
        throw NumericalError(os.str());
      }
    }
    w = beta0 * (basis.leftCols(m) * y);
    total_error += err;
    remaining = (tau >= remaining) ? 0.0 : remaining - tau;
  }
  if (stats) {
    stats->substeps += substeps;
    stats->matvecs += matvecs;
    stats->error_estimate += total_error;
  }
  return w;
}

}  // namespace ejc
