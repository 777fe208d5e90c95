#pragma once

// Unitary and Lindblad propagation, observables, decay fits, the
// rotating-frame / interaction-picture cross-check and cavity-assisted
// cooling of the collective spin excitation.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ejc/hamiltonian.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc {

struct Observable {
  std::string name;
  SparseOperator op;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> pure_states;
  std::vector<Eigen::MatrixXcd> density_matrices;
  std::map<std::string, std::vector<double>> observables;

  bool is_pure() const { return !pure_states.empty(); }
};

struct TrajectoryTolerances {
  double norm = 1e-9;
  double trace = 1e-8;
  double hermiticity = 1e-10;
  double positivity = 1e-8;
};

/// Throws NumericalError naming the first violated contract.
void check_pure_state(const Eigen::VectorXcd& psi, double t, const TrajectoryTolerances& tol = {});
void check_density_matrix(const Eigen::MatrixXcd& rho, double t, const TrajectoryTolerances& tol = {});

struct UnitaryOptions {
  double tolerance = 1e-10;
  int krylov_dimension = 30;
  bool keep_states = true;
};

/// psi(t) = exp(-iHt) psi0 at each (ascending) grid time, starting from t = 0.
/// Records <O> for every observable plus "norm".
Trajectory evolve_unitary(const SparseOperator& hamiltonian, const Eigen::VectorXcd& psi0,
                          std::span<const double> t_grid, std::span<const Observable> observables = {},
                          const UnitaryOptions& options = {});

struct LindbladOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  bool check_contracts = true;
  bool keep_states = true;
  /// Cap on d^4, the size of the Liouvillian as a dense matrix.
  double max_liouvillian_entries = 4e6;
  /// propagate_lindblad exponentiates the dense Liouvillian up to this
  /// Hilbert-space dimension and integrates above it.
  std::size_t dense_propagator_max_dim = 32;
};

/// drho/dt = -i[H, rho] + sum_k gamma_k (L rho L^dag - {L^dag L, rho}/2).
Trajectory evolve_lindblad(const LindbladModel& model, const Eigen::MatrixXcd& rho0,
                           std::span<const double> t_grid, std::span<const Observable> observables = {},
                           const LindbladOptions& options = {});

/// Dense Liouvillian acting on column-major vec(rho).
Eigen::MatrixXcd liouvillian(const LindbladModel& model);

/// exp(L t) for the dense Liouvillian (scaling and squaring).
Eigen::MatrixXcd lindblad_propagator(const LindbladModel& model, double duration,
                                     const LindbladOptions& options = {});

/// Applies the Lindblad flow for `duration` to an arbitrary (not necessarily
/// Hermitian) operator. Used for process reconstruction.
Eigen::MatrixXcd propagate_lindblad(const LindbladModel& model, const Eigen::MatrixXcd& x,
                                    double duration, const LindbladOptions& options = {});

/// Solves i dpsi/dt = H(t) psi for the interaction-picture generator with an
/// adaptive Dormand-Prince integrator.
Trajectory evolve_interaction_picture(const InteractionPictureGenerator& generator,
                                      const Eigen::VectorXcd& psi0, std::span<const double> t_grid,
                                      double tolerance = 1e-12);

struct FrameEquivalenceReport {
  double max_population_deviation = 0.0;
  /// After mapping the rotating-frame state with exp(i H0 t).
  double max_amplitude_deviation = 0.0;
};

/// Propagates psi0 in the rotating frame (Krylov) and in the interaction
/// picture (time-dependent integrator) and compares the two.
FrameEquivalenceReport frame_equivalence(const SystemParams& params, const EnumeratedBasis& basis,
                                         const Eigen::VectorXcd& psi0, double t_end,
                                         std::size_t n_points = 201);

struct FitResult {
  double rate = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares fit of A exp(-rate t) + C.
FitResult fit_decay(std::span<const double> series, std::span<const double> t_grid);

struct CoolingResult {
  Trajectory trajectory;
  FitResult fit;
  double purcell_estimate = 0.0;
  std::vector<std::string> warnings;
};

/// Decay of `initial_k` collective excitations of the first ensemble through
/// the lossy cavity, transmon decoupled. Requires the spins resonant with the
/// cavity (detuning 0) and kappa_c > 0.
CoolingResult cooling_simulation(const SystemParams& params, int initial_k,
                                 std::span<const double> t_grid);

/// Uniform grid of n points on [0, t_end].
std::vector<double> linear_grid(double t_end, std::size_t n_points);

}  // namespace ejc
