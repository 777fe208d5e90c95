#include "ejc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "ejc/errors.hpp"
#include "ejc/krylov.hpp"

namespace ejc {

namespace odeint = boost::numeric::odeint;

namespace {

using StateVector = std::vector<Complex>;

void check_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) throw DomainError("time grid is empty");
  if (t_grid.front() < 0.0) throw DomainError("time grid must start at t >= 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("time grid must be strictly ascending");
}

double expectation(const SparseOperator& op, const Eigen::VectorXcd& psi) {
  return psi.dot(op.matrix() * psi).real();
}

double expectation(const SparseOperator& op, const Eigen::MatrixXcd& rho) {
  return (op.matrix() * rho).trace().real();
}

// Right-hand side of the master equation in "effective Hamiltonian" form:
// -i (H_eff X - X H_eff^dag) + sum gamma L X L^dag with H_eff = H - i/2 sum gamma L^dag L.
class LindbladRhs {
 public:
  explicit LindbladRhs(const LindbladModel& model) : dim_(static_cast<Eigen::Index>(model.hamiltonian.dimension())) {
    SparseMatrix damping(dim_, dim_);
    for (const auto& c : model.collapse_ops) {
      if (c.rate == 0.0) continue;
      jumps_.push_back(std::sqrt(c.rate) * c.op.matrix());
      damping += c.rate * SparseMatrix(c.op.matrix().adjoint() * c.op.matrix());
    }
    h_eff_ = model.hamiltonian.matrix() - Complex(0.0, 0.5) * damping;
    h_eff_.makeCompressed();
  }

  void operator()(const StateVector& x, StateVector& dxdt, double /*t*/) const {
    Eigen::Map<const Eigen::MatrixXcd> rho(x.data(), dim_, dim_);
    Eigen::Map<Eigen::MatrixXcd> out(dxdt.data(), dim_, dim_);
    out.noalias() = Complex(0.0, -1.0) * (h_eff_ * rho);
    // X H_eff^dag = (H_eff X^dag)^dag
    Eigen::MatrixXcd right = h_eff_ * rho.adjoint();
    out += Complex(0.0, 1.0) * right.adjoint();
    for (const auto& l : jumps_) {
      Eigen::MatrixXcd lx = l * rho;
      Eigen::MatrixXcd llx = l * lx.adjoint();
      out += llx.adjoint();
    }
  }

 private:
  Eigen::Index dim_;
  SparseMatrix h_eff_;
  std::vector<SparseMatrix> jumps_;
};

StateVector to_state(const Eigen::MatrixXcd& m) {
  return StateVector(m.data(), m.data() + m.size());
}

Eigen::MatrixXcd from_state(const StateVector& x, Eigen::Index dim) {
  return Eigen::Map<const Eigen::MatrixXcd>(x.data(), dim, dim);
}

void check_liouvillian_cap(std::size_t dim, const LindbladOptions& options) {
  const double d = static_cast<double>(dim);
  if (d * d * d * d > options.max_liouvillian_entries)
    throw DimensionError("Liouvillian of dimension " + std::to_string(dim) + "^2 exceeds the cap of " +
                         std::to_string(options.max_liouvillian_entries) + " entries");
}

}  // namespace

void check_pure_state(const Eigen::VectorXcd& psi, double t, const TrajectoryTolerances& tol) {
  const double drift = std::abs(psi.norm() - 1.0);
  if (!(drift <= tol.norm)) {
    std::ostringstream os;
    os << "state norm drifted by " << drift << " at t = " << t;
    throw NumericalError(os.str());
  }
}

void check_density_matrix(const Eigen::MatrixXcd& rho, double t, const TrajectoryTolerances& tol) {
  std::ostringstream os;
  const double trace_err = std::abs(rho.trace() - Complex(1.0, 0.0));
  if (!(trace_err <= tol.trace)) {
    os << "density matrix trace deviates from 1 by " << trace_err << " at t = " << t;
    throw NumericalError(os.str());
  }
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (!(herm <= tol.hermiticity)) {
    os << "density matrix non-Hermitian by " << herm << " at t = " << t;
    throw NumericalError(os.str());
  }
  const Eigen::MatrixXcd sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (!(min_eig >= -tol.positivity)) {
    os << "density matrix has eigenvalue " << min_eig << " at t = " << t
       << "; tighten the integrator tolerances";
    throw NumericalError(os.str());
  }
}

std::vector<double> linear_grid(double t_end, std::size_t n_points) {
  if (n_points < 2) throw DomainError("linear_grid: need at least two points");
  if (!(t_end > 0.0)) throw DomainError("linear_grid: t_end must be positive");
  std::vector<double> t(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    t[i] = t_end * static_cast<double>(i) / static_cast<double>(n_points - 1);
  return t;
}

Trajectory evolve_unitary(const SparseOperator& hamiltonian, const Eigen::VectorXcd& psi0,
                          std::span<const double> t_grid, std::span<const Observable> observables,
                          const UnitaryOptions& options) {
  check_grid(t_grid);
  if (static_cast<std::size_t>(psi0.size()) != hamiltonian.dimension())
    throw DomainError("evolve_unitary: state and Hamiltonian dimensions differ");
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw DomainError("evolve_unitary: initial state is not normalized");

  KrylovOptions kopt;
  kopt.tolerance = options.tolerance;
  kopt.max_dimension = options.krylov_dimension;
  kopt.error_span = std::max(t_grid.back(), 1e-300);

  Trajectory traj;
  traj.times.assign(t_grid.begin(), t_grid.end());
  Eigen::VectorXcd psi = psi0;
  double t_prev = 0.0;
  for (double t : t_grid) {
    psi = krylov_expmv(hamiltonian, t - t_prev, psi, kopt);
    t_prev = t;
    check_pure_state(psi, t);
    traj.observables["norm"].push_back(psi.norm());
    for (const auto& o : observables) traj.observables[o.name].push_back(expectation(o.op, psi));
    if (options.keep_states) traj.pure_states.push_back(psi);
  }
  return traj;
}

Trajectory evolve_lindblad(const LindbladModel& model, const Eigen::MatrixXcd& rho0,
                           std::span<const double> t_grid, std::span<const Observable> observables,
                           const LindbladOptions& options) {
  model.validate();
  check_grid(t_grid);
  const auto dim = static_cast<Eigen::Index>(model.hamiltonian.dimension());
  if (rho0.rows() != dim || rho0.cols() != dim)
    throw DomainError("evolve_lindblad: density matrix and model dimensions differ");
  check_liouvillian_cap(model.hamiltonian.dimension(), options);
  check_density_matrix(rho0, 0.0);

  LindbladRhs rhs(model);
  StateVector x = to_state(rho0);
  Trajectory traj;
  std::vector<double> times;
  if (t_grid.front() > 0.0) times.push_back(0.0);
  times.insert(times.end(), t_grid.begin(), t_grid.end());
  const bool skip_first = t_grid.front() > 0.0;

  const double scale = std::max(1.0, model.hamiltonian.norm_inf());
  auto stepper = odeint::make_dense_output(options.abs_tol, options.rel_tol,
                                           odeint::runge_kutta_dopri5<StateVector>());
  std::size_t seen = 0;
  odeint::integrate_times(stepper, std::cref(rhs), x, times.begin(), times.end(), 0.1 / scale,
                          [&](const StateVector& s, double t) {
                            if (skip_first && seen++ == 0) return;
                            Eigen::MatrixXcd rho = from_state(s, dim);
                            if (options.check_contracts) check_density_matrix(rho, t);
                            traj.times.push_back(t);
                            traj.observables["trace"].push_back(rho.trace().real());
                            for (const auto& o : observables)
                              traj.observables[o.name].push_back(expectation(o.op, rho));
                            if (options.keep_states) traj.density_matrices.push_back(std::move(rho));
                          });
  return traj;
}

Eigen::MatrixXcd liouvillian(const LindbladModel& model) {
  model.validate();
  const auto dim = static_cast<Eigen::Index>(model.hamiltonian.dimension());
  Eigen::MatrixXcd h_eff = model.hamiltonian.dense();
  std::vector<Eigen::MatrixXcd> jumps;
  for (const auto& c : model.collapse_ops) {
    if (c.rate == 0.0) continue;
    Eigen::MatrixXcd l = std::sqrt(c.rate) * c.op.dense();
    h_eff -= Complex(0.0, 0.5) * (l.adjoint() * l);
    jumps.push_back(std::move(l));
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  // vec(A X B) = (B^T kron A) vec(X)
  Eigen::MatrixXcd out = Complex(0.0, -1.0) * Eigen::kroneckerProduct(id, h_eff).eval();
  out += Complex(0.0, 1.0) * Eigen::kroneckerProduct(h_eff.conjugate(), id).eval();
  for (const auto& l : jumps) out += Eigen::kroneckerProduct(l.conjugate(), l).eval();
  return out;
}

Eigen::MatrixXcd lindblad_propagator(const LindbladModel& model, double duration, const LindbladOptions& options) {
  if (duration < 0.0) throw DomainError("lindblad_propagator: negative duration");
  check_liouvillian_cap(model.hamiltonian.dimension(), options);
  const Eigen::MatrixXcd generator = liouvillian(model) * duration;
  Eigen::MatrixXcd p = generator.exp();
  if (!p.allFinite()) throw NumericalError("lindblad_propagator: matrix exponential is not finite");
  return p;
}

Eigen::MatrixXcd propagate_lindblad(const LindbladModel& model, const Eigen::MatrixXcd& x0,
                                    double duration, const LindbladOptions& options) {
  model.validate();
  if (duration < 0.0) throw DomainError("propagate_lindblad: negative duration");
  const auto dim = static_cast<Eigen::Index>(model.hamiltonian.dimension());
  if (x0.rows() != dim || x0.cols() != dim) throw DomainError("propagate_lindblad: dimension mismatch");
  check_liouvillian_cap(model.hamiltonian.dimension(), options);
  if (duration == 0.0) return x0;
  if (model.hamiltonian.dimension() <= options.dense_propagator_max_dim) {
    const Eigen::MatrixXcd p = lindblad_propagator(model, duration, options);
    const Eigen::VectorXcd out = p * Eigen::Map<const Eigen::VectorXcd>(x0.data(), dim * dim);
    return Eigen::Map<const Eigen::MatrixXcd>(out.data(), dim, dim);
  }
  LindbladRhs rhs(model);
  StateVector x = to_state(x0);
  const double scale = std::max(1.0, model.hamiltonian.norm_inf());
  odeint::integrate_adaptive(
      odeint::make_controlled(options.abs_tol, options.rel_tol, odeint::runge_kutta_dopri5<StateVector>()),
      std::cref(rhs), x, 0.0, duration, 0.1 / scale);
  return from_state(x, dim);
}

Trajectory evolve_interaction_picture(const InteractionPictureGenerator& generator,
                                      const Eigen::VectorXcd& psi0, std::span<const double> t_grid,
                                      double tolerance) {
  check_grid(t_grid);
  const auto dim = psi0.size();
  auto rhs = [&](const StateVector& x, StateVector& dxdt, double t) {
    Eigen::Map<const Eigen::VectorXcd> psi(x.data(), dim);
    Eigen::Map<Eigen::VectorXcd> out(dxdt.data(), dim);
    out = Complex(0.0, -1.0) * generator.apply(t, psi);
  };
  StateVector x(psi0.data(), psi0.data() + dim);
  std::vector<double> times;
  const bool skip_first = t_grid.front() > 0.0;
  if (skip_first) times.push_back(0.0);
  times.insert(times.end(), t_grid.begin(), t_grid.end());

  Trajectory traj;
  std::size_t seen = 0;
  auto stepper = odeint::make_dense_output(tolerance, tolerance, odeint::runge_kutta_dopri5<StateVector>());
  odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3,
                          [&](const StateVector& s, double t) {
                            if (skip_first && seen++ == 0) return;
                            Eigen::VectorXcd psi = Eigen::Map<const Eigen::VectorXcd>(s.data(), dim);
                            traj.times.push_back(t);
                            traj.observables["norm"].push_back(psi.norm());
                            traj.pure_states.push_back(std::move(psi));
                          });
  return traj;
}

FrameEquivalenceReport frame_equivalence(const SystemParams& params, const EnumeratedBasis& basis,
                                         const Eigen::VectorXcd& psi0, double t_end,
                                         std::size_t n_points) {
  if (t_end < 0.0) throw DomainError("frame_equivalence: t_end must be non-negative");
  if (t_end == 0.0) return {};
  const auto grid = linear_grid(t_end, n_points);
  const SparseOperator h = build_hamiltonian(params, basis);
  const Trajectory rot = evolve_unitary(h, psi0, grid, {}, {1e-12, 30, true});
  const InteractionPictureGenerator gen(params, basis);
  const Trajectory ip = evolve_interaction_picture(gen, psi0, grid, 1e-12);

  // Diagonal part H0 of the rotating-frame Hamiltonian generates the frame map.
  Eigen::VectorXd h0(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    double e = -params.delta * s.transmon;
    for (std::size_t j = 0; j < s.k.size(); ++j) e -= params.ensembles[j].detuning * s.k[j];
    h0(static_cast<Eigen::Index>(i)) = e;
  }

  FrameEquivalenceReport r;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const auto& a = rot.pure_states[n];
    const auto& b = ip.pure_states[n];
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      r.max_population_deviation = std::max(r.max_population_deviation, std::abs(std::norm(a(i)) - std::norm(b(i))));
      const Complex mapped = std::polar(1.0, h0(i) * grid[n]) * a(i);
      r.max_amplitude_deviation = std::max(r.max_amplitude_deviation, std::abs(mapped - b(i)));
    }
  }
  return r;
}

FitResult fit_decay(std::span<const double> series, std::span<const double> t_grid) {
  if (series.size() != t_grid.size()) throw DomainError("fit_decay: series and grid lengths differ");
  if (series.size() < 10) throw DomainError("fit_decay: need at least 10 points");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("fit_decay: time grid must be ascending");
  for (double y : series)
    if (!std::isfinite(y)) throw DomainError("fit_decay: series contains non-finite values");

  const std::size_t n = series.size();
  const double t0 = t_grid.front();
  const double span = t_grid.back() - t0;
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  const double magnitude = std::max(std::abs(*lo_it), std::abs(*hi_it));

  FitResult constant{0.0, 0.0, mean, 0.0};
  {
    double ss = 0.0;
    for (double y : series) ss += (y - mean) * (y - mean);
    constant.rms_residual = std::sqrt(ss / static_cast<double>(n));
  }
  if (*hi_it - *lo_it <= 1e-14 * std::max(magnitude, 1e-300)) return constant;

  // Variable projection: for fixed rate, amplitude and offset are linear.
  auto solve = [&](double rate) {
    double see = 0, se = 0, sy = 0, sey = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-rate * (t_grid[i] - t0));
      see += e * e;
      se += e;
      sy += series[i];
      sey += e * series[i];
    }
    const double nn = static_cast<double>(n);
    const double det = see * nn - se * se;
    FitResult f;
    f.rate = rate;
    if (std::abs(det) <= 1e-14 * see * nn) {
      f.amplitude = 0.0;
      f.offset = sy / nn;
    } else {
      f.amplitude = (sey * nn - se * sy) / det;
      f.offset = (see * sy - se * sey) / det;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = series[i] - (f.amplitude * std::exp(-rate * (t_grid[i] - t0)) + f.offset);
      ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / nn);
    return f;
  };

  const double log_lo = std::log(1e-4 / span);
  const double log_hi = std::log(1e3 / span);
  constexpr int kScan = 281;
  std::vector<double> history(kScan);
  int best = 0;
  for (int i = 0; i < kScan; ++i) {
    const double lg = log_lo + (log_hi - log_lo) * i / (kScan - 1);
    history[static_cast<std::size_t>(i)] = solve(std::exp(lg)).rms_residual;
    if (history[static_cast<std::size_t>(i)] < history[static_cast<std::size_t>(best)]) best = i;
  }
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "fit_decay: " << why << "; rms residual history:";
    for (int i = 0; i < kScan; i += 20) os << ' ' << history[static_cast<std::size_t>(i)];
    throw NumericalError(os.str());
  };
  if (best == kScan - 1) fail("decay faster than the sampling resolves");
  if (best == 0) {
    if (constant.rms_residual <= history[0] * (1.0 + 1e-9)) return constant;
    fail("decay slower than the record length resolves");
  }
  const double step = (log_hi - log_lo) / (kScan - 1);
  const double a = log_lo + (best - 1) * step;
  const double b = log_lo + (best + 1) * step;
  const auto [lg, _] = boost::math::tools::brent_find_minima(
      [&](double x) { return solve(std::exp(x)).rms_residual; }, a, b, 52);
  FitResult f = solve(std::exp(lg));
  if (constant.rms_residual <= f.rms_residual) return constant;
  return f;
}

CoolingResult cooling_simulation(const SystemParams& params, int initial_k,
                                 std::span<const double> t_grid) {
  params.validate();
  if (initial_k < 1) throw DomainError("cooling_simulation: initial_k must be >= 1");
  if (!(params.kappa_c > 0.0)) throw DomainError("cooling_simulation: kappa_c must be positive");
  if (params.ensembles.front().detuning != 0.0)
    throw DomainError("cooling_simulation: the ensemble must be resonant with the cavity (detuning 0)");

  std::vector<std::uint64_t> n_spins;
  for (const auto& e : params.ensembles) n_spins.push_back(e.n_spins);
  const SpaceTruncation trunc{initial_k, initial_k, initial_k};
  const EnumeratedBasis basis(trunc, n_spins);
  const LindbladModel model = build_collapse_ops(params, basis, {.transmon_coupling = false});

  BasisState start{0, 0, std::vector<int>(n_spins.size(), 0)};
  start.k[0] = initial_k;
  const std::size_t i0 = basis.require_index(start);
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.size()),
                                                 static_cast<Eigen::Index>(basis.size()));
  rho0(static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(i0)) = 1.0;

  const std::vector<Observable> obs{{"spin_excitation", ensemble_excitation_operator(basis, 0)},
                                    {"photon_number", photon_number_operator(basis)}};
  CoolingResult out;
  const double G = params.collective_coupling(0);
  out.purcell_estimate = 4.0 * G * G / params.kappa_c;
  if (params.kappa_c < 2.0 * G)
    out.warnings.push_back("kappa_c < 2G: not in the overdamped regime, the Purcell estimate does not apply");
  out.trajectory = evolve_lindblad(model, rho0, t_grid, obs, {.keep_states = false});
  out.fit = fit_decay(out.trajectory.observables.at("spin_excitation"), out.trajectory.times);
  return out;
}

}  // namespace ejc
