#include "ejc/gates.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <gsl/gsl_multimin.h>

#include "ejc/dynamics.hpp"
#include "ejc/effective.hpp"
#include "ejc/errors.hpp"
#include "ejc/hamiltonian.hpp"
#include "ejc/krylov.hpp"

namespace ejc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kDim = 4;

void check_regime(const SystemParams& p, std::size_t j, const GateOptions& o) {
  const double dispersive = std::abs(p.delta) / p.g_c;
  if (dispersive < o.min_dispersive_ratio) {
    std::ostringstream os;
    os << "dispersive regime violated: |delta|/g_c = " << dispersive << " < " << o.min_dispersive_ratio;
    throw DomainError(os.str());
  }
  const double coupling = p.collective_coupling(j) / p.g_c;
  if (coupling > o.max_coupling_ratio) {
    std::ostringstream os;
    os << "dispersive regime violated: G/g_c = " << coupling << " > " << o.max_coupling_ratio << " for ensemble " << j;
    throw DomainError(os.str());
  }
}

void check_ensemble(const SystemParams& p, std::size_t j) {
  if (j >= p.ensembles.size())
    throw DomainError("ensemble index " + std::to_string(j) + " out of range (" +
                      std::to_string(p.ensembles.size()) + " configured)");
}

ParamOverrides parked(const SystemParams& p, std::size_t addressed, double value, const GateOptions& o) {
  ParamOverrides ov;
  ov.detunings.assign(p.ensembles.size(), std::nullopt);
  for (std::size_t k = 0; k < p.ensembles.size(); ++k)
    ov.detunings[k] = (k == addressed) ? value : o.park_detuning * p.g_c;
  return ov;
}

double checked_duration(double scaled, double g_eff, const SystemParams& p, const GateOptions& o) {
  if (g_eff == 0.0) throw DomainError("effective exchange coupling is zero; the segment would never finish");
  const double t = scaled / std::abs(g_eff);
  if (!(t * p.g_c <= o.max_scaled_duration)) {
    std::ostringstream os;
    os << "segment duration g_c*t = " << t * p.g_c << " exceeds the configured maximum " << o.max_scaled_duration;
    throw DomainError(os.str());
  }
  return t;
}

PulseSegment transfer_segment(const SystemParams& p, std::size_t j, const GateOptions& o, const std::string& label) {
  check_ensemble(p, j);
  check_regime(p, j, o);
  const double G = p.collective_coupling(j);
  const double detuning = o.stark_compensation ? dressed_resonance(p.delta, p.g_c, G) : dispersive_resonance(p.delta, p.g_c);
  const double g_eff = p.g_c * G / detuning;
  return {checked_duration(kPi / 2.0, g_eff, p, o), parked(p, j, detuning, o), label};
}

PulseSegment exchange_segment(const SystemParams& p, std::size_t j, const ExchangeCalibration& c, const GateOptions& o) {
  check_regime(p, j, o);
  const double G = p.collective_coupling(j);
  if (G == 0.0) throw DomainError("effective exchange coupling is zero; the segment would never finish");
  double detuning = o.stark_compensation ? dressed_resonance(p.delta, p.g_c, G) : dispersive_resonance(p.delta, p.g_c);
  double g_eff = p.g_c * G / detuning;
  for (int it = 0; it < 100; ++it) {
    const double offset = c.detuning_ratio * std::abs(g_eff);
    const double next = o.stark_compensation ? dressed_resonance(p.delta, p.g_c, G, offset)
                                             : dispersive_resonance(p.delta, p.g_c) - offset;
    const bool done = std::abs(next - detuning) <= 1e-15 * std::abs(next);
    detuning = next;
    g_eff = p.g_c * G / detuning;
    if (done) break;
  }
  return {checked_duration(c.scaled_time, g_eff, p, o), parked(p, j, detuning, o), "exchange"};
}

Eigen::Matrix2cd expm_2x2(double e1, double e2, double c, double t) {
  Eigen::Matrix2d h;
  h << e1, c, c, e2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  Eigen::Vector2cd ph;
  for (int k = 0; k < 2; ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  const Eigen::Matrix2cd v = es.eigenvectors().cast<Complex>();
  return v * ph.asDiagonal() * v.adjoint();
}

// exp(i phi) with the phase attached to set bits: bit 1 <-> qubit i, bit 0 <-> qubit j.
Complex local_phase(int x, double a, double b) {
  return std::polar(1.0, ((x >> 1) & 1) * a + (x & 1) * b);
}

struct CalibrationContext {
  GateTarget target;
  double ladder_ratio;
};

double calibration_cost(const gsl_vector* x, void* params) {
  const auto* ctx = static_cast<const CalibrationContext*>(params);
  const Eigen::Matrix4cd u = target_unitary(ctx->target);
  const Eigen::Matrix4cd v = exchange_oracle_unitary(gsl_vector_get(x, 0), gsl_vector_get(x, 1), ctx->ladder_ratio);
  const LocalPhases ph = optimize_local_phases(u, v);
  return 1.0 - average_gate_fidelity(ph.dress(u), v);
}

}  // namespace

SystemParams ParamOverrides::apply(const SystemParams& base) const {
  SystemParams p = base;
  if (delta) p.delta = *delta;
  if (g_c) p.g_c = *g_c;
  if (g_m) p.g_m = *g_m;
  if (detunings.size() > p.ensembles.size())
    throw DomainError("segment overrides name more ensembles than are configured");
  for (std::size_t j = 0; j < detunings.size(); ++j)
    if (detunings[j]) p.ensembles[j].detuning = *detunings[j];
  p.validate();
  return p;
}

Schedule transfer_schedule(const SystemParams& params, GateEndpoint source, GateEndpoint target,
                           const GateOptions& options) {
  params.validate();
  if (source.transmon && target.transmon) throw DomainError("transfer: source and target are both the transmon");
  if (!source.transmon && !target.transmon) {
    if (source.ensemble == target.ensemble) throw DomainError("transfer: source and target are the same ensemble");
    return {transfer_segment(params, source.ensemble, options, "transfer_in"),
            transfer_segment(params, target.ensemble, options, "transfer_out")};
  }
  const std::size_t j = source.transmon ? target.ensemble : source.ensemble;
  return {transfer_segment(params, j, options, source.transmon ? "transfer_out" : "transfer_in")};
}

std::string to_string(GateTarget target) {
  switch (target) {
    case GateTarget::identity: return "identity";
    case GateTarget::sqrt_swap: return "sqrt_swap";
    case GateTarget::swap: return "swap";
  }
  return "unknown";
}

GateTarget gate_target_from_string(const std::string& name) {
  if (name == "identity") return GateTarget::identity;
  if (name == "sqrt_swap") return GateTarget::sqrt_swap;
  if (name == "swap") return GateTarget::swap;
  throw DomainError("unknown gate target '" + name + "' (expected identity, sqrt_swap or swap)");
}

Eigen::Matrix4cd target_unitary(GateTarget target) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  if (target == GateTarget::swap) {
    u(1, 1) = u(2, 2) = 0.0;
    u(1, 2) = u(2, 1) = 1.0;
  } else if (target == GateTarget::sqrt_swap) {
    u(1, 1) = u(2, 2) = Complex(0.5, 0.5);
    u(1, 2) = u(2, 1) = Complex(0.5, -0.5);
  }
  return u;
}

Eigen::Matrix4cd exchange_oracle_unitary(double detuning_ratio, double scaled_time, double ladder_ratio) {
  const double d = detuning_ratio, t = scaled_time;
  const Complex mi(0.0, -1.0);
  const Eigen::Matrix2cd one = expm_2x2(0.0, d, 1.0, t);                 // {|b,0>, |a,1>}
  const Eigen::Matrix2cd two = expm_2x2(d, 2.0 * d, ladder_ratio, t);  // {|b,1>, |a,2>}
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = 1.0;
  // 01 -> |a,1>; 10 -> -i|b,0>; a resonant transfer back multiplies |b,x> by -i.
  u(1, 1) = one(1, 1);
  u(2, 1) = mi * one(0, 1);
  u(1, 2) = mi * one(1, 0);
  u(2, 2) = mi * mi * one(0, 0);
  u(3, 3) = mi * mi * two(0, 0);
  return u;
}

ExchangeCalibration calibrate_exchange(GateTarget target, double ladder_ratio) {
  if (target == GateTarget::identity) return {0.0, 0.0, 1.0};
  static std::mutex mutex;
  static std::map<std::pair<GateTarget, double>, ExchangeCalibration> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({target, ladder_ratio}); it != cache.end()) return it->second;
  }
  CalibrationContext ctx{target, ladder_ratio};
  std::vector<std::array<double, 2>> starts;
  if (target == GateTarget::sqrt_swap)
    starts = {{1.632, 5.769}, {-1.632, 5.769}, {0.0, kPi / 4.0}, {1.0, 3.0}, {-1.0, 3.0}};
  else
    starts = {{0.0, 11.0}, {0.3, 11.0}, {-0.3, 11.0}, {0.0, kPi / 2.0}, {1.0, 8.0}, {-1.0, 8.0}};

  gsl_multimin_function fn{&calibration_cost, 2, &ctx};
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  ExchangeCalibration best{0.0, 0.0, -1.0};
  for (const auto& st : starts) {
    gsl_vector_set(x, 0, st[0]);
    gsl_vector_set(x, 1, st[1]);
    gsl_vector_set_all(step, 0.2);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < 5000; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9) == GSL_SUCCESS) break;
    }
    const double f = 1.0 - s->fval;
    const double t = gsl_vector_get(s->x, 1);
    if (t > 0.0 && f > best.oracle_fidelity) best = {gsl_vector_get(s->x, 0), t, f};
  }
  gsl_vector_free(step);
  gsl_vector_free(x);
  gsl_multimin_fminimizer_free(s);
  if (best.oracle_fidelity < 0.0) throw NumericalError("calibrate_exchange: no start converged to a positive duration");
  std::lock_guard lock(mutex);
  cache.emplace(std::make_pair(target, ladder_ratio), best);
  return best;
}

namespace {

Schedule two_ensemble_schedule(const SystemParams& params, std::size_t i, std::size_t j, GateTarget target,
                               const GateOptions& options) {
  params.validate();
  if (params.ensembles.size() < 2) throw DomainError("two-ensemble gate requested but only one ensemble is configured");
  check_ensemble(params, i);
  check_ensemble(params, j);
  if (i == j) throw DomainError("two-ensemble gate needs two distinct ensembles");
  const std::uint64_t n = params.ensembles[j].n_spins;
  const double r1 = collective_raising_element(n, 1, params.spin_model);
  const double r0 = collective_raising_element(n, 0, params.spin_model);
  const ExchangeCalibration cal = calibrate_exchange(target, r1 / r0);
  return {transfer_segment(params, i, options, "transfer_in"), exchange_segment(params, j, cal, options),
          transfer_segment(params, i, options, "transfer_out")};
}

}  // namespace

Schedule sqrt_swap_schedule(const SystemParams& params, std::size_t ensemble_i, std::size_t ensemble_j,
                            const GateOptions& options) {
  return two_ensemble_schedule(params, ensemble_i, ensemble_j, GateTarget::sqrt_swap, options);
}

Schedule swap_schedule(const SystemParams& params, std::size_t ensemble_i, std::size_t ensemble_j,
                       const GateOptions& options) {
  return two_ensemble_schedule(params, ensemble_i, ensemble_j, GateTarget::swap, options);
}

double average_gate_fidelity(const Eigen::MatrixXcd& target, const Eigen::MatrixXcd& realized) {
  if (target.rows() != target.cols() || target.rows() != realized.rows() || target.cols() != realized.cols())
    throw DomainError("average_gate_fidelity: matrices must be square and of equal size");
  const double d = static_cast<double>(target.rows());
  const double tr = std::norm((target.adjoint() * realized).trace());
  return (tr + d) / (d * (d + 1.0));
}

Eigen::Matrix4cd LocalPhases::dress(const Eigen::Matrix4cd& u) const {
  Eigen::Matrix4cd w = u;
  for (int r = 0; r < kDim; ++r)
    for (int c = 0; c < kDim; ++c) w(r, c) *= local_phase(r, post[0], post[1]) * local_phase(c, pre[0], pre[1]);
  return w;
}

LocalPhases optimize_local_phases(const Eigen::Matrix4cd& target, const Eigen::Matrix4cd& realized) {
  // Tr(W^dag V) = sum_{r,c} conj(post_r U_rc pre_c) V_rc; each phase multiplies a subset of terms.
  Eigen::Matrix4cd m;
  for (int r = 0; r < kDim; ++r)
    for (int c = 0; c < kDim; ++c) m(r, c) = std::conj(target(r, c)) * realized(r, c);

  auto overlap = [&](const LocalPhases& p) {
    Complex s = 0.0;
    for (int r = 0; r < kDim; ++r)
      for (int c = 0; c < kDim; ++c)
        s += m(r, c) * std::conj(local_phase(r, p.post[0], p.post[1]) * local_phase(c, p.pre[0], p.pre[1]));
    return s;
  };
  // Bit masks for (pre a, pre b, post a, post b): which index carries the phase.
  auto update = [&](LocalPhases& p, int which) {
    Complex with = 0.0, without = 0.0;
    for (int r = 0; r < kDim; ++r)
      for (int c = 0; c < kDim; ++c) {
        const int idx = which < 2 ? c : r;
        const int bit = (which % 2 == 0) ? 2 : 1;
        LocalPhases q = p;
        double& phi = which < 2 ? q.pre[static_cast<std::size_t>(which)] : q.post[static_cast<std::size_t>(which - 2)];
        phi = 0.0;
        const Complex term =
            m(r, c) * std::conj(local_phase(r, q.post[0], q.post[1]) * local_phase(c, q.pre[0], q.pre[1]));
        if (idx & bit) with += term;
        else without += term;
      }
    // maximize |without + e^{-i phi} with|
    double& phi = which < 2 ? p.pre[static_cast<std::size_t>(which)] : p.post[static_cast<std::size_t>(which - 2)];
    if (std::abs(with) > 0.0) {
      phi = std::arg(with) - std::arg(without == 0.0 ? Complex(1.0) : without);
      phi = std::remainder(phi, 2.0 * kPi);
    }
  };

  LocalPhases best;
  double best_val = -1.0;
  for (int s = 0; s < 16; ++s) {
    LocalPhases p;
    p.pre = {kPi / 2.0 * (s & 3), kPi / 2.0 * ((s >> 2) & 3)};
    for (int sweep = 0; sweep < 200; ++sweep) {
      const double before = std::abs(overlap(p));
      for (int w = 0; w < 4; ++w) update(p, w);
      if (std::abs(overlap(p)) - before <= 1e-15) break;
    }
    const double val = std::abs(overlap(p));
    if (val > best_val + 1e-14) {
      best_val = val;
      best = p;
    }
  }
  return best;
}

GateReport evaluate_gate(const Schedule& schedule, const SystemParams& params, std::size_t ensemble_i,
                         std::size_t ensemble_j, GateTarget target, const EvaluateOptions& options) {
  params.validate();
  if (params.ensembles.size() < 2) throw DomainError("two-ensemble gate requested but only one ensemble is configured");
  check_ensemble(params, ensemble_i);
  check_ensemble(params, ensemble_j);
  if (ensemble_i == ensemble_j) throw DomainError("two-ensemble gate needs two distinct ensembles");
  options.truncation.validate();

  std::vector<std::uint64_t> n_spins;
  for (const auto& e : params.ensembles) n_spins.push_back(e.n_spins);
  const EnumeratedBasis basis(options.truncation, n_spins);

  std::array<std::size_t, kDim> comp{};
  for (int x = 0; x < kDim; ++x) {
    BasisState s{0, 0, std::vector<int>(n_spins.size(), 0)};
    s.k[ensemble_i] = (x >> 1) & 1;
    s.k[ensemble_j] = x & 1;
    comp[static_cast<std::size_t>(x)] = basis.require_index(s);
  }

  std::vector<SystemParams> seg_params;
  for (const auto& seg : schedule) {
    if (!(seg.duration > 0.0)) throw DomainError("pulse segment '" + seg.label + "' must have positive duration");
    seg_params.push_back(seg.overrides.apply(params));
  }

  GateReport rep;
  rep.target = to_string(target);
  for (const auto& seg : schedule) rep.total_duration += seg.duration;

  std::vector<SparseOperator> hams;
  for (const auto& p : seg_params) hams.push_back(build_hamiltonian(p, basis));
  KrylovOptions kopt;
  kopt.tolerance = options.tolerance;
  const auto dim = static_cast<Eigen::Index>(basis.size());
  for (int x = 0; x < kDim; ++x) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi(static_cast<Eigen::Index>(comp[static_cast<std::size_t>(x)])) = 1.0;
    for (std::size_t k = 0; k < schedule.size(); ++k) psi = krylov_expmv(hams[k], schedule[k].duration, psi, kopt);
    for (int y = 0; y < kDim; ++y) rep.realized_unitary(y, x) = psi(static_cast<Eigen::Index>(comp[static_cast<std::size_t>(y)]));
  }
  const Eigen::Matrix4cd& v = rep.realized_unitary;
  Eigen::JacobiSVD<Eigen::Matrix4cd> svd(v);
  if (svd.singularValues()(0) > 1.0 + 1e-8) {
    std::ostringstream os;
    os << "restricted propagator has singular value " << svd.singularValues()(0) << " > 1";
    throw NumericalError(os.str());
  }
  const Eigen::Matrix4cd u = target_unitary(target);
  rep.phases = optimize_local_phases(u, v);
  const Eigen::Matrix4cd w = rep.phases.dress(u);

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  std::vector<Eigen::Vector4cd> probes;
  for (int x = 0; x < kDim; ++x) probes.push_back(Eigen::Vector4cd::Unit(x));
  for (std::size_t s = 0; s < options.worst_case_samples; ++s) {
    Eigen::Vector4cd p;
    for (int x = 0; x < kDim; ++x) p(x) = Complex(normal(rng), normal(rng));
    probes.push_back(p.normalized());
  }

  if (!options.dissipative) {
    rep.average_fidelity = average_gate_fidelity(w, v);
    rep.leakage = std::max(0.0, 1.0 - v.squaredNorm() / kDim);
    rep.worst_case_state_fidelity = 1.0;
    for (const auto& p : probes)
      rep.worst_case_state_fidelity = std::min(rep.worst_case_state_fidelity, std::norm((w * p).dot(v * p)));
    return rep;
  }

  rep.dissipative = true;
  std::vector<LindbladModel> models;
  for (const auto& p : seg_params) models.push_back(build_collapse_ops(p, basis));
  LindbladOptions lopt;
  lopt.check_contracts = false;
  lopt.rel_tol = 1e-9;
  lopt.abs_tol = 1e-11;
  // E(|x><y|) restricted to the computational block, for all 16 inputs.
  std::vector<Eigen::MatrixXcd> inputs;
  for (int x = 0; x < kDim; ++x)
    for (int y = 0; y < kDim; ++y) {
      Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
      rho(static_cast<Eigen::Index>(comp[static_cast<std::size_t>(x)]),
          static_cast<Eigen::Index>(comp[static_cast<std::size_t>(y)])) = 1.0;
      inputs.push_back(std::move(rho));
    }
  if (basis.size() <= lopt.dense_propagator_max_dim) {
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const Eigen::MatrixXcd prop = lindblad_propagator(models[k], schedule[k].duration, lopt);
      for (auto& rho : inputs) {
        const Eigen::VectorXcd out = prop * Eigen::Map<const Eigen::VectorXcd>(rho.data(), dim * dim);
        rho = Eigen::Map<const Eigen::MatrixXcd>(out.data(), dim, dim);
      }
    }
  } else {
    std::vector<std::future<void>> jobs;
    for (auto& rho : inputs)
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t k = 0; k < schedule.size(); ++k)
          rho = propagate_lindblad(models[k], rho, schedule[k].duration, lopt);
      }));
    for (auto& j : jobs) j.get();
  }
  std::vector<Eigen::Matrix4cd> channel;
  for (const auto& rho : inputs) {
    Eigen::Matrix4cd out;
    for (int r = 0; r < kDim; ++r)
      for (int c = 0; c < kDim; ++c)
        out(r, c) = rho(static_cast<Eigen::Index>(comp[static_cast<std::size_t>(r)]),
                        static_cast<Eigen::Index>(comp[static_cast<std::size_t>(c)]));
    channel.push_back(out);
  }

  Complex fe = 0.0;
  double kept = 0.0;
  for (int x = 0; x < kDim; ++x)
    for (int y = 0; y < kDim; ++y) {
      const Eigen::Matrix4cd& e = channel[static_cast<std::size_t>(x * kDim + y)];
      fe += (w.adjoint() * e * w)(x, y);
      if (x == y) kept += e.trace().real();
    }
  const double f_e = fe.real() / (kDim * kDim);
  rep.average_fidelity = (kDim * f_e + 1.0) / (kDim + 1.0);
  rep.leakage = std::max(0.0, 1.0 - kept / kDim);
  rep.worst_case_state_fidelity = 1.0;
  for (const auto& p : probes) {
    Eigen::Matrix4cd rho_out = Eigen::Matrix4cd::Zero();
    for (int x = 0; x < kDim; ++x)
      for (int y = 0; y < kDim; ++y) rho_out += p(x) * std::conj(p(y)) * channel[static_cast<std::size_t>(x * kDim + y)];
    const Eigen::Vector4cd wp = w * p;
    rep.worst_case_state_fidelity = std::min(rep.worst_case_state_fidelity, wp.dot(rho_out * wp).real());
  }
  return rep;
}

TransferReport evaluate_transfer(const Schedule& schedule, const SystemParams& params, GateEndpoint source,
                                 GateEndpoint target, const SpaceTruncation& truncation) {
  params.validate();
  for (const auto& e : {source, target})
    if (!e.transmon) check_ensemble(params, e.ensemble);
  std::vector<std::uint64_t> n_spins;
  for (const auto& e : params.ensembles) n_spins.push_back(e.n_spins);
  const EnumeratedBasis basis(truncation, n_spins);
  auto excited = [&](GateEndpoint e) {
    BasisState s{0, 0, std::vector<int>(n_spins.size(), 0)};
    if (e.transmon) s.transmon = 1;
    else s.k[e.ensemble] = 1;
    return basis.require_index(s);
  };
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi(static_cast<Eigen::Index>(excited(source))) = 1.0;
  TransferReport rep;
  for (const auto& seg : schedule) {
    if (!(seg.duration > 0.0)) throw DomainError("pulse segment '" + seg.label + "' must have positive duration");
    psi = krylov_expmv(build_hamiltonian(seg.overrides.apply(params), basis), seg.duration, psi);
    rep.total_duration += seg.duration;
  }
  rep.target_population = std::norm(psi(static_cast<Eigen::Index>(excited(target))));
  rep.source_population = std::norm(psi(static_cast<Eigen::Index>(excited(source))));
  return rep;
}

}  // namespace ejc
