#include "ejc/effective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "ejc/dynamics.hpp"
#include "ejc/errors.hpp"
#include "ejc/krylov.hpp"

namespace ejc {

namespace {

using Triplet = Eigen::Triplet<Complex>;

std::vector<std::uint64_t> spin_counts(const SystemParams& params) {
  std::vector<std::uint64_t> n;
  for (const auto& e : params.ensembles) n.push_back(e.n_spins);
  return n;
}

}  // namespace

double dressed_resonance(double delta, double g_c, double collective_coupling, double offset) {
  if (delta == 0.0) throw DomainError("dressed_resonance: delta must be non-zero");
  // Level of each emitter pushed away from the cavity by its own vacuum-Rabi
  // dressing, delta/2 + sgn(delta) sqrt(delta^2/4 + g^2).
  const double target = 0.5 * delta + std::copysign(std::hypot(0.5 * delta, g_c), delta) - offset;
  const double g2 = collective_coupling * collective_coupling;
  if (target == 0.0 || std::abs(target) <= std::abs(collective_coupling))
    throw DomainError("dressed_resonance: no solution, G is too large for this delta");
  return target - g2 / target;
}

EffectiveSystem build_effective(const SystemParams& params, const EffectiveOptions& options) {
  params.validate();
  if (params.delta == 0.0) throw DomainError("effective model: delta must be non-zero");
  for (std::size_t j = 0; j < params.ensembles.size(); ++j)
    if (params.ensembles[j].detuning == 0.0)
      throw DomainError("effective model: Delta of ensemble " + std::to_string(j) + " must be non-zero");

  const auto n_spins = spin_counts(params);
  EnumeratedBasis basis = EnumeratedBasis::without_photons(options.k_max, options.total_excitation_max, n_spins);
  const std::size_t m = params.ensembles.size();

  EffectiveModel model;
  model.stark_shifts = options.stark_shifts;
  model.transmon_shift = options.stark_shifts ? -params.g_c * params.g_c / params.delta : 0.0;
  double coupling_ratio = 0.0, mismatch = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double dj = params.ensembles[j].detuning;
    const double gm = params.spin_coupling(j);
    model.g_eff_single.push_back(params.g_c * gm / dj);
    model.g_eff_collective.push_back(params.g_c * params.collective_coupling(j) / dj);
    const double r0 = collective_raising_element(n_spins[j], 0, params.spin_model);
    model.spin_shift.push_back(options.stark_shifts ? -gm * gm * r0 * r0 / dj : 0.0);
    coupling_ratio = std::max(coupling_ratio, params.collective_coupling(j) / params.g_c);
    mismatch = std::max(mismatch, std::abs(params.delta - dj) / std::abs(dj));
  }
  model.validity_ratios = {{"coupling", coupling_ratio},
                           {"detuning_mismatch", mismatch},
                           {"dispersive", params.g_c / std::abs(params.delta)}};

  std::vector<Triplet> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis.state(i);
    double e = -params.delta * s.transmon + model.transmon_shift * s.transmon;
    for (std::size_t j = 0; j < m; ++j) {
      const double dj = params.ensembles[j].detuning;
      e -= dj * s.k[j];
      if (options.stark_shifts && s.k[j] > 0) {
        const double gm = params.spin_coupling(j);
        const double r = collective_raising_element(n_spins[j], s.k[j] - 1, params.spin_model);
        e -= gm * gm * r * r / dj;
      }
    }
    if (e != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), e);

    auto add = [&](const BasisState& to, Complex amp) {
      if (amp == 0.0) return;
      if (auto r = basis.index_of(to)) {
        t.emplace_back(static_cast<int>(*r), static_cast<int>(i), amp);
        t.emplace_back(static_cast<int>(i), static_cast<int>(*r), std::conj(amp));
      }
    };
    // |b, k> -> |a, k + e_j>
    if (s.transmon == 1) {
      for (std::size_t j = 0; j < m; ++j) {
        BasisState to = s;
        to.transmon = 0;
        to.k[j] += 1;
        add(to, model.g_eff_single[j] * collective_raising_element(n_spins[j], s.k[j], params.spin_model));
      }
    }
    // Cavity-mediated |k> -> |k - e_i + e_j>, i < j, same order as the shifts.
    if (options.stark_shifts) {
      for (std::size_t i2 = 0; i2 < m; ++i2) {
        if (s.k[i2] == 0) continue;
        for (std::size_t j = i2 + 1; j < m; ++j) {
          BasisState to = s;
          to.k[i2] -= 1;
          to.k[j] += 1;
          const double di = params.ensembles[i2].detuning, dj = params.ensembles[j].detuning;
          const double amp = -0.5 * params.spin_coupling(i2) * params.spin_coupling(j) * (1.0 / di + 1.0 / dj) *
                             collective_raising_element(n_spins[i2], to.k[i2], params.spin_model) *
                             collective_raising_element(n_spins[j], s.k[j], params.spin_model);
          add(to, amp);
        }
      }
    }
  }
  SparseMatrix h(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
  h.setFromTriplets(t.begin(), t.end());
  h.makeCompressed();
  SparseOperator op(std::move(h), true);
  return {std::move(model), std::move(basis), std::move(op)};
}

double dominant_frequency(std::span<const double> series, double dt) {
  const std::size_t n = series.size();
  if (n < 16) throw DomainError("dominant_frequency: need at least 16 samples");
  if (!(dt > 0.0)) throw DomainError("dominant_frequency: dt must be positive");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    w[i] = hann * (series[i] - mean);
  }
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) return 0.0;

  auto power = [&](double omega) {
    const Complex step = std::polar(1.0, -omega * dt);
    Complex phase = 1.0, acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += w[i] * phase;
      phase *= step;
      if ((i & 255u) == 255u) phase /= std::abs(phase);
    }
    return std::norm(acc);
  };

  const double record = dt * static_cast<double>(n - 1);
  const double bin = std::numbers::pi / (2.0 * record);  // 4x zero padding
  const double nyquist = std::numbers::pi / dt;
  const double lowest = 4.0 * std::numbers::pi / record;  // outside the window's DC main lobe
  const auto bins = static_cast<std::size_t>(nyquist / bin);
  std::size_t best = 0;
  double best_p = -1.0;
  std::vector<double> p(bins + 1, 0.0);
  for (std::size_t k = 0; k <= bins; ++k) {
    const double omega = bin * static_cast<double>(k);
    if (omega < lowest) continue;
    p[k] = power(omega);
    if (p[k] > best_p) {
      best_p = p[k];
      best = k;
    }
  }
  if (best == 0) throw NumericalError("dominant_frequency: record too short to resolve an oscillation");
  double centre = bin * static_cast<double>(best);
  if (best > 0 && best < bins && p[best - 1] > 0.0 && p[best + 1] > 0.0) {
    const double denom = p[best - 1] - 2.0 * p[best] + p[best + 1];
    if (denom < 0.0) centre += bin * 0.5 * (p[best - 1] - p[best + 1]) / denom;
  }
  const double lo = std::max(lowest, centre - bin), hi = std::min(nyquist, centre + bin);
  const auto [omega, neg] = boost::math::tools::brent_find_minima([&](double x) { return -power(x); }, lo, hi, 40);
  return omega;
}

DeviationReport validate_effective(const SystemParams& params, double t_end, const ValidationOptions& options) {
  params.validate();
  if (!(t_end > 0.0)) throw DomainError("validate_effective: t_end must be positive");
  if (options.samples < 16) throw DomainError("validate_effective: need at least 16 samples");

  const auto n_spins = spin_counts(params);
  const EnumeratedBasis full_basis(SpaceTruncation{1, 1, 1}, n_spins);
  const SparseOperator h_full = build_hamiltonian(params, full_basis);
  EffectiveOptions eopt;
  eopt.stark_shifts = options.stark_shifts;
  const EffectiveSystem eff = build_effective(params, eopt);

  DeviationReport report;
  report.validity_ratios = eff.model.validity_ratios;

  BasisState start{0, 0, std::vector<int>(n_spins.size(), 0)};
  start.k[0] = 1;
  Eigen::VectorXcd psi_full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(full_basis.size()));
  psi_full(static_cast<Eigen::Index>(full_basis.require_index(start))) = 1.0;
  Eigen::VectorXcd psi_eff = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(eff.basis.size()));
  psi_eff(static_cast<Eigen::Index>(eff.basis.require_index(start))) = 1.0;

  const double g_eff = eff.model.g_eff_collective[0];
  if (g_eff == 0.0) {
    // Nothing couples the spins to the bus: both models stay put.
    report.freq_full = report.freq_eff = 0.0;
    return report;
  }

  const SparseOperator n_photon = photon_number_operator(full_basis);
  const SparseOperator b_full = transmon_excited_projector(full_basis);
  const SparseOperator k_full = ensemble_excitation_operator(full_basis, 0);
  const SparseOperator b_eff = transmon_excited_projector(eff.basis);
  const SparseOperator k_eff = ensemble_excitation_operator(eff.basis, 0);

  const std::size_t n = options.samples;
  const double dt = t_end / static_cast<double>(n - 1);
  KrylovOptions kopt;
  kopt.tolerance = 1e-11;
  kopt.error_span = t_end;
  std::vector<double> pb_full(n), pb_eff(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      psi_full = krylov_expmv(h_full, dt, psi_full, kopt);
      psi_eff = krylov_expmv(eff.hamiltonian, dt, psi_eff, kopt);
    }
    auto expect = [](const SparseOperator& op, const Eigen::VectorXcd& v) { return v.dot(op.matrix() * v).real(); };
    pb_full[i] = expect(b_full, psi_full);
    pb_eff[i] = expect(b_eff, psi_eff);
    report.max_photon_pop = std::max(report.max_photon_pop, expect(n_photon, psi_full));
    report.max_population_deviation =
        std::max({report.max_population_deviation, std::abs(pb_full[i] - pb_eff[i]),
                  std::abs(expect(k_full, psi_full) - expect(k_eff, psi_eff))});
  }
  report.freq_full = dominant_frequency(pb_full, dt);
  report.freq_eff = dominant_frequency(pb_eff, dt);
  report.rel_error = std::abs(report.freq_full - 2.0 * std::abs(g_eff)) / (2.0 * std::abs(g_eff));
  const double ratio = params.g_c / params.delta;
  report.breakdown = report.max_photon_pop > 5.0 * ratio * ratio;
  return report;
}

}  // namespace ejc
