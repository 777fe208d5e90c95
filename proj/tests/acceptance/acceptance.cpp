// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "commands.hpp"
#include "config.hpp"
#include "ejc/dynamics.hpp"
#include "ejc/effective.hpp"
#include "ejc/gates.hpp"
#include "ejc/params.hpp"
#include "ejc/spectra.hpp"

using namespace ejc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

EnumeratedBasis basis_for(const SystemParams& p, const SpaceTruncation& t) {
  std::vector<std::uint64_t> n;
  for (const auto& e : p.ensembles) n.push_back(e.n_spins);
  return EnumeratedBasis(t, n);
}

Eigen::VectorXcd basis_vector(const EnumeratedBasis& b, const BasisState& s) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.size()));
  v(static_cast<Eigen::Index>(b.require_index(s))) = 1.0;
  return v;
}

SystemParams jc_only() {
  SystemParams p;
  p.g_c = 1.0;
  p.g_m = 0.0;
  p.delta = 0.0;
  p.ensembles = {Ensemble{1, 0.0, std::nullopt}};
  return p;
}

SystemParams embedded(double G, double Delta = 1.0, std::uint64_t n = 100000000,
                      SpinModel model = SpinModel::exact_dicke) {
  SystemParams p;
  p.g_c = 1.0;
  p.g_m = G / std::sqrt(static_cast<double>(n));
  p.ensembles = {Ensemble{n, Delta, std::nullopt}};
  p.spin_model = model;
  return p;
}

Outcome jc_ladder_check() {
  const SystemParams p = jc_only();
  const EnumeratedBasis b = basis_for(p, {4, 1, 4});
  const Spectrum s = eigensystem(build_hamiltonian(p, b), b, false);
  double worst = 0.0;
  for (int n = 1; n <= 3; ++n) {
    const Eigen::VectorXd& v = s.block(n).values;
    for (double target : {-std::sqrt(static_cast<double>(n)), std::sqrt(static_cast<double>(n))}) {
      double best = INFINITY;
      for (Eigen::Index i = 0; i < v.size(); ++i) best = std::min(best, std::abs(v(i) - target));
      worst = std::max(worst, best);
    }
    worst = std::max(worst, std::abs(v(0) + std::sqrt(static_cast<double>(n))));
  }
  return {worst < 1e-10, "max |E - (+-sqrt(n) g_c)| = " + fmt(worst)};
}

Outcome anharmonicity_check() {
  const SystemParams p = jc_only();
  const EnumeratedBasis b = basis_for(p, {4, 1, 4});
  const Anharmonicity a = anharmonicity(eigensystem(build_hamiltonian(p, b), b, false));
  const double err = std::abs(a.manifold_gap - (std::sqrt(2.0) - 1.0));
  return {err < 1e-10, "manifold gap " + fmt(a.manifold_gap) + ", error " + fmt(err)};
}

Outcome embedded_jc_check() {
  const double G = 0.02;
  const SystemParams p = embedded(G);
  const EmbeddedJcReport r = embedded_jc_analysis(p, basis_for(p, {4, 3, 4}));
  // {|E,a,0>, |G,b,0>, |G,a,1>} block.
  Eigen::Matrix3d h;
  h << -1.0, 0.0, G, 0.0, 0.0, 1.0, G, 1.0, 0.0;
  const Eigen::Vector3d e = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(h).eigenvalues();
  const double oracle = e(1) - e(0);
  const double split_err = std::abs(r.splitting / (std::sqrt(2.0) * G) - 1.0);
  const double oracle_err = std::abs(r.splitting / oracle - 1.0);
  const std::array<double, 3> want{1.0 / std::sqrt(2.0), 0.5, 0.5};
  double coeff_err = 0.0;
  for (int i = 0; i < 3; ++i) coeff_err = std::max(coeff_err, std::abs(r.coefficient_magnitudes[i] - want[i]));
  return {split_err < 0.01 && oracle_err < 0.01 && coeff_err < 1e-2,
          "splitting/(sqrt2 G) - 1 = " + fmt(split_err) + ", vs 3x3 " + fmt(oracle_err) +
              ", coefficient error " + fmt(coeff_err)};
}

double sw_error(double delta, double Delta) {
  const double G = 0.1;
  SystemParams p = embedded(G, Delta);
  p.delta = delta;
  const double g_eff = G / Delta;
  return validate_effective(p, 6.0 * std::numbers::pi / g_eff).rel_error;
}

Outcome schrieffer_wolff_check() {
  const double G = 0.1;
  const double e10 = sw_error(10.0, dressed_resonance(10.0, 1.0, G));
  const double e20 = sw_error(20.0, dressed_resonance(20.0, 1.0, G));
  const double ratio = e10 / e20;
  const double l10 = sw_error(10.0, dispersive_resonance(10.0, 1.0));
  const double l20 = sw_error(20.0, dispersive_resonance(20.0, 1.0));
  return {e10 < 0.05 && ratio >= 3.0 && ratio <= 5.0,
          "rel error " + fmt(e10) + " (delta=10), " + fmt(e20) + " (delta=20), ratio " + fmt(ratio) +
              "; delta + g_c^2/delta gives " + fmt(l10) + ", " + fmt(l20)};
}

Outcome hybrid_lifetime_check() {
  const double G = 0.02;
  SystemParams p = embedded(G);
  p.gamma_spin = 1e-3;
  p.gamma_jj = 0.6e-3;
  p.kappa_c = 0.3e-3;
  const EnumeratedBasis b = basis_for(p, {2, 2, 2});
  const EmbeddedJcReport r = embedded_jc_analysis(p, b);
  const Eigen::VectorXcd& v = r.hybrid_excited_state;
  const SparseOperator proj(SparseMatrix((v * v.adjoint()).sparseView(1e-300, 1.0)), true);
  const double expected = 0.5 * p.gamma_spin + 0.25 * p.gamma_jj + 0.25 * p.kappa_c;
  const auto grid = linear_grid(3.0 / expected, 301);
  const Trajectory tr = evolve_lindblad(build_collapse_ops(p, b), v * v.adjoint(), grid,
                                        std::vector<Observable>{{"hybrid", proj}});
  const FitResult f = fit_decay(tr.observables.at("hybrid"), grid);
  const double err = std::abs(f.rate / expected - 1.0);
  return {err < 0.05, "fitted " + fmt(f.rate) + " vs " + fmt(expected) + ", relative error " + fmt(err)};
}

Outcome numerology_check() {
  const SpinCount c = spin_count(1e16, 10e-6, 10e-6, 100e-6);
  const double omega_c = 2.0 * std::numbers::pi * 1e10;
  const double g_c = max_electric_coupling(omega_c);
  const double g_m = magnetic_coupling(omega_c, g_c, 1e-12);
  const double mu_b = 9.2740100783e-24, mu_0 = 1.25663706212e-6, hbar = 1.054571817e-34;
  const double oracle = mu_b * std::sqrt(mu_0 * (omega_c - g_c) / (2.0 * hbar * 1e-12));
  const double rel = std::abs(g_m / oracle - 1.0);

  const app::Json root = app::Json::parse(R"({
    "mode": "SI",
    "params": {"g_c": 1.0, "kappa_c": 1e6, "gamma_jj": 1e6},
    "estimate": {"omega_c": 62831853071.795865, "mode_volume": 1e-12, "density_cm3": 1e16,
                 "thickness": 1e-5, "width": 1e-5, "length": 1e-4, "reference_g_m": 1e3}})");
  const app::Json report = app::estimate_report(app::parse_run_config(root));
  const bool flagged = report.at("g_m_same_order_as_reference").get<bool>();
  const bool count_ok = c.count == 100000000u && report.at("n_spins").get<std::uint64_t>() == 100000000u;
  return {count_ok && rel < 1e-12 && flagged,
          "N_s = " + std::to_string(c.count) + ", g_m = " + fmt(g_m) + " rad/s (relative " + fmt(rel) +
              "), same order as 1e3: " + (flagged ? "yes" : "no")};
}

Outcome regime_check() {
  // Grid of 10^(3 + i/20) spins; the crossing is the geometric midpoint of the bracketing points.
  double crossing = 0.0;
  bool prev = false;
  int changes = 0;
  for (int i = 0; i <= 120; ++i) {
    const double n = std::pow(10.0, 3.0 + i / 20.0);
    SystemParams p;
    p.g_c = 1e9;
    p.g_m = 1e3;
    p.kappa_c = 1e6;
    p.gamma_jj = 1e6;
    p.ensembles = {Ensemble{static_cast<std::uint64_t>(std::llround(n)), 0.0, std::nullopt}};
    const bool valid = classify_regime(p).two_level_valid;
    if (i > 0 && valid != prev) {
      ++changes;
      crossing = std::sqrt(n * std::pow(10.0, 3.0 + (i - 1) / 20.0));
    }
    prev = valid;
  }
  const bool ok = changes == 1 && prev && std::abs(std::log10(crossing / 1e6)) <= 1.0;
  return {ok, "two_level_valid switches on at N_s = " + fmt(crossing) + " (" + std::to_string(changes) +
                  " transition)"};
}

Outcome sqrt_swap_check() {
  SystemParams p;
  p.g_c = 1.0;
  p.g_m = 0.1 / 1e4;
  p.delta = 10.0;
  p.ensembles = {Ensemble{100000000, 0.0, std::nullopt}, Ensemble{100000000, 0.0, std::nullopt}};
  const GateReport r = evaluate_gate(sqrt_swap_schedule(p, 0, 1), p, 0, 1, GateTarget::sqrt_swap);
  return {r.average_fidelity > 0.99, "average fidelity " + fmt(r.average_fidelity) + ", leakage " +
                                         fmt(r.leakage) + ", duration " + fmt(r.total_duration) + "/g_c"};
}

Outcome consistency_check() {
  std::ostringstream detail;
  bool ok = true;

  SystemParams fp = embedded(0.05);
  fp.delta = 0.4;
  const EnumeratedBasis fb = basis_for(fp, {2, 2, 3});
  const FrameEquivalenceReport fr = frame_equivalence(fp, fb, basis_vector(fb, {0, 1, {0}}), 30.0);
  const double frame = std::max(fr.max_population_deviation, fr.max_amplitude_deviation);
  ok = ok && frame < 1e-6;
  detail << "frame deviation " << fmt(frame);

  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  double worst_norm = 0.0, worst_trace = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    SystemParams p;
    p.g_c = 1.0;
    p.delta = 4.0 * u(rng) - 2.0;
    p.kappa_c = 0.2 * u(rng);
    p.gamma_jj = 0.2 * u(rng);
    p.gamma_spin = 0.2 * u(rng);
    p.spin_model = draw % 2 ? SpinModel::bosonic : SpinModel::exact_dicke;
    const auto n = static_cast<std::uint64_t>(std::pow(10.0, 1.0 + 8.0 * u(rng)));
    p.g_m = 0.3 * u(rng) / std::sqrt(static_cast<double>(n));
    p.ensembles = {Ensemble{n, 4.0 * u(rng) - 2.0, std::nullopt}};
    const EnumeratedBasis b = basis_for(p, {2, 2, 2});
    const Eigen::VectorXcd psi = (basis_vector(b, {1, 0, {1}}) + basis_vector(b, {0, 1, {0}})).normalized();
    const auto grid = linear_grid(10.0, 11);
    try {
      // Both propagators throw NumericalError on a norm, trace, Hermiticity or positivity violation.
      const Trajectory ut = evolve_unitary(build_hamiltonian(p, b), psi, grid);
      const Trajectory lt = evolve_lindblad(build_collapse_ops(p, b), psi * psi.adjoint(), grid);
      for (double x : ut.observables.at("norm")) worst_norm = std::max(worst_norm, std::abs(x - 1.0));
      for (double x : lt.observables.at("trace")) worst_trace = std::max(worst_trace, std::abs(x - 1.0));
    } catch (const std::exception&) {
      ++violations;
    }
  }
  ok = ok && violations == 0;
  detail << "; 100 draws, " << violations << " contract violations, norm " << fmt(worst_norm) << ", trace "
         << fmt(worst_trace);

  auto max_diff = [](std::uint64_t n) {
    const SystemParams a = embedded(0.02, 1.0, n, SpinModel::exact_dicke);
    const SystemParams c = embedded(0.02, 1.0, n, SpinModel::bosonic);
    const EnumeratedBasis b = basis_for(a, {4, 3, 4});
    const Spectrum sa = eigensystem(build_hamiltonian(a, b), b, false);
    const Spectrum sc = eigensystem(build_hamiltonian(c, b), b, false);
    double d = 0.0;
    for (std::size_t i = 0; i < sa.eigenvalues.size(); ++i)
      d = std::max(d, std::abs(sa.eigenvalues[i] - sc.eigenvalues[i]));
    return d;
  };
  const double d2 = max_diff(100), d3 = max_diff(1000), d4 = max_diff(10000);
  const double r1 = d2 / d3, r2 = d3 / d4;
  ok = ok && std::abs(r1 / 10.0 - 1.0) < 0.1 && std::abs(r2 / 10.0 - 1.0) < 0.1;
  detail << "; Dicke-bosonic gap ratios per decade of N_s " << fmt(r1) << ", " << fmt(r2);
  return {ok, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "JC ladder", 1.0, jc_ladder_check},
      {2, "anharmonicity", 1.0, anharmonicity_check},
      {3, "embedded JC doublet", 5.0, embedded_jc_check},
      {4, "dispersive exchange", 30.0, schrieffer_wolff_check},
      {5, "hybrid lifetime", 60.0, hybrid_lifetime_check},
      {6, "silicon numerology", 1.0, numerology_check},
      {7, "regime threshold", 5.0, regime_check},
      {8, "sqrt(SWAP) gate", 120.0, sqrt_swap_check},
      {9, "consistency suite", 300.0, consistency_check},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && dt < c.budget_s;
    if (!pass) ++failures;
    std::printf("%s %d %s: %s [%.3f s / %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                c.budget_s);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
