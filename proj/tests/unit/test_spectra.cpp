#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "ejc/errors.hpp"
#include "ejc/spectra.hpp"

using namespace ejc;

namespace {

SystemParams embedded(double G, double Delta = 1.0, std::uint64_t n = 100000000,
                      SpinModel model = SpinModel::exact_dicke) {
  SystemParams p;
  p.g_c = 1.0;
  p.g_m = G / std::sqrt(static_cast<double>(n));
  p.ensembles = {Ensemble{n, Delta, std::nullopt}};
  p.spin_model = model;
  return p;
}

Spectrum spectrum_of(const SystemParams& p, const SpaceTruncation& t, bool vectors = false) {
  std::vector<std::uint64_t> n;
  for (const auto& e : p.ensembles) n.push_back(e.n_spins);
  const EnumeratedBasis b(t, n);
  return eigensystem(build_hamiltonian(p, b), b, vectors);
}

EmbeddedJcReport analyze(const SystemParams& p, const SpaceTruncation& t = {}) {
  std::vector<std::uint64_t> n;
  for (const auto& e : p.ensembles) n.push_back(e.n_spins);
  return embedded_jc_analysis(p, EnumeratedBasis(t, n));
}

// Hybrid doublet of the 3x3 block {|E,a,0>, |G,b,0>, |G,a,1>} at delta = 0.
Eigen::Vector3d three_level_oracle(double G, double Delta) {
  Eigen::Matrix3d h;
  h << -Delta, 0.0, G, 0.0, 0.0, 1.0, G, 1.0, 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("pure JC blocks") {
  SystemParams p = embedded(0.0, 0.0, 1);
  const Spectrum s = spectrum_of(p, {4, 3, 4});
  CHECK(s.block(0).values.size() == 1);
  CHECK(std::abs(s.block(0).values(0)) < 1e-15);
  for (int n = 1; n <= 3; ++n) {
    // A single spin (k <= 1) is decoupled and free, leaving JC manifold n - k.
    std::vector<double> expect;
    for (int k = 0; k <= 1; ++k) {
      const int m = n - k;
      if (m == 0) {
        expect.push_back(0.0);
      } else {
        expect.push_back(-std::sqrt(static_cast<double>(m)));
        expect.push_back(std::sqrt(static_cast<double>(m)));
      }
    }
    std::sort(expect.begin(), expect.end());
    const auto& v = s.block(n).values;
    REQUIRE(v.size() == static_cast<Eigen::Index>(expect.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) CHECK(std::abs(v(i) - expect[static_cast<std::size_t>(i)]) < 1e-10);
  }
  CHECK(s.max_residual < 1e-12);
}

TEST_CASE("jc ladder") {
  for (int n = 1; n <= 5; ++n) {
    const auto [lo, hi] = jc_ladder(1.0, 0.0, n);
    CHECK(lo == doctest::Approx(-std::sqrt(n)).epsilon(1e-15));
    CHECK(hi == doctest::Approx(std::sqrt(n)).epsilon(1e-15));
  }
  for (double delta : {10.0, 20.0, 50.0}) {
    const auto [lo, hi] = jc_ladder(1.0, delta, 1);
    CHECK(std::abs(lo - (-delta - 1.0 / delta)) < 2.0 / (delta * delta * delta));
    (void)hi;
    SystemParams p = embedded(0.0, 0.0, 1);
    p.delta = delta;
    const Spectrum s = spectrum_of(p, {2, 1, 2});
    CHECK(s.block_min(1) == doctest::Approx(lo).epsilon(1e-13));
  }
}

TEST_CASE("anharmonicity metrics") {
  const Spectrum s = spectrum_of(embedded(0.0, 0.0, 1), {4, 3, 4});
  const Anharmonicity a = anharmonicity(s);
  CHECK(std::abs(a.ladder_step - (2.0 - std::sqrt(2.0))) < 1e-10);
  CHECK(std::abs(a.manifold_gap - (std::sqrt(2.0) - 1.0)) < 1e-10);

  SystemParams large = embedded(0.0, 0.0, 100000000);
  CHECK(anharmonicity(spectrum_of(large, {4, 3, 4})).ladder_step == doctest::Approx(a.ladder_step).epsilon(1e-14));

  // Harmonic reference: no transmon coupling, no spins.
  const SystemParams p = embedded(0.0, 0.0, 1);
  const EnumeratedBasis b({4, 3, 4}, std::vector<std::uint64_t>{1});
  const Spectrum flat = eigensystem(build_hamiltonian(p, b, {.transmon_coupling = false}), b, false);
  CHECK(std::abs(anharmonicity(flat).ladder_step) < 1e-15);
}

TEST_CASE("embedded JC doublet") {
  const EmbeddedJcReport r = analyze(embedded(0.02));
  CHECK(r.collective_coupling == doctest::Approx(0.02));
  CHECK(std::abs(r.splitting / (std::sqrt(2.0) * 0.02) - 1.0) < 1e-2);
  CHECK(std::abs(r.coefficient_magnitudes[0] - 1.0 / std::sqrt(2.0)) < 1e-2);
  CHECK(std::abs(r.coefficient_magnitudes[1] - 0.5) < 1e-2);
  CHECK(std::abs(r.coefficient_magnitudes[2] - 0.5) < 1e-2);

  const Eigen::Vector3d o = three_level_oracle(0.02, 1.0);
  // The doublet is the pair of oracle eigenvalues nearest -1.
  CHECK(r.lower_energy == doctest::Approx(o(0)).epsilon(1e-9));
  CHECK(r.upper_energy == doctest::Approx(o(1)).epsilon(1e-9));

  double sq = 0.0;
  for (double c : r.coefficient_magnitudes) sq += c * c;
  CHECK(std::abs(sq + r.leakage - 1.0) < 1e-10);
  CHECK(r.hybrid_excited_state.norm() == doctest::Approx(1.0));
}

TEST_CASE("embedded JC limits") {
  SUBCASE("no spin coupling gives a degenerate pair") {
    const EmbeddedJcReport r = analyze(embedded(0.0));
    CHECK(std::abs(r.splitting) < 1e-12);
  }
  SUBCASE("scale invariance") {
    SystemParams p = embedded(0.02);
    const double ratio = analyze(p).splitting / 0.02;
    p.g_c = 10.0;
    p.g_m *= 10.0;
    p.ensembles[0].detuning = 10.0;
    CHECK(analyze(p).splitting / 0.2 == doctest::Approx(ratio).epsilon(1e-12));
  }
  SUBCASE("splitting approaches sqrt(2) G") {
    double prev = 1.0;
    for (double G : {0.05, 0.02, 0.01}) {
      const double err = std::abs(analyze(embedded(G)).splitting / (std::sqrt(2.0) * G) - 1.0);
      CHECK(err < prev);
      CHECK(err < 2.0 * G * G);
      prev = err;
    }
  }
}

TEST_CASE("exact Dicke and bosonic spectra converge as 1/N") {
  auto max_diff = [](std::uint64_t n) {
    const Spectrum a = spectrum_of(embedded(0.02, 1.0, n, SpinModel::exact_dicke), {4, 3, 4});
    const Spectrum b = spectrum_of(embedded(0.02, 1.0, n, SpinModel::bosonic), {4, 3, 4});
    double d = 0.0;
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) d = std::max(d, std::abs(a.eigenvalues[i] - b.eigenvalues[i]));
    return d;
  };
  const double d2 = max_diff(100), d4 = max_diff(10000), d6 = max_diff(1000000);
  CHECK(d2 > 0.0);
  CHECK(d2 / d6 >= 1e3);
  CHECK(d2 / d4 == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("convergence scan") {
  SUBCASE("pure JC is truncation independent") {
    const ConvergenceTable t =
        convergence_scan(embedded(0.0, 1.0, 1), {{2, 1, 2}, {3, 2, 3}, {4, 3, 4}});
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(*t.rows[i].change < 1e-12);
    CHECK(t.converged);
  }
  SUBCASE("embedded defaults converge") {
    const ConvergenceTable t = convergence_scan(embedded(0.02), {{2, 1, 2}, {3, 2, 3}, {4, 3, 4}});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.converged);
    CHECK(t.rows[2].dimension > t.rows[0].dimension);
  }
  CHECK_THROWS_AS(convergence_scan(embedded(0.02), {{4, 3, 4}}), DomainError);
}

TEST_CASE("eigensystem rejects block coupling") {
  const EnumeratedBasis b({1, 1, 1}, std::vector<std::uint64_t>{1});
  SparseMatrix m(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
  m.insert(0, 1) = 1.0;
  m.insert(1, 0) = 1.0;
  CHECK_THROWS_AS(eigensystem(SparseOperator(m, true), b, false), NumericalError);
}
