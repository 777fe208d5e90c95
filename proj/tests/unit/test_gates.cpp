#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <doctest.h>

#include "ejc/errors.hpp"
#include "ejc/gates.hpp"
#include "ejc/hamiltonian.hpp"

using namespace ejc;

namespace {

SystemParams two_ensembles(double G = 0.1, double delta = 10.0) {
  SystemParams p;
  p.g_c = 1.0;
  p.g_m = G / 1e4;
  p.delta = delta;
  p.ensembles = {Ensemble{100000000, 0.0, std::nullopt}, Ensemble{100000000, 0.0, std::nullopt}};
  return p;
}

Eigen::Matrix4cd random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Matrix4cd a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = Complex(n(rng), n(rng));
  Eigen::HouseholderQR<Eigen::Matrix4cd> qr(a);
  return qr.householderQ() * Eigen::Matrix4cd::Identity();
}

}  // namespace

TEST_CASE("target unitaries") {
  const Eigen::Matrix4cd s = target_unitary(GateTarget::sqrt_swap);
  CHECK((s * s - target_unitary(GateTarget::swap)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((s.adjoint() * s - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(target_unitary(GateTarget::identity) == Eigen::Matrix4cd::Identity());
  for (auto t : {GateTarget::identity, GateTarget::sqrt_swap, GateTarget::swap})
    CHECK(gate_target_from_string(to_string(t)) == t);
  CHECK_THROWS_AS(gate_target_from_string("cnot"), DomainError);
}

TEST_CASE("average gate fidelity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix4cd u = random_unitary(rng), v = random_unitary(rng);
    CHECK(average_gate_fidelity(u, u) == doctest::Approx(1.0).epsilon(1e-14));
    const double f = average_gate_fidelity(u, v);
    CHECK(f <= 1.0 + 1e-10);
    CHECK(f >= 1.0 / 5.0 - 1e-12);
  }
  // Single qubit, orthogonal Paulis: |Tr|^2 = 0 so F = d / (d (d + 1)) = 1/3.
  Eigen::Matrix2cd x, z;
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  CHECK(average_gate_fidelity(x, z) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(average_gate_fidelity(Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Identity(3, 3)), DomainError);
}

TEST_CASE("local phase optimization recovers known phases") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto t : {GateTarget::sqrt_swap, GateTarget::swap}) {
    LocalPhases ph;
    ph.pre = {u(rng), u(rng)};
    ph.post = {u(rng), u(rng)};
    const Eigen::Matrix4cd v = ph.dress(target_unitary(t));
    const LocalPhases found = optimize_local_phases(target_unitary(t), v);
    CHECK(average_gate_fidelity(found.dress(target_unitary(t)), v) > 1.0 - 1e-10);
  }
}

TEST_CASE("exchange oracle") {
  SUBCASE("zero-duration exchange is locally the identity") {
    const Eigen::Matrix4cd v = exchange_oracle_unitary(1.3, 0.0, std::sqrt(2.0));
    const Eigen::Matrix4cd id = target_unitary(GateTarget::identity);
    const LocalPhases ph = optimize_local_phases(id, v);
    CHECK(average_gate_fidelity(ph.dress(id), v) > 1.0 - 1e-6);
  }
  SUBCASE("oracle is a contraction") {
    // |11> can leak to the second spin excitation, so only |V x| <= |x| holds in general.
    const Eigen::Matrix4cd v = exchange_oracle_unitary(0.7, 3.1, std::sqrt(2.0));
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(v);
    CHECK(svd.singularValues().maxCoeff() < 1.0 + 1e-12);
    const Eigen::Matrix3cd single = v.topLeftCorner<3, 3>();
    CHECK((single.adjoint() * single - Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("calibration") {
    const ExchangeCalibration s = calibrate_exchange(GateTarget::sqrt_swap, std::sqrt(2.0));
    CHECK(s.oracle_fidelity > 0.999);
    CHECK(s.scaled_time > 0.0);
    const Eigen::Matrix4cd v = exchange_oracle_unitary(s.detuning_ratio, s.scaled_time, std::sqrt(2.0));
    const Eigen::Matrix4cd target = target_unitary(GateTarget::sqrt_swap);
    CHECK(average_gate_fidelity(optimize_local_phases(target, v).dress(target), v) ==
          doctest::Approx(s.oracle_fidelity).epsilon(1e-9));
    const ExchangeCalibration w = calibrate_exchange(GateTarget::swap, std::sqrt(2.0));
    CHECK(w.oracle_fidelity > 0.99);
  }
}

TEST_CASE("transfers") {
  // At delta = 20 the dressed transmon keeps (g_c/delta)^2 = 0.25% photon admixture.
  const SystemParams p = two_ensembles(0.1, 20.0);
  SUBCASE("ensemble to transmon and back") {
    const Schedule s = transfer_schedule(p, GateEndpoint::spins(0), GateEndpoint::bus());
    REQUIRE(s.size() == 1);
    const TransferReport r = evaluate_transfer(s, p, GateEndpoint::spins(0), GateEndpoint::bus());
    CHECK(r.target_population > 0.99);
    Schedule twice = s;
    twice.insert(twice.end(), s.begin(), s.end());
    const TransferReport back = evaluate_transfer(twice, p, GateEndpoint::spins(0), GateEndpoint::spins(0));
    CHECK(back.target_population > 0.98);
  }
  SUBCASE("ensemble to ensemble") {
    const Schedule s = transfer_schedule(p, GateEndpoint::spins(0), GateEndpoint::spins(1));
    CHECK(s.size() == 2);
    CHECK(evaluate_transfer(s, p, GateEndpoint::spins(0), GateEndpoint::spins(1)).target_population > 0.98);
  }
  SUBCASE("guards") {
    CHECK_THROWS_AS(transfer_schedule(p, GateEndpoint::bus(), GateEndpoint::bus()), DomainError);
    CHECK_THROWS_AS(transfer_schedule(p, GateEndpoint::spins(0), GateEndpoint::spins(5)), DomainError);
    SystemParams weak = p;
    weak.g_m = 1e-12;
    CHECK_THROWS_AS(transfer_schedule(weak, GateEndpoint::spins(0), GateEndpoint::bus()), DomainError);
    SystemParams close = p;
    close.delta = 1.0;
    CHECK_THROWS_AS(transfer_schedule(close, GateEndpoint::spins(0), GateEndpoint::bus()), DomainError);
  }
}

TEST_CASE("segment Hamiltonians are Hermitian") {
  const SystemParams p = two_ensembles();
  const EnumeratedBasis b({2, 2, 2}, std::vector<std::uint64_t>{100000000, 100000000});
  for (const auto& seg : sqrt_swap_schedule(p, 0, 1))
    CHECK(hermiticity_defect(build_hamiltonian(seg.overrides.apply(p), b).matrix()) == 0.0);
}

TEST_CASE("gate evaluation") {
  const SystemParams p = two_ensembles();
  SUBCASE("empty schedule is the identity") {
    const GateReport r = evaluate_gate({}, p, 0, 1, GateTarget::identity);
    CHECK(r.average_fidelity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.leakage < 1e-14);
  }
  SUBCASE("ideal sqrt(SWAP)") {
    const GateReport r = evaluate_gate(sqrt_swap_schedule(p, 0, 1), p, 0, 1, GateTarget::sqrt_swap);
    CHECK(r.average_fidelity > 0.99);
    CHECK(r.average_fidelity <= 1.0 + 1e-10);
    CHECK(r.worst_case_state_fidelity <= r.average_fidelity + 1e-12);
    CHECK(r.leakage < 0.01);
  }
  SUBCASE("double transfer composes to the identity") {
    const Schedule t = transfer_schedule(p, GateEndpoint::spins(0), GateEndpoint::bus());
    Schedule twice = t;
    twice.insert(twice.end(), t.begin(), t.end());
    // Out and back returns the excitation with a phase, equivalent to identity up to local Z.
    CHECK(evaluate_gate(twice, p, 0, 1, GateTarget::identity).average_fidelity > 0.999);
  }
  SUBCASE("dissipation lowers fidelity monotonically") {
    const Schedule s = sqrt_swap_schedule(p, 0, 1);
    EvaluateOptions o;
    o.dissipative = true;
    o.worst_case_samples = 50;
    double prev = evaluate_gate(s, p, 0, 1, GateTarget::sqrt_swap).average_fidelity;
    for (double rate : {1e-4, 1e-3, 3e-3}) {
      SystemParams q = p;
      q.kappa_c = rate;
      q.gamma_jj = rate;
      const GateReport r = evaluate_gate(s, q, 0, 1, GateTarget::sqrt_swap, o);
      CHECK(r.dissipative);
      CHECK(r.average_fidelity < prev);
      prev = r.average_fidelity;
    }
  }
  SUBCASE("single ensemble is rejected") {
    SystemParams one = p;
    one.ensembles.resize(1);
    CHECK_THROWS_AS(sqrt_swap_schedule(one, 0, 1), DomainError);
    CHECK_THROWS_AS(evaluate_gate({}, one, 0, 1, GateTarget::identity), DomainError);
  }
}
