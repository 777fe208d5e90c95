#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "commands.hpp"
#include "ejc/errors.hpp"

namespace fs = std::filesystem;
using namespace ejc::app;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ejc_cli_" + tag + "_" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const TempDir& dir, const std::string& name, const Json& j) {
  const fs::path p = dir.path / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(std::vector<std::string> args) { return run_cli(args); }

Json embedded_config() {
  return Json::parse(R"({
    "params": {"g_c": 1.0, "g_m": 2e-6, "ensembles": [{"n_spins": 100000000, "detuning": 1.0}]},
    "spectrum": {"embedded": true}
  })");
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("spectrum command and determinism") {
  TempDir d("spectrum");
  const auto cfg = write_config(d, "c.json", embedded_config());
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", (d.path / "a").string()}) == kExitOk);
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", (d.path / "b").string()}) == kExitOk);
  for (const auto* f : {"spectrum.json", "eigenvalues.csv"}) CHECK(read(d.path / "a" / f) == read(d.path / "b" / f));
  const Json j = Json::parse(read(d.path / "a" / "spectrum.json"));
  CHECK(std::abs(j["spectrum"]["embedded"]["splitting"].get<double>() / (std::sqrt(2.0) * 0.02) - 1.0) < 1e-2);
  const auto rows = parse_csv(read(d.path / "a" / "eigenvalues.csv"));
  CHECK(rows[0] == std::vector<std::string>{"block", "index", "eigenvalue"});
  CHECK(read(d.path / "a" / "eigenvalues.csv").find("\r\n") != std::string::npos);
}

TEST_CASE("pure JC anharmonicity through the CLI") {
  TempDir d("anh");
  Json c = embedded_config();
  c["params"]["g_m"] = 0.0;
  c["params"]["ensembles"][0]["detuning"] = 0.0;
  c["spectrum"]["embedded"] = false;
  const auto cfg = write_config(d, "c.json", c);
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--out", d.path.string()}) == kExitOk);
  const Json j = Json::parse(read(d.path / "spectrum.json"));
  CHECK(std::abs(j["spectrum"]["anharmonicity"]["manifold_gap"].get<double>() - (std::sqrt(2.0) - 1.0)) < 1e-10);
  CHECK(std::abs(j["spectrum"]["anharmonicity"]["ladder_step"].get<double>() - (2.0 - std::sqrt(2.0))) < 1e-10);
}

TEST_CASE("validation failures write nothing") {
  TempDir d("fail");
  const fs::path out = d.path / "out";
  const auto cfg = write_config(d, "c.json", embedded_config());
  CHECK(run({"spectrum", "--config", cfg.string(), "--set", "params.g_c=-1", "--out", out.string()}) == kExitConfig);
  CHECK(run({"spectrum", "--config", cfg.string(), "--set", "params.nonsense=1", "--out", out.string()}) == kExitConfig);
  CHECK(run({"spectrum", "--config", (d.path / "missing.json").string(), "--out", out.string()}) == kExitConfig);
  CHECK(run({"spectrum", "--config", cfg.string(), "--set", "truncation.max_dimension=10", "--out", out.string()}) ==
        kExitCap);
  CHECK(run({"frobnicate", "--config", cfg.string()}) == kExitConfig);
  CHECK(run({"spectrum"}) == kExitConfig);
  {
    std::ofstream(d.path / "broken.json") << "{\"params\": ";
  }
  CHECK(run({"spectrum", "--config", (d.path / "broken.json").string(), "--out", out.string()}) == kExitConfig);
  Json dyn = embedded_config();
  dyn["dynamics"] = Json::parse(R"({"kind": "unitary", "t_grid": [], "initial": {"transmon": 1}})");
  const auto dcfg = write_config(d, "dyn.json", dyn);
  CHECK(run({"dynamics", "--config", dcfg.string(), "--out", out.string()}) == kExitConfig);
  CHECK(run({"gate", "--config", cfg.string(), "--out", out.string()}) == kExitConfig);
  CHECK(run({"estimate", "--config", cfg.string(), "--out", out.string()}) == kExitConfig);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
  CHECK(exit_code_for(ejc::DomainError("x")) == kExitConfig);
  CHECK(exit_code_for(ejc::DimensionError("x")) == kExitCap);
  CHECK(exit_code_for(ejc::NumericalError("x")) == kExitNumerical);
}

TEST_CASE("estimate of the silicon scenario") {
  TempDir d("estimate");
  const Json c = Json::parse(R"({
    "mode": "SI",
    "params": {"kappa_c": 1e6, "gamma_jj": 1e6},
    "estimate": {"omega_c": 62831853071.795865, "mode_volume": 1e-12, "density_cm3": 1e16,
                 "thickness": 1e-5, "width": 1e-5, "length": 1e-4, "temperature": 0.07}
  })");
  const auto cfg = write_config(d, "c.json", c);
  REQUIRE(run({"estimate", "--config", cfg.string(), "--out", (d.path / "a").string()}) == kExitOk);
  REQUIRE(run({"estimate", "--config", cfg.string(), "--out", (d.path / "b").string()}) == kExitOk);
  CHECK(read(d.path / "a" / "estimate.json") == read(d.path / "b" / "estimate.json"));
  const Json j = Json::parse(read(d.path / "a" / "estimate.json"))["estimate"];
  CHECK(j["n_spins"].get<std::uint64_t>() == 100000000u);
  CHECK(j["g_m_same_order_as_reference"].get<bool>());
  CHECK(j["thermal_occupation"].get<double>() < 1e-2);
  CHECK(run({"estimate", "--config", cfg.string(), "--set", "estimate.density_cm3=0", "--out",
             (d.path / "c").string()}) == kExitConfig);
  CHECK_FALSE(fs::exists(d.path / "c"));
}

TEST_CASE("dynamics commands") {
  TempDir d("dynamics");
  SUBCASE("Rabi oscillation column") {
    const Json c = Json::parse(R"({
      "params": {"g_c": 1.0, "g_m": 0.0, "ensembles": [{"n_spins": 1}]},
      "truncation": {"n_max": 2, "k_max": 1, "total_excitation_max": 2},
      "dynamics": {"kind": "unitary", "t_end": 6.0, "n_points": 61,
                   "initial": {"transmon": 1}, "observables": ["photon_number"]}
    })");
    const auto cfg = write_config(d, "c.json", c);
    REQUIRE(run({"dynamics", "--config", cfg.string(), "--out", d.path.string()}) == kExitOk);
    const auto rows = parse_csv(read(d.path / "trajectory.csv"));
    REQUIRE(rows[0] == std::vector<std::string>{"t", "norm", "photon_number"});
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double t = std::stod(rows[r][0]);
      CHECK(std::abs(std::stod(rows[r][2]) - std::pow(std::sin(t), 2)) < 1e-9);
    }
  }
  SUBCASE("Lindblad decay fit in the sidecar") {
    const Json c = Json::parse(R"({
      "params": {"g_c": 1.0, "g_m": 0.0, "delta": 1000.0, "kappa_c": 0.2, "ensembles": [{"n_spins": 1}]},
      "truncation": {"n_max": 1, "k_max": 1, "total_excitation_max": 1},
      "dynamics": {"kind": "lindblad", "t_end": 40.0, "n_points": 401,
                   "initial": {"photons": 1}, "observables": ["photon_number"], "fit": "photon_number"}
    })");
    const auto cfg = write_config(d, "c.json", c);
    REQUIRE(run({"dynamics", "--config", cfg.string(), "--out", d.path.string()}) == kExitOk);
    const Json j = Json::parse(read(d.path / "trajectory.json"));
    CHECK(j["fit"]["rate"].get<double>() == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(j.contains("params"));
    CHECK(j.contains("tolerances"));
  }
}

TEST_CASE("gate command") {
  TempDir d("gate");
  const Json c = Json::parse(R"({
    "params": {"g_c": 1.0, "g_m": 1e-5, "delta": 10.0,
               "ensembles": [{"n_spins": 100000000}, {"n_spins": 100000000}]},
    "gate": {"kind": "sqrt_swap", "worst_case_samples": 100}
  })");
  const auto cfg = write_config(d, "c.json", c);
  REQUIRE(run({"gate", "--config", cfg.string(), "--out", d.path.string()}) == kExitOk);
  const Json j = Json::parse(read(d.path / "gate.json"));
  const double ideal = j["gate"]["report"]["average_fidelity"].get<double>();
  CHECK(ideal > 0.99);
  CHECK(j["gate"]["schedule"].size() == 3);
  REQUIRE(run({"gate", "--config", cfg.string(), "--set", "params.kappa_c=1e-3", "--set", "params.gamma_jj=1e-3",
               "--set", "gate.dissipative=true", "--out", (d.path / "diss").string()}) == kExitOk);
  const Json k = Json::parse(read(d.path / "diss" / "gate.json"));
  CHECK(k["gate"]["report"]["average_fidelity"].get<double>() < ideal);
}

TEST_CASE("sweep") {
  TempDir d("sweep");
  const Json c = Json::parse(R"({
    "params": {"g_c": 1e9, "g_m": 1e3, "kappa_c": 1e6, "gamma_jj": 1e6, "ensembles": [{"n_spins": 1000}]},
    "sweep": {"command": "regime",
              "axes": [{"path": "params.ensembles.0.n_spins", "start": 1e3, "stop": 1e9, "num": 49,
                        "scale": "log", "integer": true}],
              "outputs": ["two_level_valid", "anharmonicity_scale"]}
  })");
  const auto cfg = write_config(d, "c.json", c);

  SUBCASE("threshold crossing within a decade of 1e6") {
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", d.path.string()}) == kExitOk);
    const auto rows = parse_csv(read(d.path / "sweep.csv"));
    REQUIRE(rows.size() == 50);
    CHECK(rows[0] == std::vector<std::string>{"index", "params.ensembles.0.n_spins", "two_level_valid",
                                              "anharmonicity_scale", "error"});
    double crossing = 0.0;
    for (std::size_t r = 2; r < rows.size(); ++r)
      if (rows[r - 1][2] == "false" && rows[r][2] == "true") crossing = std::stod(rows[r][1]);
    CHECK(crossing > 1e5);
    CHECK(crossing < 1e7);
  }
  SUBCASE("interrupted and resumed sweep is byte-identical") {
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (d.path / "full").string()}) == kExitOk);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (d.path / "part").string(), "--stop-after", "9"}) ==
            kExitOk);
    CHECK_FALSE(fs::exists(d.path / "part" / "sweep.csv"));
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (d.path / "part").string()}) == kExitOk);
    CHECK(read(d.path / "part" / "sweep.csv") == read(d.path / "full" / "sweep.csv"));
    CHECK(read(d.path / "part" / "sweep.json") == read(d.path / "full" / "sweep.json"));
    // A manifest from a different configuration is refused.
    CHECK(run({"sweep", "--config", cfg.string(), "--set", "params.g_m=2e3", "--out", (d.path / "part").string()}) ==
          kExitConfig);
  }
  SUBCASE("thread count does not change the output") {
    setenv("EMBEDDED_JC_THREADS", "1", 1);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (d.path / "one").string()}) == kExitOk);
    setenv("EMBEDDED_JC_THREADS", "4", 1);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (d.path / "four").string()}) == kExitOk);
    unsetenv("EMBEDDED_JC_THREADS");
    CHECK(read(d.path / "one" / "sweep.csv") == read(d.path / "four" / "sweep.csv"));
  }
  SUBCASE("one-point sweep equals the single command") {
    Json s = embedded_config();
    s["sweep"] = Json::parse(R"({"command": "spectrum", "axes": [{"path": "params.g_m", "values": [2e-6]}],
                                 "outputs": ["embedded.splitting"]})");
    const auto scfg = write_config(d, "s.json", s);
    REQUIRE(run({"sweep", "--config", scfg.string(), "--out", (d.path / "s").string()}) == kExitOk);
    REQUIRE(run({"spectrum", "--config", scfg.string(), "--out", (d.path / "single").string()}) == kExitOk);
    const auto rows = parse_csv(read(d.path / "s" / "sweep.csv"));
    const Json j = Json::parse(read(d.path / "single" / "spectrum.json"));
    CHECK(std::stod(rows[1][2]) == j["spectrum"]["embedded"]["splitting"].get<double>());
  }
  SUBCASE("per-point failures go to the error column") {
    Json s = c;
    s["sweep"]["axes"][0] = Json::parse(R"({"path": "params.g_m", "values": [1e3, -1.0, 2e3]})");
    const auto scfg = write_config(d, "e.json", s);
    REQUIRE(run({"sweep", "--config", scfg.string(), "--out", (d.path / "e").string()}) == kExitOk);
    const auto rows = parse_csv(read(d.path / "e" / "sweep.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].back().empty());
    CHECK(rows[2].back().rfind("exit 2", 0) == 0);
    CHECK(rows[3].back().empty());
  }
  SUBCASE("grid limits") {
    Json s = c;
    s["sweep"]["axes"] = Json::parse(R"([{"path": "params.g_m", "start": 1, "stop": 2, "num": 1000},
                                         {"path": "params.g_c", "start": 1, "stop": 2, "num": 1000}])");
    const auto scfg = write_config(d, "big.json", s);
    CHECK(run({"sweep", "--config", scfg.string(), "--out", (d.path / "big").string()}) == kExitConfig);
    CHECK_FALSE(fs::exists(d.path / "big"));
  }
}

TEST_CASE("basis dump") {
  TempDir d("basis");
  const auto cfg = write_config(d, "c.json", embedded_config());
  REQUIRE(run({"spectrum", "--config", cfg.string(), "--dump-basis", "--out", d.path.string()}) == kExitOk);
  const Json j = Json::parse(read(d.path / "basis.json"));
  CHECK(j["states"][0].get<std::string>() == "a,n=0,k=(0)");
  CHECK(j["dimension"].get<std::size_t>() == j["states"].size());
}
