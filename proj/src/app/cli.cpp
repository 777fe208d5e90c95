#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace ejc::app {

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Embedded Jaynes-Cummings simulator: spin ensembles, transmon and cavity", "embedded-jc"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::size_t stop_after = 0;
  bool dump = false;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", "Closed-form couplings, spin count and regime report (SI config)"},
      {"spectrum", "Block eigenvalues, anharmonicity and embedded-JC analysis"},
      {"dynamics", "Unitary, Lindblad, cooling or dispersive-validation runs"},
      {"gate", "Transfer, sqrt(SWAP) and SWAP schedules with fidelity report"},
      {"sweep", "Parameter grid over another command, written as one CSV"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--set", sets, "Override a dotted config path, key=value (repeatable)");
    sub->add_option("--out", out_dir, "Output directory (default: config output_dir, else ./out)");
    sub->add_flag("--dump-basis", dump, "Also write basis.json with the ordered state labels");
    if (name == "sweep")
      sub->add_option("--stop-after", stop_after, "Stop after this many new points")->group("");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const RunConfig cfg = parse_run_config(load_config(config_path, sets));
    const std::filesystem::path dir = !out_dir.empty() ? out_dir : cfg.output_dir.value_or("out");
    OutputBundle bundle;
    if (command == "estimate") bundle = cmd_estimate(cfg);
    else if (command == "spectrum") bundle = cmd_spectrum(cfg);
    else if (command == "dynamics") bundle = cmd_dynamics(cfg);
    else if (command == "gate") bundle = cmd_gate(cfg);
    else bundle = cmd_sweep(cfg, {dir, stop_after > 0 ? std::optional<std::size_t>(stop_after) : std::nullopt});
    if (dump) bundle.files["basis.json"] = basis_dump(cfg).dump(2) + "\n";
    write_bundle(dir, bundle);
    std::cout << bundle.console;
    for (const auto& [name, _] : bundle.files) std::cout << "wrote " << (dir / name).string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << "embedded-jc " << command << ": error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace ejc::app
