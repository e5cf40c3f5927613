// ecsim: batch front-end for lossy ECS phase-estimation experiments.
//
//   ecsim sweep --alpha0 1.1307 --eta-start 1 --eta-stop 0.2 --eta-count 30 --probes EM,NF,UF --out unit_photon
//   ecsim qfi --alpha0 4 --eta 1
//   ecsim probabilities --alpha0 1 --phi 0 --readout parity
//   ecsim optimize --alpha0 1.1307 --eta 0.9 --format json
//   ecsim sweep --config run.cfg --eta-count 5

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ecsim/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lossy entangled-coherent-state interferometry"};
  app.require_subcommand(1);

  // Values are kept as text and applied in command-line order after the
  // config file, so flags override file settings.
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  static const std::vector<std::pair<std::string, std::string>> kFlags = {
      {"alpha0", "ECS amplitude"},
      {"alpha1", "reference amplitude"},
      {"phi", "phase (radians)"},
      {"eta", "arm transmission"},
      {"eta-arm2", "arm 2 transmission (defaults to --eta)"},
      {"reference-eta", "transmission of the reference beams"},
      {"eta-start", "first transmission of the sweep grid"},
      {"eta-stop", "last transmission of the sweep grid"},
      {"eta-count", "number of sweep grid points"},
      {"input-kind", "standard|even"},
      {"reference-kind", "even_cat|coherent"},
      {"readout", "parity|reference"},
      {"probes", "comma list of EM,EP,EF,EVEN_EF,NF,UF"},
      {"tail-budget", "largest truncated probability"},
      {"alpha1-count", "optimizer grid points along alpha1"},
      {"phi-count", "optimizer grid points along phi"},
      {"threads", "worker threads for sweeps (0 = all cores)"},
      {"out", "output file (sweep: prefix)"},
      {"format", "csv|json"},
  };

  static const std::vector<std::pair<std::string, std::string>> kCommands = {
      {"sweep", "precision curves over a transmission grid"},
      {"qfi", "quantum Fisher information of the lossy input"},
      {"probabilities", "outcome table of a read-out"},
      {"optimize", "optimal reference amplitude and phase"},
  };
  for (const auto& [name, description] : kCommands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "key = value settings file");
    for (const auto& [flag, help] : kFlags) {
      sub->add_option_function<std::string>(
          "--" + flag, [&overrides, flag = flag](const std::string& v) { overrides.emplace_back(flag, v); }, help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ecsim::kExitOk : ecsim::kExitConfig;
  }

  ecsim::RunManifest manifest;
  try {
    if (!config_path.empty()) ecsim::apply_config_file(manifest, config_path);
    manifest.command = ecsim::parse_command(app.get_subcommands().front()->get_name());
    for (const auto& [k, v] : overrides) ecsim::apply_setting(manifest, k, v);
  } catch (const ecsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ecsim::kExitConfig;
  }
  return ecsim::run(manifest, std::cout, std::cerr);
}
