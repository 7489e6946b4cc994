// noesc: run extremum seeking experiments and compare configurations.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "artifacts.hpp"
#include "config.hpp"

namespace {

using namespace noesc::app;
namespace fs = std::filesystem;

ExperimentConfig load(const std::string& config_path, const std::string& preset,
                      const std::vector<std::string>& overrides) {
  ConfigLayers layers;
  if (!preset.empty()) layers.apply_preset(preset);
  if (!config_path.empty()) {
    // A bare preset name is accepted where a path is expected.
    if (!fs::exists(config_path) && is_preset(config_path)) {
      layers.apply_preset(config_path);
    } else {
      layers.apply_file(config_path);
    }
  }
  for (const auto& o : overrides) layers.apply_override(o);
  ExperimentConfig cfg = build_config(layers);
  if (const char* env = std::getenv("NOESC_OUT"); env != nullptr && *env != '\0') {
    cfg.output.dir = env;
  }
  return cfg;
}

void report(const noesc::EscLog& log, std::ostream& os) {
  const auto& last = log.iterates.back();
  os << "termination: " << noesc::to_string(log.termination) << '\n'
     << "iterations:  " << log.transitions() << '\n'
     << "final state: (" << format_number(last.x(0)) << ", " << format_number(last.x(1))
     << ")\n"
     << "final J:     " << format_number(last.J) << '\n';
  if (!log.message.empty()) os << "message:     " << log.message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremum seeking control for output-constrained nonlinear plants"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
  auto* cfg_opt = run->add_option("--config", config_path, "Config file (YAML)");
  auto* preset_opt = run->add_option("--preset", preset, "Named preset")
                         ->check(CLI::IsMember(preset_names()));
  run->add_option("--set", overrides, "Override a config value, e.g. plant.rho=-1");
  run->callback([&] {
    if (cfg_opt->count() == 0 && preset_opt->count() == 0) {
      throw CLI::RequiredError("--config or --preset");
    }
  });

  std::string path_a;
  std::string path_b;
  std::string out_dir;
  auto* compare = app.add_subcommand("compare", "Run two configs and compare their transitions");
  compare->add_option("--a", path_a, "Config file or preset name for run A")->required();
  compare->add_option("--b", path_b, "Config file or preset name for run B")->required();
  compare->add_option("--out", out_dir, "Directory for compare.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ExperimentConfig cfg = load(config_path, preset, overrides);
      const noesc::EscLog log = run_experiment(cfg);
      write_run_artifacts(log, cfg, cfg.output.dir);
      report(log, std::cout);
      std::cout << "artifacts:   " << cfg.output.dir << '\n';
      return exit_code_for(log);
    }
    const ExperimentConfig cfg_a = load(path_a, "", {});
    const ExperimentConfig cfg_b = load(path_b, "", {});
    const noesc::EscLog log_a = run_experiment(cfg_a);
    const noesc::EscLog log_b = run_experiment(cfg_b);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "compare.json", std::ios::binary | std::ios::trunc);
    out << compare_report(log_a, cfg_a, log_b, cfg_b).dump(2) << '\n';
    std::cout << "A: ";
    report(log_a, std::cout);
    std::cout << "B: ";
    report(log_b, std::cout);
    return std::max(exit_code_for(log_a), exit_code_for(log_b));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const noesc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
