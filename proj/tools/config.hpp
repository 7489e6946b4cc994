#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "noesc/esc.hpp"

namespace noesc::app {

/// Raised for unreadable, malformed or invalid configuration. The message
/// starts with the origin of the offending value (file:line, --set or preset).
struct ConfigError : Error {
  using Error::Error;
};

struct ExperimentConfig {
  struct Plant {
    std::string name = "example";
    double rho = 1.0;
    std::vector<double> x0{0.8, 3.0};
  } plant;

  struct Optimizer {
    double step = 0.002;
    double eps0 = 1e-2;
    std::size_t max_iter = 5000;
    std::string grad_mode = "analytic";  // or "fd"
    double fd_step = 1e-6;
  } optimizer;

  /// Per-component bounds; unset means unbounded.
  struct Constraints {
    std::vector<std::optional<double>> lower;
    std::vector<std::optional<double>> upper;
  } constraints;

  struct TrajectoryCfg {
    double y_min = -1.5;
    double y_max = 1.5;
    double delta_y = 0.5;
    std::optional<double> rho_sig;  // default 4 / (y_max - y_min + 2 delta_y)
    std::vector<double> gamma{0.01};
    double delta_k = 1.0;
  } trajectory;

  struct Bvp {
    double tol = 1e-8;
    std::size_t max_newton_iter = 50;
    std::vector<double> p_init{1.0};
    std::size_t mesh_steps = 1000;
  } bvp;

  struct Sim {
    double rk4_step = 1e-3;
    std::size_t store_every = 10;
  } sim;

  struct Output {
    std::string dir = "noesc_out";
  } output;
};

/// Flat dotted-key view of a layered configuration, remembering where each
/// value came from.
class ConfigLayers {
 public:
  struct Entry {
    YAML::Node value;
    std::string origin;
  };

  void apply_preset(const std::string& name);
  void apply_file(const std::string& path);
  void apply_text(const std::string& text, const std::string& origin_name);
  /// `key=value` with a dotted key; the value is parsed as YAML.
  void apply_override(const std::string& assignment);

  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  void flatten(const YAML::Node& node, const std::string& prefix, const std::string& origin_file,
               bool from_file);

  std::map<std::string, Entry> entries_;
};

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

/// Validates the layers against the schema and builds the typed config.
ExperimentConfig build_config(const ConfigLayers& layers);

/// Library-level configuration for the example plant and Rosenbrock performance.
struct Experiment {
  NormalFormPlant plant;
  PerformanceOracle oracle;
  ConstraintSet set;
  EscConfig esc;
  Vector x0;
};

Experiment make_experiment(const ExperimentConfig& cfg);

}  // namespace noesc::app
