#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

namespace noesc::app {

namespace {

// Values pinned by the worked two-state example.
constexpr const char* kS4Default = R"(
plant: {name: example, rho: 1.0, x0: [0.8, 3.0]}
optimizer: {step: 0.002, eps0: 0.01, max_iter: 5000, grad_mode: analytic, fd_step: 1.0e-6}
constraints: {x1_min: -1.5, x1_max: 1.5}
trajectory: {y_min: -1.5, y_max: 1.5, delta_y: 0.5, rho_sig: 4.0, gamma: [0.01], delta_k: 1.0}
bvp: {tol: 1.0e-8, max_newton_iter: 50, p_init: [1.0], mesh_steps: 1000}
sim: {rk4_step: 1.0e-3, store_every: 10}
)";

struct PresetDef {
  const char* name;
  const char* extra;
};

constexpr PresetDef kPresets[] = {
    {"s4-default", ""},
    {"s4-unstable", "plant: {rho: -1.0}"},
    {"s4-gamma1", "trajectory: {gamma: [1.0]}"},
};

const std::set<std::string>& scalar_keys() {
  static const std::set<std::string> keys{
      "plant.name",          "plant.rho",         "optimizer.step",
      "optimizer.eps0",      "optimizer.max_iter", "optimizer.grad_mode",
      "optimizer.fd_step",   "trajectory.y_min",  "trajectory.y_max",
      "trajectory.delta_y",  "trajectory.rho_sig", "trajectory.delta_k",
      "bvp.tol",             "bvp.max_newton_iter", "bvp.mesh_steps",
      "sim.rk4_step",        "sim.store_every",   "output.dir"};
  return keys;
}

const std::set<std::string>& vector_keys() {
  static const std::set<std::string> keys{"plant.x0", "trajectory.gamma", "bvp.p_init"};
  return keys;
}

const std::regex& bound_key() {
  static const std::regex re(R"(constraints\.x([1-9][0-9]*)_(min|max))");
  return re;
}

[[noreturn]] void fail(const ConfigLayers::Entry& e, const std::string& key,
                       const std::string& what) {
  throw ConfigError(e.origin + ": " + key + ": " + what);
}

double to_double(const ConfigLayers::Entry& e, const std::string& key) {
  try {
    if (!e.value.IsScalar()) fail(e, key, "expected a number");
    return e.value.as<double>();
  } catch (const YAML::Exception&) {
    fail(e, key, "expected a number, got '" + e.value.Scalar() + "'");
  }
}

std::size_t to_count(const ConfigLayers::Entry& e, const std::string& key) {
  const double v = to_double(e, key);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e12) fail(e, key, "expected a positive integer");
  return static_cast<std::size_t>(v);
}

std::vector<double> to_vector(const ConfigLayers::Entry& e, const std::string& key) {
  std::vector<double> out;
  try {
    if (e.value.IsSequence()) {
      for (const auto& item : e.value) out.push_back(item.as<double>());
    } else if (e.value.IsScalar()) {
      out.push_back(e.value.as<double>());
    } else {
      fail(e, key, "expected a number or a list of numbers");
    }
  } catch (const YAML::Exception&) {
    fail(e, key, "expected a number or a list of numbers");
  }
  if (out.empty()) fail(e, key, "list must not be empty");
  return out;
}

void require_positive(const ConfigLayers::Entry& e, const std::string& key, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(e, key, "must be strictly positive and finite");
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

bool is_preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return true;
  }
  return false;
}

void ConfigLayers::flatten(const YAML::Node& node, const std::string& prefix,
                           const std::string& origin_file, bool from_file) {
  for (const auto& kv : node) {
    const std::string key = (prefix.empty() ? "" : prefix + ".") + kv.first.as<std::string>();
    const YAML::Node& value = kv.second;
    if (value.IsMap()) {
      flatten(value, key, origin_file, from_file);
      continue;
    }
    std::string origin = origin_file;
    if (from_file && !kv.first.Mark().is_null()) {
      origin += ":" + std::to_string(kv.first.Mark().line + 1);
    }
    entries_[key] = Entry{value, origin};
  }
}

void ConfigLayers::apply_text(const std::string& text, const std::string& origin_name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin_name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) return;
  if (!root.IsMap()) throw ConfigError(origin_name + ":1: top level must be a mapping");
  flatten(root, "", origin_name, true);
}

void ConfigLayers::apply_preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) {
      const std::string origin = "preset " + name;
      flatten(YAML::Load(kS4Default), "", origin, false);
      flatten(YAML::Load(p.extra), "", origin, false);
      return;
    }
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void ConfigLayers::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str(), path);
}

void ConfigLayers::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set " + assignment + ": expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("--set " + assignment + ": " + e.what());
  }
  entries_[key] = Entry{value, "--set " + assignment};
}

ExperimentConfig build_config(const ConfigLayers& layers) {
  ExperimentConfig cfg;
  std::map<std::size_t, std::pair<std::optional<double>, std::optional<double>>> bounds;

  for (const auto& [key, e] : layers.entries()) {
    std::smatch m;
    if (std::regex_match(key, m, bound_key())) {
      const auto idx = std::stoul(m[1].str());
      std::optional<double> v;
      if (!e.value.IsNull()) v = to_double(e, key);
      if (v && std::isnan(*v)) fail(e, key, "bound must not be NaN");
      (m[2] == "min" ? bounds[idx].first : bounds[idx].second) = v;
      continue;
    }
    if (!scalar_keys().contains(key) && !vector_keys().contains(key)) {
      fail(e, key, "unknown configuration key");
    }
    if (vector_keys().contains(key)) {
      const auto v = to_vector(e, key);
      if (key == "plant.x0") cfg.plant.x0 = v;
      if (key == "trajectory.gamma") {
        for (double g : v) require_positive(e, key, g);
        cfg.trajectory.gamma = v;
      }
      if (key == "bvp.p_init") cfg.bvp.p_init = v;
      continue;
    }

    if (key == "plant.name") {
      cfg.plant.name = e.value.Scalar();
      if (cfg.plant.name != "example") fail(e, key, "only the 'example' plant is available");
    } else if (key == "plant.rho") {
      cfg.plant.rho = to_double(e, key);
      if (cfg.plant.rho == 0.0 || !std::isfinite(cfg.plant.rho)) {
        fail(e, key, "must be finite and nonzero");
      }
    } else if (key == "optimizer.step") {
      require_positive(e, key, cfg.optimizer.step = to_double(e, key));
    } else if (key == "optimizer.eps0") {
      require_positive(e, key, cfg.optimizer.eps0 = to_double(e, key));
    } else if (key == "optimizer.max_iter") {
      cfg.optimizer.max_iter = to_count(e, key);
    } else if (key == "optimizer.grad_mode") {
      cfg.optimizer.grad_mode = e.value.Scalar();
      if (cfg.optimizer.grad_mode != "analytic" && cfg.optimizer.grad_mode != "fd") {
        fail(e, key, "expected 'analytic' or 'fd'");
      }
    } else if (key == "optimizer.fd_step") {
      require_positive(e, key, cfg.optimizer.fd_step = to_double(e, key));
    } else if (key == "trajectory.y_min") {
      cfg.trajectory.y_min = to_double(e, key);
    } else if (key == "trajectory.y_max") {
      cfg.trajectory.y_max = to_double(e, key);
    } else if (key == "trajectory.delta_y") {
      require_positive(e, key, cfg.trajectory.delta_y = to_double(e, key));
    } else if (key == "trajectory.rho_sig") {
      if (e.value.IsNull()) {
        cfg.trajectory.rho_sig.reset();
      } else {
        const double v = to_double(e, key);
        require_positive(e, key, v);
        cfg.trajectory.rho_sig = v;
      }
    } else if (key == "trajectory.delta_k") {
      require_positive(e, key, cfg.trajectory.delta_k = to_double(e, key));
    } else if (key == "bvp.tol") {
      require_positive(e, key, cfg.bvp.tol = to_double(e, key));
    } else if (key == "bvp.max_newton_iter") {
      cfg.bvp.max_newton_iter = to_count(e, key);
    } else if (key == "bvp.mesh_steps") {
      cfg.bvp.mesh_steps = to_count(e, key);
    } else if (key == "sim.rk4_step") {
      require_positive(e, key, cfg.sim.rk4_step = to_double(e, key));
    } else if (key == "sim.store_every") {
      cfg.sim.store_every = to_count(e, key);
    } else if (key == "output.dir") {
      cfg.output.dir = e.value.Scalar();
      if (cfg.output.dir.empty()) fail(e, key, "must not be empty");
    }
  }

  const auto origin_of = [&](const std::string& key) {
    const auto it = layers.entries().find(key);
    return it == layers.entries().end() ? std::string("defaults") : it->second.origin;
  };

  if (!(cfg.trajectory.y_min < cfg.trajectory.y_max)) {
    throw ConfigError(origin_of("trajectory.y_max") + ": trajectory.y_max: must exceed y_min");
  }
  constexpr std::size_t n = 2;
  if (cfg.plant.x0.size() != n) {
    throw ConfigError(origin_of("plant.x0") + ": plant.x0: expected " + std::to_string(n) +
                      " components");
  }
  if (cfg.trajectory.gamma.size() != n - 1) {
    throw ConfigError(origin_of("trajectory.gamma") + ": trajectory.gamma: expected " +
                      std::to_string(n - 1) + " entries");
  }
  if (cfg.bvp.p_init.size() != n - 1) {
    throw ConfigError(origin_of("bvp.p_init") + ": bvp.p_init: expected " +
                      std::to_string(n - 1) + " entries");
  }
  cfg.constraints.lower.assign(n, std::nullopt);
  cfg.constraints.upper.assign(n, std::nullopt);
  for (const auto& [idx, lu] : bounds) {
    const std::string key = "constraints.x" + std::to_string(idx);
    if (idx > n) throw ConfigError(origin_of(key + "_min") + ": " + key + ": no such state");
    cfg.constraints.lower[idx - 1] = lu.first;
    cfg.constraints.upper[idx - 1] = lu.second;
    if (lu.first && lu.second && *lu.first > *lu.second) {
      throw ConfigError(origin_of(key + "_max") + ": " + key + "_max: below " + key + "_min");
    }
  }
  return cfg;
}

Experiment make_experiment(const ExperimentConfig& cfg) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto n = static_cast<Eigen::Index>(cfg.plant.x0.size());
  Vector lo = Vector::Constant(n, -inf);
  Vector hi = Vector::Constant(n, inf);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (ui < cfg.constraints.lower.size() && cfg.constraints.lower[ui]) {
      lo(i) = *cfg.constraints.lower[ui];
    }
    if (ui < cfg.constraints.upper.size() && cfg.constraints.upper[ui]) {
      hi(i) = *cfg.constraints.upper[ui];
    }
  }

  EscConfig esc;
  esc.pgd.step = cfg.optimizer.step;
  esc.pgd.eps0 = cfg.optimizer.eps0;
  esc.pgd.max_iter = cfg.optimizer.max_iter;
  esc.map = SaturationMap::from_output_bounds(cfg.trajectory.y_min, cfg.trajectory.y_max,
                                              cfg.trajectory.delta_y, cfg.trajectory.rho_sig);
  esc.gamma = Eigen::Map<const Vector>(cfg.trajectory.gamma.data(),
                                       static_cast<Eigen::Index>(cfg.trajectory.gamma.size()));
  esc.delta_k = cfg.trajectory.delta_k;
  esc.p_init = Eigen::Map<const Vector>(cfg.bvp.p_init.data(),
                                        static_cast<Eigen::Index>(cfg.bvp.p_init.size()));
  esc.bvp.tol = cfg.bvp.tol;
  esc.bvp.max_newton_iter = cfg.bvp.max_newton_iter;
  esc.bvp.mesh_steps = cfg.bvp.mesh_steps;
  esc.sim.step = cfg.sim.rk4_step;
  esc.sim.stores_every = cfg.sim.store_every;

  NormalFormPlant plant = example_plant(cfg.plant.rho);
  plant.y_min = cfg.trajectory.y_min;
  plant.y_max = cfg.trajectory.y_max;

  return Experiment{std::move(plant),
                    rosenbrock_oracle(cfg.optimizer.grad_mode == "analytic", cfg.optimizer.fd_step),
                    ConstraintSet::box(lo, hi), std::move(esc),
                    Eigen::Map<const Vector>(cfg.plant.x0.data(), n)};
}

}  // namespace noesc::app
