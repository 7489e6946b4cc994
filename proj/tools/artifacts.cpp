#include "artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace noesc::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct RunMetrics {
  std::vector<double> chord;
  std::vector<double> max_abs_x1;
  std::vector<double> max_abs_eta;
};

RunMetrics window_metrics(const EscLog& log) {
  RunMetrics m;
  for (std::size_t i = 1; i < log.iterates.size(); ++i) {
    const auto& rec = log.iterates[i];
    m.chord.push_back(rec.chord_deviation);
    m.max_abs_x1.push_back(rec.max_abs_y);
    m.max_abs_eta.push_back(rec.max_abs_eta);
  }
  return m;
}

double max_prefix(const std::vector<double>& v, std::size_t count) {
  double out = 0.0;
  for (std::size_t i = 0; i < std::min(count, v.size()); ++i) out = std::max(out, v[i]);
  return out;
}

json run_block(const EscLog& log, const ExperimentConfig& cfg, const RunMetrics& m) {
  return json{
      {"config", config_to_json(cfg)},
      {"termination", to_string(log.termination)},
      {"iterations", log.transitions()},
      {"first_chord_deviation", m.chord.empty() ? 0.0 : m.chord.front()},
      {"max_chord_deviation", max_prefix(m.chord, m.chord.size())},
      {"max_abs_x1", max_prefix(m.max_abs_x1, m.max_abs_x1.size())},
      {"max_abs_eta_first5", max_prefix(m.max_abs_eta, 5)},
      {"windows", json{{"chord_deviation", m.chord},
                       {"max_abs_x1", m.max_abs_x1},
                       {"max_abs_eta", m.max_abs_eta}}},
  };
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
  json bounds = json::object();
  for (std::size_t i = 0; i < cfg.constraints.lower.size(); ++i) {
    const std::string key = "x" + std::to_string(i + 1);
    bounds[key + "_min"] = optional_number(cfg.constraints.lower[i]);
    bounds[key + "_max"] = optional_number(cfg.constraints.upper[i]);
  }
  return json{
      {"plant", {{"name", cfg.plant.name}, {"rho", cfg.plant.rho}, {"x0", cfg.plant.x0}}},
      {"optimizer",
       {{"step", cfg.optimizer.step},
        {"eps0", cfg.optimizer.eps0},
        {"max_iter", cfg.optimizer.max_iter},
        {"grad_mode", cfg.optimizer.grad_mode},
        {"fd_step", cfg.optimizer.fd_step}}},
      {"constraints", bounds},
      {"trajectory",
       {{"y_min", cfg.trajectory.y_min},
        {"y_max", cfg.trajectory.y_max},
        {"delta_y", cfg.trajectory.delta_y},
        {"rho_sig", optional_number(cfg.trajectory.rho_sig)},
        {"gamma", cfg.trajectory.gamma},
        {"delta_k", cfg.trajectory.delta_k}}},
      {"bvp",
       {{"tol", cfg.bvp.tol},
        {"max_newton_iter", cfg.bvp.max_newton_iter},
        {"p_init", cfg.bvp.p_init},
        {"mesh_steps", cfg.bvp.mesh_steps}}},
      {"sim", {{"rk4_step", cfg.sim.rk4_step}, {"store_every", cfg.sim.store_every}}},
      {"output", {{"dir", cfg.output.dir}}},
  };
}

json summary_json(const EscLog& log, const ExperimentConfig& cfg) {
  double max_abs_y = 0.0;
  double max_tracking = 0.0;
  double max_residual = 0.0;
  for (const auto& rec : log.iterates) {
    max_abs_y = std::max(max_abs_y, rec.max_abs_y);
    max_tracking = std::max(max_tracking, rec.tracking_error);
    max_residual = std::max(max_residual, rec.bvp_residual);
  }
  const auto& last = log.iterates.back();
  return json{
      {"iterations", log.transitions()},
      {"final_state", vector_json(last.x)},
      {"final_J", last.J},
      {"final_grad_norm", last.grad_norm},
      {"final_time", last.t},
      {"max_abs_y", max_abs_y},
      {"max_tracking_error", max_tracking},
      {"max_bvp_residual", max_residual},
      {"termination", to_string(log.termination)},
      {"message", log.message},
      {"config", config_to_json(cfg)},
  };
}

EscLog run_experiment(const ExperimentConfig& cfg) {
  const Experiment ex = make_experiment(cfg);
  return run_esc(ex.plant, ex.oracle, ex.set, ex.esc, ex.x0);
}

int exit_code_for(const EscLog& log) { return log.clean() ? 0 : 2; }

void write_iterates_csv(const EscLog& log, const fs::path& path) {
  auto out = open_output(path);
  const auto n = log.iterates.front().x.size();
  const auto m = log.config.p_init.size();
  out << "k,t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  out << ",J,grad_norm";
  for (Eigen::Index i = 0; i < m; ++i) out << ",p" << i + 1;
  out << ",bvp_residual,tracking_error";
  for (Eigen::Index i = 0; i < n; ++i) out << ",target" << i + 1;
  out << ",newton_iterations,chord_deviation,max_abs_y,max_abs_eta\n";
  for (const auto& rec : log.iterates) {
    out << rec.k << ',' << format_number(rec.t);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(rec.x(i));
    out << ',' << format_number(rec.J) << ',' << format_number(rec.grad_norm);
    for (Eigen::Index i = 0; i < m; ++i) {
      out << ',';
      if (rec.p_star.size() == m) out << format_number(rec.p_star(i));
    }
    out << ',' << format_number(rec.bvp_residual) << ',' << format_number(rec.tracking_error);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(rec.target(i));
    out << ',' << rec.newton_iterations << ',' << format_number(rec.chord_deviation) << ','
        << format_number(rec.max_abs_y) << ',' << format_number(rec.max_abs_eta) << '\n';
  }
}

void write_trajectory_csv(const EscLog& log, const fs::path& path) {
  auto out = open_output(path);
  const auto n = log.iterates.front().x.size();
  out << 't';
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  out << ",u,y,J\n";
  for (const auto& s : log.dense) {
    out << format_number(s.t);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(s.x(i));
    out << ',' << format_number(s.u) << ',' << format_number(s.y) << ',' << format_number(s.J)
        << '\n';
  }
}

void write_run_artifacts(const EscLog& log, const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_iterates_csv(log, dir / "iterates.csv");
  write_trajectory_csv(log, dir / "trajectory.csv");
  auto out = open_output(dir / "summary.json");
  out << summary_json(log, cfg).dump(2) << '\n';
}

json compare_report(const EscLog& a, const ExperimentConfig& cfg_a, const EscLog& b,
                    const ExperimentConfig& cfg_b) {
  const RunMetrics ma = window_metrics(a);
  const RunMetrics mb = window_metrics(b);
  json ja = run_block(a, cfg_a, ma);
  json jb = run_block(b, cfg_b, mb);
  json diff;
  for (const char* key :
       {"first_chord_deviation", "max_chord_deviation", "max_abs_x1", "max_abs_eta_first5"}) {
    diff[key] = jb[key].get<double>() - ja[key].get<double>();
  }
  return json{{"a", std::move(ja)}, {"b", std::move(jb)}, {"b_minus_a", std::move(diff)}};
}

}  // namespace noesc::app
