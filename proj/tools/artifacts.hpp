#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace noesc::app {

/// Fixed 17-significant-digit formatting used by every CSV column.
std::string format_number(double v);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
nlohmann::json summary_json(const EscLog& log, const ExperimentConfig& cfg);

EscLog run_experiment(const ExperimentConfig& cfg);

/// 0 for a converged run, 2 when the run stopped early (no convergence,
/// iteration cap, blow-up).
int exit_code_for(const EscLog& log);

void write_iterates_csv(const EscLog& log, const std::filesystem::path& path);
void write_trajectory_csv(const EscLog& log, const std::filesystem::path& path);
void write_run_artifacts(const EscLog& log, const ExperimentConfig& cfg,
                         const std::filesystem::path& dir);

/// Per-window chord deviation of y*, max |x1| and max |eta| for two runs,
/// plus the first-transition and first-five-window aggregates and B - A.
nlohmann::json compare_report(const EscLog& a, const ExperimentConfig& cfg_a, const EscLog& b,
                              const ExperimentConfig& cfg_b);

}  // namespace noesc::app
