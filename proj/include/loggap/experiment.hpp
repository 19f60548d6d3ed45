#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

enum class Task { Spectrum, Interlace, Eigenspace, AlphaProfile, CovarianceDominance, Section, BoundsReport, Sweep };

std::string to_string(Task t);
Task task_from_string(const std::string& name);

struct ExperimentConfig {
  Task task = Task::Spectrum;
  std::optional<MeasureSpec> measure;
  int resolution = 128;
  int k = 6;
  int steps = 100000;
  std::optional<std::uint64_t> seed;
  double tolerance = 1e-2;
  std::string out_dir = ".";
  /// Task-specific keys ("group", "mixture", "factor", "n", "d", "p",
  /// "count", "bounds", "t_max", "points") kept verbatim.
  Json options = Json::object();
  /// The config as resolved, embedded into every report.
  Json resolved = Json::object();
};

/// Throws ConfigInvalid with the offending JSON path in the message.
ExperimentConfig config_from_json(const Json& j);

struct ExperimentOutcome {
  /// 0 success, 2 violation of a guaranteed inequality.
  int exit_code = 0;
  Json summary;
  std::vector<std::string> files;
};

/// Writes summary.json plus CSV detail tables into config.out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// True for products of Gaussian mixtures (Gaussian, Laplace, ν_p with
/// 1 ≤ p ≤ 2), the bases for which factor-1 domination is guaranteed.
bool is_mixture_base(const MeasureSpec& spec);

}  // namespace loggap
