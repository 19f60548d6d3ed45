#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  Json data;
};

struct NamedMeasure {
  std::string label;
  MeasureSpec spec;
};

/// Randomized even log-concave 2-D measures: ν^{2,Q}, ν_p products with
/// ℓ_q-ball indicators and ν_p products with exp(-xᵀAx) factors, in turn.
std::vector<NamedMeasure> even_log_concave_suite(int count, std::uint64_t seed);
/// ν^{2,Q} for random PSD Q.
std::vector<NamedMeasure> nu_q_sweep_suite(int count, std::uint64_t seed);
/// Random PSD 2x2 matrix with trace in [lo, hi].
Matrix random_psd(int n, double lo, double hi, std::uint64_t seed);

inline constexpr int kCriterionCount = 12;

CriterionResult run_criterion(int id);
/// Runs the listed criteria (all when empty), printing one line per result
/// to `out` as it completes.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::ostream& out);
std::string format_result(const CriterionResult& r);

}  // namespace loggap
