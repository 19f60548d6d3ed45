#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

/// Central section B_p^n ∩ E with E spanned by the orthonormal rows of
/// `basis` (d x n); points are coordinates y ∈ R^d.
struct SectionSpec {
  int n = 2;
  double p = 1.0;
  Matrix basis;

  int d() const { return static_cast<int>(basis.rows()); }
  bool contains(std::span<const double> y) const;
  /// Throws InvalidSpec unless the rows are orthonormal to 1e-12.
  void validate() const;

  static SectionSpec full(int n, double p);
  /// Uniformly random d-dimensional subspace (QR of a Gaussian matrix).
  static SectionSpec random(int n, int d, double p, std::uint64_t seed);
};

struct SampleBatch {
  Matrix samples;  // count x dim, post burn-in, chains concatenated in order
  std::uint64_t seed = 0;
  int chains = 1;
  int burn_in = 0;  // per chain
  double acceptance = 1.0;
  double step_size = 0.0;
  double smoothing = 0.0;
  std::vector<double> ess;
  bool audit_passed = true;
};

struct MalaOptions {
  int steps = 100000;  // per chain, burn-in included
  std::uint64_t seed = 1;
  int chains = 1;
  double initial_step = 0.1;
  double target_low = 0.5;
  double target_high = 0.6;
};

/// Throws DivergentChain.
SampleBatch run_mala(const Density& density, const MalaOptions& options);
/// Throws ChordNotFound.
SampleBatch run_hit_and_run(const SectionSpec& body, int steps, std::uint64_t seed, int chains = 1);

/// Effective sample size per column (initial-positive-sequence truncation).
std::vector<double> effective_sample_size(const Matrix& samples, int chains = 1);

struct CovEstimate {
  Matrix matrix;
  Matrix standard_error;
  std::size_t count = 0;
  double op_norm = 0.0;
  double trace = 0.0;
  /// Quadrature estimates compare with an absolute tolerance.
  bool from_quadrature = false;
};

/// Batch-means covariance. Throws TooFewSamples below 1000 rows.
CovEstimate covariance(const SampleBatch& batch, int batches = 50);
/// Covariance by tensor quadrature (dimension ≤ 3).
CovEstimate quadrature_covariance(const Density& density, int resolution = 512);

struct DominanceReport {
  bool holds = false;
  double margin = 0.0;     // λ_min(factor·B − A)
  double tolerance = 0.0;
};

/// factor·B − A ⪰ 0 up to 3 propagated standard errors (1e-8 absolute for
/// quadrature). Throws DimensionMismatch.
DominanceReport dominance_check(const CovEstimate& A, const CovEstimate& B, double factor);

Json to_json(const CovEstimate& c);
Json diagnostics_json(const SampleBatch& batch);
void write_samples_csv(const SampleBatch& batch, const std::string& path);

/// splitmix64 step; derives per-chain seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace loggap
