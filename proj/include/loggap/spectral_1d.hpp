#pragma once

#include <span>
#include <utility>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

/// Lowest eigenpairs of the weighted Neumann problem on a 1-D window.
struct Spectrum1D {
  double a = 0.0;
  double b = 0.0;
  int node_count = 0;
  std::vector<double> centers;
  std::vector<double> eigenvalues;
  /// Node values, orthonormal for the normalized discrete weights `weights`.
  std::vector<std::vector<double>> eigenvectors;
  std::vector<double> weights;
  /// λ₁ extrapolated from this grid and the one with half as many nodes.
  Estimate extrapolated_lambda1;
};

/// Finite-volume solve with `nodes` cells on [a, b]; returns the k smallest
/// eigenpairs (λ₀ ≈ 0 included). Throws SingularWeight when the density
/// vanishes at a cell center.
Spectrum1D solve_sturm_liouville(const Density& density, double a, double b, int nodes, int k);

struct Poincare1DOptions {
  /// Relative change of λ₁ under window doubling that counts as converged.
  double tolerance = 0.01;
  int nodes = 2048;
  int max_doublings = 3;
  /// Half-width of the default window in standard deviations.
  double std_multiple = 40.0;
  std::optional<Box> window;
};

struct Poincare1D {
  double cp = 0.0;
  double error = 0.0;
  double lambda1 = 0.0;
  std::vector<double> lambdas;
  Box window;
  int nodes = 0;
  int doublings = 0;
};

/// C_P = 1/λ₁ with grid extrapolation and window doubling. Throws
/// NotConverged when window growth keeps moving λ₁ beyond the tolerance.
Poincare1D poincare_1d(const Density& density, const Poincare1DOptions& options = {});

/// (φ(0)^{-2}/12, φ(0)^{-2}) for an even, log-concave, normalized density.
std::pair<double, double> bobkov_bracket(const Density& density);

/// λ₁ of the restriction of `density` to the line anchor + R e_axis.
double conditional_gap(const Density& density, int axis, std::span<const double> anchor, int nodes = 2048);

Json to_json(const Poincare1D& result);
Json to_json(const Spectrum1D& spectrum);

}  // namespace loggap
