#pragma once

#include <array>
#include <vector>

#include "loggap/measure.hpp"

namespace loggap {

/// Raw midpoint sums on a tensor grid: mass = Σ w_c, sums[k] = Σ w_c f_k(x_c)
/// with w_c = exp(log ρ(x_c) - peak). The true integrals are the sums times
/// exp(log_scale).
struct GridSums {
  double mass = 0.0;
  std::vector<double> sums;
  double log_scale = 0.0;
};

GridSums midpoint_sums(const LogDensityFn& log_density, const std::vector<ScalarField>& fs,
                       const Box& box, int resolution);

/// Extrapolates three refinement levels (h, h/2, h/4 read as coarse, mid,
/// fine) assuming geometric decay of the differences; the error is the size
/// of the applied correction, or the raw spread when no order is detected.
Estimate richardson(double coarse, double mid, double fine);

/// Four levels: the finer three-level extrapolation, with the error taken as
/// its disagreement with the coarser one.
Estimate richardson4(const std::array<double, 4>& levels);

/// log ∫ ρ over `box` (default: support box).
Estimate log_mass(const Density& density, int resolution, const std::optional<Box>& box = std::nullopt);

}  // namespace loggap
