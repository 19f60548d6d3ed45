#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "loggap/errors.hpp"
#include "loggap/measure.hpp"
#include "loggap/parallel.hpp"
#include "loggap/quadrature.hpp"

namespace loggap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

GridSums midpoint_sums(const LogDensityFn& log_density, const std::vector<ScalarField>& fs,
                       const Box& box, int resolution) {
  const int dim = box.dim();
  if (dim > 3) fail(ErrorKind::DimensionTooLarge, "tensor quadrature supports dimension <= 3; use sampling");
  if (resolution < 1) fail(ErrorKind::InvalidSpec, "resolution must be positive");
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(resolution);
  std::vector<double> step(static_cast<std::size_t>(dim));
  double cell_volume = 1.0;
  for (int i = 0; i < dim; ++i) {
    step[static_cast<std::size_t>(i)] = box.width(i) / resolution;
    cell_volume *= step[static_cast<std::size_t>(i)];
  }
  auto point = [&](std::size_t idx, std::vector<double>& x) {
    for (int i = 0; i < dim; ++i) {
      const auto j = idx % static_cast<std::size_t>(resolution);
      idx /= static_cast<std::size_t>(resolution);
      // Symmetric boxes give exactly negated coordinates for mirrored cells.
      const double c = 0.5 * (box.lo[i] + box.hi[i]);
      x[static_cast<std::size_t>(i)] =
          c + (static_cast<double>(j) + 0.5 - 0.5 * resolution) * step[static_cast<std::size_t>(i)];
    }
  };

  constexpr std::size_t kGrain = 4096;
  const std::size_t chunks = chunk_count(total, kGrain);
  std::vector<double> chunk_peak(chunks, -kInf);
  std::vector<double> logs(total);
  parallel_chunks(total, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    double peak = -kInf;
    for (std::size_t idx = b; idx < e; ++idx) {
      point(idx, x);
      logs[idx] = log_density(x);
      peak = std::max(peak, logs[idx]);
    }
    chunk_peak[c] = peak;
  });
  const double peak = *std::max_element(chunk_peak.begin(), chunk_peak.end());
  if (!std::isfinite(peak)) fail(ErrorKind::SingularWeight, "density vanishes on every quadrature node");

  const std::size_t nf = fs.size();
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(nf + 1, 0.0));
  parallel_chunks(total, kGrain, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    auto& acc = partial[c];
    for (std::size_t idx = b; idx < e; ++idx) {
      if (logs[idx] == -kInf) continue;
      const double w = std::exp(logs[idx] - peak);
      if (w == 0.0) continue;
      point(idx, x);
      acc[0] += w;
      for (std::size_t k = 0; k < nf; ++k) acc[k + 1] += w * fs[k](x);
    }
  });
  GridSums out;
  out.sums.assign(nf, 0.0);
  for (const auto& acc : partial) {
    out.mass += acc[0];
    for (std::size_t k = 0; k < nf; ++k) out.sums[k] += acc[k + 1];
  }
  out.log_scale = peak + std::log(cell_volume);
  return out;
}

Estimate richardson(double coarse, double mid, double fine) {
  const double d1 = mid - coarse;
  const double d2 = fine - mid;
  const double scale = std::max({std::abs(fine), std::abs(mid), 1e-300});
  if (std::abs(d2) <= 1e-14 * scale) return {fine, std::abs(d2) + 1e-15 * scale};
  const double q = d1 / d2;
  // Geometric convergence of the refinement differences with ratio 2^order;
  // accept orders in [0.5, 6].
  if (q > std::sqrt(2.0) && q < 64.0) {
    const double correction = d2 / (q - 1.0);
    return {fine + correction, std::abs(correction)};
  }
  return {fine, std::abs(d1) + std::abs(d2)};
}

Estimate richardson4(const std::array<double, 4>& v) {
  const Estimate coarse = richardson(v[0], v[1], v[2]);
  const Estimate fine = richardson(v[1], v[2], v[3]);
  // Two successive extrapolations: their disagreement bounds the error.
  return {fine.value, std::max(std::abs(fine.value - coarse.value), 1e-15 * std::abs(fine.value))};
}

std::vector<Estimate> expectations(const Density& density, const std::vector<ScalarField>& fs,
                                   int resolution, const std::optional<Box>& box) {
  if (density.dim > 3) fail(ErrorKind::DimensionTooLarge, "expectation supports dimension <= 3; use sampling");
  const Box b = box.value_or(density.support_box);
  if (resolution < 16 || resolution % 8 != 0)
    fail(ErrorKind::InvalidSpec, "quadrature resolution must be a multiple of 8 and >= 16");
  std::vector<std::vector<double>> levels;
  for (int r : {resolution / 8, resolution / 4, resolution / 2, resolution}) {
    GridSums s = midpoint_sums(density.log_density, fs, b, r);
    std::vector<double> ratios(fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k) ratios[k] = s.sums[k] / s.mass;
    levels.push_back(std::move(ratios));
  }
  std::vector<Estimate> out(fs.size());
  for (std::size_t k = 0; k < fs.size(); ++k)
    out[k] = richardson4({levels[0][k], levels[1][k], levels[2][k], levels[3][k]});
  return out;
}

Estimate expectation(const Density& density, const ScalarField& f, int resolution, const std::optional<Box>& box) {
  return expectations(density, {f}, resolution, box).front();
}

Estimate log_mass(const Density& density, int resolution, const std::optional<Box>& box) {
  const Box b = box.value_or(density.support_box);
  std::array<double, 4> vals{};
  int level = 0;
  for (int r : {resolution / 8, resolution / 4, resolution / 2, resolution}) {
    GridSums s = midpoint_sums(density.log_density, {}, b, r);
    vals[static_cast<std::size_t>(level++)] = std::log(s.mass) + s.log_scale;
  }
  return richardson4(vals);
}

}  // namespace loggap
