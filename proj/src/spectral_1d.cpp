#include "loggap/spectral_1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loggap/errors.hpp"
#include "loggap/quadrature.hpp"

namespace loggap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Symmetric tridiagonal matrix: diagonal d, off-diagonal e (size n-1).
struct Tridiagonal {
  std::vector<double> d;
  std::vector<double> e;
  std::size_t size() const { return d.size(); }
};

// Number of eigenvalues strictly below x (Sturm sequence).
std::size_t sturm_count(const Tridiagonal& t, double x) {
  std::size_t count = 0;
  double q = t.d[0] - x;
  const double tiny = std::numeric_limits<double>::min() * 1e3;
  for (std::size_t i = 0;; ++i) {
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
    if (i + 1 == t.size()) break;
    q = t.d[i + 1] - x - t.e[i] * t.e[i] / q;
  }
  return count;
}

double kth_eigenvalue(const Tridiagonal& t, std::size_t k, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Solves (T - s I) x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> shifted_solve(const Tridiagonal& t, double s, std::vector<double> rhs) {
  const std::size_t n = t.size();
  std::vector<double> diag(n), up(n, 0.0), up2(n, 0.0), low(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = t.d[i] - s;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    up[i] = t.e[i];
    low[i] = t.e[i];
  }
  const double tiny = 1e-300;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(low[i]) > std::abs(diag[i])) {
      // Swap rows i and i+1.
      std::swap(diag[i], low[i]);
      std::swap(up[i], diag[i + 1]);
      if (i + 2 < n) std::swap(up2[i], up[i + 1]);
      std::swap(rhs[i], rhs[i + 1]);
    }
    if (diag[i] == 0.0) diag[i] = tiny;
    const double f = low[i] / diag[i];
    diag[i + 1] -= f * up[i];
    if (i + 2 < n) up[i + 1] -= f * up2[i];
    rhs[i + 1] -= f * rhs[i];
  }
  if (diag[n - 1] == 0.0) diag[n - 1] = tiny;
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double v = rhs[k];
    if (k + 1 < n) v -= up[k] * x[k + 1];
    if (k + 2 < n) v -= up2[k] * x[k + 2];
    x[k] = v / diag[k];
  }
  return x;
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

struct Discretization {
  Tridiagonal t;
  std::vector<double> centers;
  std::vector<double> log_mass;      // log m_j, shifted
};

Discretization discretize(const Density& density, double a, double b, int nodes) {
  if (density.dim != 1) fail(ErrorKind::InvalidSpec, "the 1-D solver needs a one-dimensional density");
  if (nodes < 64) fail(ErrorKind::InvalidSpec, "the 1-D solver needs at least 64 nodes");
  if (!(b > a)) fail(ErrorKind::InvalidSpec, "empty window");
  const auto n = static_cast<std::size_t>(nodes);
  const double h = (b - a) / nodes;
  const double mid = 0.5 * (a + b);
  Discretization out;
  out.centers.resize(n);
  std::vector<double> psi(n), psi_face(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    out.centers[j] = mid + (static_cast<double>(j) + 0.5 - 0.5 * nodes) * h;
    const double x = out.centers[j];
    psi[j] = -density.log_density(std::span<const double>(&x, 1));
    if (!std::isfinite(psi[j]))
      fail(ErrorKind::SingularWeight, "density vanishes at t = " + std::to_string(x));
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double x = mid + (static_cast<double>(j) + 1.0 - 0.5 * nodes) * h;
    psi_face[j] = -density.log_density(std::span<const double>(&x, 1));
  }
  const double shift = *std::min_element(psi.begin(), psi.end());
  out.log_mass.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.log_mass[j] = -(psi[j] - shift) + std::log(h);

  // T = M^{-1/2} A M^{-1/2}, entries formed in log space.
  const double h2 = h * h;
  auto ratio = [&](std::size_t f, std::size_t j) {
    return std::isfinite(psi_face[f]) ? std::exp(-psi_face[f] + psi[j]) / h2 : 0.0;
  };
  out.t.d.assign(n, 0.0);
  out.t.e.assign(n - 1, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    out.t.d[j] += ratio(j, j);
    out.t.d[j + 1] += ratio(j, j + 1);
    out.t.e[j] = std::isfinite(psi_face[j])
                     ? -std::exp(-psi_face[j] + 0.5 * (psi[j] + psi[j + 1])) / h2
                     : 0.0;
  }
  return out;
}

struct Eigenpairs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // node values u, Σ p_j u_j² = 1
  std::vector<double> weights;               // p_j
};

Eigenpairs lowest_pairs(const Discretization& disc, int k) {
  const auto& t = disc.t;
  const std::size_t n = t.size();
  const auto count = static_cast<std::size_t>(std::min<int>(k, static_cast<int>(n)));
  // Gershgorin interval.
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(t.e[i - 1]);
    if (i + 1 < n) r += std::abs(t.e[i]);
    lo = std::min(lo, t.d[i] - r);
    hi = std::max(hi, t.d[i] + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  Eigenpairs out;
  const double max_log = *std::max_element(disc.log_mass.begin(), disc.log_mass.end());
  std::vector<double> sqrt_m(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += std::exp(disc.log_mass[j] - max_log);
  out.weights.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.weights[j] = std::exp(disc.log_mass[j] - max_log) / total;
    sqrt_m[j] = std::sqrt(out.weights[j]);
  }

  std::vector<std::vector<double>> sym;  // orthonormal eigenvectors of T
  for (std::size_t idx = 0; idx < count; ++idx) {
    const double lam = kth_eigenvalue(t, idx, lo - 1e-12 * scale, hi + 1e-12 * scale);
    std::vector<double> v(n);
    if (idx == 0) {
      // The kernel of A is spanned by constants: v = M^{1/2} 1.
      v = sqrt_m;
    } else {
      for (std::size_t j = 0; j < n; ++j) v[j] = 1.0 + 0.001 * std::sin(0.7 * static_cast<double>(j) + static_cast<double>(idx));
      for (int it = 0; it < 4; ++it) {
        v = shifted_solve(t, lam, v);
        for (const auto& prev : sym) {
          const double c = std::inner_product(v.begin(), v.end(), prev.begin(), 0.0);
          for (std::size_t j = 0; j < n; ++j) v[j] -= c * prev[j];
        }
        const double nv = norm2(v);
        if (!(nv > 0.0) || !std::isfinite(nv)) fail(ErrorKind::NoConvergence, "inverse iteration broke down");
        for (double& x : v) x /= nv;
      }
    }
    const double nv = norm2(v);
    for (double& x : v) x /= nv;
    sym.push_back(v);
    if (idx == 0) {
      // Constants carry zero energy exactly.
      out.values.push_back(0.0);
      out.vectors.emplace_back(n, 1.0);
      continue;
    }
    double rq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double tv = t.d[j] * v[j];
      if (j > 0) tv += t.e[j - 1] * v[j - 1];
      if (j + 1 < n) tv += t.e[j] * v[j + 1];
      rq += v[j] * tv;
    }
    out.values.push_back(rq);
    // u = M^{-1/2} v; where the weight underflows, carry the nearest value.
    std::vector<double> u(n, std::numeric_limits<double>::quiet_NaN());
    std::size_t first_ok = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (disc.log_mass[j] - max_log - std::log(total) > -600.0) {
        u[j] = v[j] / sqrt_m[j];
        if (first_ok == n) first_ok = j;
      }
    }
    for (std::size_t j = first_ok + 1; j < n; ++j)
      if (std::isnan(u[j])) u[j] = u[j - 1];
    for (std::size_t j = first_ok; j-- > 0;) u[j] = u[j + 1];
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) mass += out.weights[j] * u[j] * u[j];
    const double s = 1.0 / std::sqrt(mass);
    for (double& x : u) x *= s;
    out.vectors.push_back(std::move(u));
  }
  return out;
}

}  // namespace

Spectrum1D solve_sturm_liouville(const Density& density, double a, double b, int nodes, int k) {
  if (k < 1) fail(ErrorKind::InvalidSpec, "k must be positive");
  const Discretization disc = discretize(density, a, b, nodes);
  Eigenpairs pairs = lowest_pairs(disc, std::max(k, 2));
  Spectrum1D out;
  out.a = a;
  out.b = b;
  out.node_count = nodes;
  out.centers = disc.centers;
  out.weights = pairs.weights;
  const double lambda1 = pairs.values[1];
  pairs.values.resize(static_cast<std::size_t>(k));
  pairs.vectors.resize(static_cast<std::size_t>(k));
  out.eigenvalues = std::move(pairs.values);
  out.eigenvectors = std::move(pairs.vectors);
  if (nodes >= 128 && nodes % 2 == 0) {
    const double coarse = lowest_pairs(discretize(density, a, b, nodes / 2), 2).values[1];
    const double ext = (4.0 * lambda1 - coarse) / 3.0;
    out.extrapolated_lambda1 = {ext, std::abs(ext - lambda1)};
  } else {
    out.extrapolated_lambda1 = {lambda1, 0.0};
  }
  return out;
}

namespace {

Box default_window(const Density& density, const Poincare1DOptions& options) {
  if (options.window) return *options.window;
  if (density.bounded_support) return density.support_box;
  const Box& box = density.support_box;
  const GridSums s = midpoint_sums(
      density.log_density,
      {[](std::span<const double> x) { return x[0]; }, [](std::span<const double> x) { return x[0] * x[0]; }}, box,
      8192);
  const double mean = s.sums[0] / s.mass;
  const double sd = std::sqrt(std::max(s.sums[1] / s.mass - mean * mean, 0.0));
  Box w;
  w.lo = {std::max(box.lo[0], mean - options.std_multiple * sd)};
  w.hi = {std::min(box.hi[0], mean + options.std_multiple * sd)};
  return w;
}

}  // namespace

Poincare1D poincare_1d(const Density& density, const Poincare1DOptions& options) {
  Box window = default_window(density, options);
  int nodes = options.nodes;
  auto solve = [&](const Box& w, int n) { return solve_sturm_liouville(density, w.lo[0], w.hi[0], n, 4); };
  Spectrum1D current = solve(window, nodes);
  Poincare1D out;
  const bool fixed_window = density.bounded_support || options.window.has_value();
  double window_change = 0.0;
  if (!fixed_window) {
    bool converged = false;
    for (int doubling = 1; doubling <= options.max_doublings; ++doubling) {
      Box wide = window;
      const double c = 0.5 * (window.lo[0] + window.hi[0]);
      const double half = window.width(0);  // doubled half-width
      wide.lo[0] = c - half;
      wide.hi[0] = c + half;
      Spectrum1D next = solve(wide, 2 * nodes);
      const double l0 = current.extrapolated_lambda1.value;
      const double l1 = next.extrapolated_lambda1.value;
      window_change = std::abs(l1 - l0);
      window = wide;
      nodes *= 2;
      current = std::move(next);
      out.doublings = doubling;
      if (window_change <= options.tolerance * std::abs(l1)) {
        converged = true;
        break;
      }
    }
    if (!converged)
      fail(ErrorKind::NotConverged, "lambda_1 still moves by " + std::to_string(window_change) +
                                        " after " + std::to_string(options.max_doublings) + " window doublings");
  }
  const Estimate lam = current.extrapolated_lambda1;
  if (!(lam.value > 0.0)) fail(ErrorKind::NotConverged, "non-positive spectral gap");
  out.lambda1 = lam.value;
  out.cp = 1.0 / lam.value;
  out.error = out.cp * (lam.error + window_change) / lam.value;
  out.lambdas = current.eigenvalues;
  out.window = window;
  out.nodes = nodes;
  return out;
}

std::pair<double, double> bobkov_bracket(const Density& density) {
  if (density.dim != 1) fail(ErrorKind::InvalidSpec, "the bracket needs a one-dimensional density");
  if (!density.normalized || !density.density_at_origin)
    fail(ErrorKind::NotNormalized, "the bracket needs a normalized density with known value at the origin");
  const double phi0 = *density.density_at_origin;
  const double upper = 1.0 / (phi0 * phi0);
  return {upper / 12.0, upper};
}

double conditional_gap(const Density& density, int axis, std::span<const double> anchor, int nodes) {
  const Density line = restrict_to_line(density, axis, anchor);
  const Spectrum1D s = solve_sturm_liouville(line, line.support_box.lo[0], line.support_box.hi[0], nodes, 2);
  return s.extrapolated_lambda1.value;
}

Json to_json(const Poincare1D& r) {
  return {{"lambda", r.lambdas}, {"cp", r.cp},           {"error", r.error},
          {"window", {r.window.lo[0], r.window.hi[0]}}, {"nodes", r.nodes}, {"window_doublings", r.doublings}};
}

Json to_json(const Spectrum1D& s) {
  return {{"lambda", s.eigenvalues},
          {"lambda1_extrapolated", s.extrapolated_lambda1.value},
          {"error", s.extrapolated_lambda1.error},
          {"window", {s.a, s.b}},
          {"nodes", s.node_count}};
}

}  // namespace loggap
