#include "loggap/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loggap/errors.hpp"

namespace loggap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultSmoothing = 1e-3;

double smoothed_abs_derivative(double t, double eta) { return t / std::sqrt(t * t + eta * eta); }

}  // namespace

// ------------------------------------------------------------------ Box

Box Box::centered(std::vector<double> half_widths) {
  Box box;
  box.hi = half_widths;
  box.lo.resize(half_widths.size());
  for (std::size_t i = 0; i < half_widths.size(); ++i) box.lo[i] = -half_widths[i];
  return box;
}

Box Box::cube(int dim, double half_width) {
  return centered(std::vector<double>(static_cast<std::size_t>(dim), half_width));
}

bool Box::is_centered(double tol) const {
  for (int i = 0; i < dim(); ++i)
    if (std::abs(lo[i] + hi[i]) > tol * std::max(1.0, width(i))) return false;
  return true;
}

bool Box::contains(std::span<const double> x) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

Box Box::intersect(const Box& other) const {
  Box out = *this;
  for (int i = 0; i < dim(); ++i) {
    out.lo[i] = std::max(lo[i], other.lo[i]);
    out.hi[i] = std::min(hi[i], other.hi[i]);
  }
  return out;
}

// --------------------------------------------------------------- bodies

namespace {

double lp_norm(std::span<const double> x, double p) {
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

struct ContainsVisitor {
  std::span<const double> x;
  bool operator()(const LpBall& b) const { return lp_norm(x, b.p) <= b.radius; }
  bool operator()(const AxisBox& b) const {
    for (std::size_t i = 0; i < b.half_widths.size(); ++i)
      if (std::abs(x[i]) > b.half_widths[i]) return false;
    return true;
  }
  bool operator()(const RotatedBox& b) const {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::Map<const Vector> v(x.data(), n);
    for (Eigen::Index k = 0; k < b.frame.rows(); ++k)
      if (std::abs(b.frame.row(k).dot(v)) > b.half_widths[static_cast<std::size_t>(k)]) return false;
    return true;
  }
  bool operator()(const LpSection& s) const {
    Eigen::Map<const Vector> y(x.data(), s.basis.rows());
    const Vector ambient = s.basis.transpose() * y;
    return lp_norm(std::span<const double>(ambient.data(), static_cast<std::size_t>(ambient.size())), s.p) <=
           1.0;
  }
};

}  // namespace

int body_dimension(const Body& body) {
  return std::visit(
      [](const auto& b) -> int {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LpBall>) return b.dim;
        else if constexpr (std::is_same_v<T, AxisBox>) return static_cast<int>(b.half_widths.size());
        else if constexpr (std::is_same_v<T, RotatedBox>) return static_cast<int>(b.frame.cols());
        else return static_cast<int>(b.basis.rows());
      },
      body);
}

bool body_contains(const Body& body, std::span<const double> x) {
  return std::visit(ContainsVisitor{x}, body);
}

Box body_bounding_box(const Body& body) {
  return std::visit(
      [](const auto& b) -> Box {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LpBall>) {
          // ||x||_p <= r implies |x_i| <= r.
          return Box::cube(b.dim, b.radius);
        } else if constexpr (std::is_same_v<T, AxisBox>) {
          return Box::centered(b.half_widths);
        } else if constexpr (std::is_same_v<T, RotatedBox>) {
          std::vector<double> hw(static_cast<std::size_t>(b.frame.cols()), 0.0);
          for (Eigen::Index i = 0; i < b.frame.cols(); ++i)
            for (Eigen::Index k = 0; k < b.frame.rows(); ++k)
              hw[static_cast<std::size_t>(i)] += std::abs(b.frame(k, i)) * b.half_widths[static_cast<std::size_t>(k)];
          return Box::centered(hw);
        } else {
          // |y_k| <= ||y||_2 = ||x||_2, and ||x||_2 <= max(1, n^{1/2-1/p}) ||x||_p.
          const double n = static_cast<double>(b.basis.cols());
          const double radius = b.p <= 2.0 ? 1.0 : std::pow(n, 0.5 - 1.0 / b.p);
          return Box::cube(static_cast<int>(b.basis.rows()), radius);
        }
      },
      body);
}

bool body_unconditional(const Body& body) {
  return std::holds_alternative<LpBall>(body) || std::holds_alternative<AxisBox>(body);
}

std::string body_name(const Body& body) {
  std::ostringstream os;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LpBall>) os << "B_" << b.p << "^" << b.dim << "(r=" << b.radius << ")";
        else if constexpr (std::is_same_v<T, AxisBox>) os << "box";
        else if constexpr (std::is_same_v<T, RotatedBox>) os << "parallelotope";
        else os << "B_" << b.p << "^" << b.basis.cols() << "∩E(d=" << b.basis.rows() << ")";
      },
      body);
  return os.str();
}

// ---------------------------------------------------------- spec helpers

MeasureSpec gaussian_spec(const Matrix& covariance) {
  MeasureSpec s;
  s.dim = static_cast<int>(covariance.rows());
  s.family = GaussianFamily{covariance};
  return s;
}

MeasureSpec standard_gaussian_spec(int dim) { return gaussian_spec(Matrix::Identity(dim, dim)); }

MeasureSpec laplace_spec() {
  MeasureSpec s;
  s.dim = 1;
  s.family = LaplaceFamily{};
  return s;
}

MeasureSpec nu_p_spec(double p, bool calibrated) {
  MeasureSpec s;
  s.dim = 1;
  s.family = NuPFamily{p, calibrated};
  return s;
}

MeasureSpec tilted_nu_p_spec(double p, double tilt) {
  MeasureSpec s;
  s.dim = 1;
  s.family = TiltedNuPFamily{p, tilt};
  return s;
}

MeasureSpec uniform_interval_spec(double a, double b) {
  MeasureSpec s;
  s.dim = 1;
  s.family = UniformIntervalFamily{a, b};
  return s;
}

MeasureSpec uniform_body_spec(const Body& body) {
  MeasureSpec s;
  s.dim = body_dimension(body);
  s.family = UniformBodyFamily{body};
  return s;
}

MeasureSpec nu_n_q_spec(const Matrix& Q) {
  MeasureSpec s;
  s.dim = static_cast<int>(Q.rows());
  s.family = NuNQFamily{Q};
  return s;
}

MeasureSpec product_spec(std::vector<MeasureSpec> components) {
  MeasureSpec s;
  s.dim = static_cast<int>(components.size());
  s.family = ProductFamily{std::move(components)};
  return s;
}

MeasureSpec with_scale(MeasureSpec spec, std::vector<double> scale) {
  spec.scale = std::move(scale);
  return spec;
}

MeasureSpec with_perturbation(MeasureSpec spec, PerturbationSpec perturbation) {
  spec.perturbation = std::move(perturbation);
  return spec;
}

PerturbationSpec indicator_perturbation(const Body& body) {
  return PerturbationSpec{IndicatorPerturbation{body}, true, body_unconditional(body), true};
}

PerturbationSpec quadratic_perturbation(const Matrix& A) {
  const bool diagonal = (A - Matrix(A.diagonal().asDiagonal())).norm() == 0.0;
  return PerturbationSpec{QuadraticPerturbation{A}, true, diagonal, true};
}

PerturbationSpec truncation_perturbation(std::vector<double> half_widths) {
  return PerturbationSpec{TruncationPerturbation{std::move(half_widths)}, true, true, true};
}

PerturbationSpec convex_perturbation(ScalarField potential, std::string label, bool even,
                                     bool unconditional) {
  return PerturbationSpec{ConvexPotentialPerturbation{std::move(potential), std::move(label)}, even,
                          unconditional, true};
}

// ------------------------------------------------------------- nu_p helpers

double nu_p_alpha(double p) { return 2.0 * std::tgamma(1.0 + 1.0 / p); }

double nu_p_log_normalizer(double p) { return std::log(2.0) + std::lgamma(1.0 + 1.0 / p); }

// -------------------------------------------------------------- windows

Box canonical_window_1d(const LogDensityFn& log_density, const Box& hint) {
  const double lo = hint.lo[0];
  const double hi = hint.hi[0];
  constexpr int kScan = 4001;
  double best = -kInf;
  double mode = 0.5 * (lo + hi);
  for (int i = 0; i < kScan; ++i) {
    const double t = lo + (hi - lo) * i / (kScan - 1);
    const double v = log_density(std::span<const double>(&t, 1));
    if (v > best) {
      best = v;
      mode = t;
    }
  }
  if (!std::isfinite(best)) fail(ErrorKind::SingularWeight, "density vanishes on the whole window");
  const double level = best - kTruncationLogDrop;
  auto below = [&](double t) { return !(log_density(std::span<const double>(&t, 1)) >= level); };
  auto edge = [&](double inside, double outside) {
    if (!below(outside)) return outside;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (below(mid)) outside = mid;
      else inside = mid;
    }
    return outside;
  };
  Box out;
  out.lo = {edge(mode, lo)};
  out.hi = {edge(mode, hi)};
  return out;
}

// -------------------------------------------------------------- spot checks

namespace {

std::vector<double> random_point(std::mt19937_64& rng, const Box& box) {
  std::vector<double> x(static_cast<std::size_t>(box.dim()));
  for (int i = 0; i < box.dim(); ++i) {
    std::uniform_real_distribution<double> u(box.lo[i], box.hi[i]);
    x[static_cast<std::size_t>(i)] = u(rng);
  }
  return x;
}

bool log_equal(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
}

}  // namespace

bool spot_check_even(const LogDensityFn& log_rho, const Box& box, int samples, double tol) {
  std::mt19937_64 rng(0x5eed0001ULL);
  for (int s = 0; s < samples; ++s) {
    auto x = random_point(rng, box);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
    if (!log_equal(log_rho(x), log_rho(y), tol)) return false;
  }
  return true;
}

bool spot_check_unconditional(const LogDensityFn& log_rho, const Box& box, int samples, double tol) {
  std::mt19937_64 rng(0x5eed0002ULL);
  for (int s = 0; s < samples; ++s) {
    auto x = random_point(rng, box);
    const double base = log_rho(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto y = x;
      y[i] = -y[i];
      if (!log_equal(base, log_rho(y), tol)) return false;
    }
  }
  return true;
}

bool spot_check_log_concave(const LogDensityFn& log_rho, const Box& box, int samples, double tol) {
  std::mt19937_64 rng(0x5eed0003ULL);
  for (int s = 0; s < samples; ++s) {
    auto x = random_point(rng, box);
    auto y = random_point(rng, box);
    std::vector<double> m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) m[i] = 0.5 * (x[i] + y[i]);
    const double lx = log_rho(x);
    const double ly = log_rho(y);
    if (!std::isfinite(lx) || !std::isfinite(ly)) continue;
    const double lm = log_rho(m);
    if (!(lm >= 0.5 * (lx + ly) - tol * std::max(1.0, std::abs(lm)))) return false;
  }
  return true;
}

// ------------------------------------------------------------ build_measure

namespace {

struct Parts {
  int dim = 1;
  LogDensityFn logf;
  GradientFn grad;
  Box box;
  bool bounded = false;
  bool normalized = true;
  std::optional<double> phi0;
  bool even = true;
  bool unconditional = true;
  bool log_concave = true;
  double smoothing = 0.0;
  std::string desc;
};

Parts build_family(const MeasureSpec& spec);

Parts gaussian_parts(const GaussianFamily& g, int dim) {
  if (g.covariance.rows() != dim || g.covariance.cols() != dim)
    fail(ErrorKind::InvalidSpec, "gaussian covariance has the wrong shape");
  if ((g.covariance - g.covariance.transpose()).norm() > 1e-12 * std::max(1.0, g.covariance.norm()))
    fail(ErrorKind::InvalidSpec, "gaussian covariance is not symmetric");
  Eigen::LLT<Matrix> llt(g.covariance);
  if (llt.info() != Eigen::Success) fail(ErrorKind::InvalidSpec, "gaussian covariance is not positive definite");
  const Matrix precision = llt.solve(Matrix::Identity(dim, dim));
  double log_det = 0.0;
  for (int i = 0; i < dim; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double log_norm = -0.5 * (dim * std::log(2.0 * M_PI) + log_det);
  Parts p;
  p.dim = dim;
  p.logf = [precision, log_norm, dim](std::span<const double> x) {
    Eigen::Map<const Vector> v(x.data(), dim);
    return log_norm - 0.5 * v.dot(precision * v);
  };
  p.grad = [precision, dim](std::span<const double> x, std::span<double> g) {
    Eigen::Map<const Vector> v(x.data(), dim);
    Eigen::Map<Vector>(g.data(), dim) = -(precision * v);
  };
  std::vector<double> hw(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) hw[static_cast<std::size_t>(i)] = std::sqrt(2.0 * kTruncationLogDrop * g.covariance(i, i));
  p.box = Box::centered(hw);
  if (dim == 1) p.phi0 = std::exp(log_norm);
  const bool diagonal = (g.covariance - Matrix(g.covariance.diagonal().asDiagonal())).norm() == 0.0;
  p.unconditional = diagonal;
  p.desc = "gaussian";
  return p;
}

Parts laplace_parts() {
  Parts p;
  p.logf = [](std::span<const double> x) { return -std::abs(x[0]) - std::log(2.0); };
  p.grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = -smoothed_abs_derivative(x[0], kDefaultSmoothing);
  };
  p.smoothing = kDefaultSmoothing;
  p.box = Box::cube(1, kTruncationLogDrop);
  p.phi0 = 0.5;
  p.desc = "laplace";
  return p;
}

Parts nu_p_parts(const NuPFamily& f) {
  if (!(f.p > 0.0)) fail(ErrorKind::InvalidSpec, "nu_p requires p > 0");
  const double p = f.p;
  const double alpha = f.calibrated ? nu_p_alpha(p) : 1.0;
  const double log_norm = f.calibrated ? 0.0 : -nu_p_log_normalizer(p);
  Parts out;
  out.logf = [p, alpha, log_norm](std::span<const double> x) {
    return log_norm - std::pow(std::abs(alpha * x[0]), p);
  };
  const double eta = p < 2.0 ? kDefaultSmoothing : 0.0;
  out.grad = [p, alpha, eta](std::span<const double> x, std::span<double> g) {
    const double t = alpha * x[0];
    // d/dt |t|^p with |t| smoothed as sqrt(t^2 + eta^2) when p < 2.
    const double r2 = t * t + eta * eta;
    g[0] = -alpha * p * std::pow(r2, 0.5 * (p - 2.0)) * t;
  };
  out.smoothing = eta;
  out.box = Box::cube(1, std::pow(kTruncationLogDrop, 1.0 / p) / alpha);
  out.phi0 = std::exp(log_norm);
  out.log_concave = p >= 1.0;
  std::ostringstream os;
  os << "nu_" << p << (f.calibrated ? "(calibrated)" : "");
  out.desc = os.str();
  return out;
}

Parts tilted_parts(const TiltedNuPFamily& f) {
  const double p = f.p;
  const double a = f.tilt;
  if (!(p >= 1.0)) fail(ErrorKind::InvalidSpec, "tilted nu_p requires p >= 1");
  if (p == 1.0 && std::abs(a) >= 1.0)
    fail(ErrorKind::UnboundedDensity, "exp(-|t| + a t) is not integrable for |a| >= 1");
  auto raw = [p, a](double t) { return -std::pow(std::abs(t), p) + a * t; };
  // Mode: t* = sign(a) (|a|/p)^{1/(p-1)} for p > 1, 0 for p = 1.
  const double mode = p > 1.0 ? std::copysign(std::pow(std::abs(a) / p, 1.0 / (p - 1.0)), a) : 0.0;
  const double peak = raw(mode);
  // Reach: solve |t|^p - a t = drop - peak on each side by expansion.
  auto reach = [&](double dir) {
    double t = 1.0;
    while (raw(mode + dir * t) > peak - kTruncationLogDrop - 1.0 && t < 1e8) t *= 2.0;
    return mode + dir * t;
  };
  Box hint;
  hint.lo = {reach(-1.0)};
  hint.hi = {reach(1.0)};
  LogDensityFn unnormalized = [raw, peak](std::span<const double> x) { return raw(x[0]) - peak; };
  Box window = canonical_window_1d(unnormalized, hint);
  // Z relative to the peak, by adaptive Gauss-Kronrod on the window.
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](double t) { return std::exp(raw(t) - peak); };
  const double z = gauss_kronrod<double, 61>::integrate(integrand, hint.lo[0], mode, 15, 1e-13) +
                   gauss_kronrod<double, 61>::integrate(integrand, mode, hint.hi[0], 15, 1e-13);
  const double log_norm = -peak - std::log(z);
  Parts out;
  out.logf = [raw, log_norm](std::span<const double> x) { return raw(x[0]) + log_norm; };
  const double eta = p < 2.0 ? kDefaultSmoothing : 0.0;
  out.grad = [p, a, eta](std::span<const double> x, std::span<double> g) {
    const double t = x[0];
    g[0] = -p * std::pow(t * t + eta * eta, 0.5 * (p - 2.0)) * t + a;
  };
  out.smoothing = eta;
  out.box = window;
  out.phi0 = std::exp(log_norm);
  out.even = a == 0.0;
  out.unconditional = out.even;
  std::ostringstream os;
  os << "nu_" << p << "," << a;
  out.desc = os.str();
  return out;
}

Parts uniform_interval_parts(const UniformIntervalFamily& f) {
  if (!(f.b > f.a)) fail(ErrorKind::InvalidSpec, "uniform interval requires a < b");
  const double a = f.a;
  const double b = f.b;
  const double log_norm = -std::log(b - a);
  Parts p;
  p.logf = [a, b, log_norm](std::span<const double> x) { return (x[0] >= a && x[0] <= b) ? log_norm : -kInf; };
  p.grad = [](std::span<const double>, std::span<double> g) { g[0] = 0.0; };
  p.box.lo = {a};
  p.box.hi = {b};
  p.bounded = true;
  if (a <= 0.0 && b >= 0.0) p.phi0 = std::exp(log_norm);
  p.even = std::abs(a + b) <= 1e-15 * (b - a);
  p.unconditional = p.even;
  p.desc = "uniform_interval";
  return p;
}

double body_log_volume(const Body& body, bool& known) {
  known = true;
  if (const auto* b = std::get_if<LpBall>(&body)) {
    const double d = b->dim;
    return d * (std::log(2.0) + std::lgamma(1.0 + 1.0 / b->p) + std::log(b->radius)) -
           std::lgamma(1.0 + d / b->p);
  }
  if (const auto* b = std::get_if<AxisBox>(&body)) {
    double s = 0.0;
    for (double h : b->half_widths) s += std::log(2.0 * h);
    return s;
  }
  if (const auto* b = std::get_if<RotatedBox>(&body)) {
    double s = 0.0;
    for (double h : b->half_widths) s += std::log(2.0 * h);
    return s;
  }
  known = false;
  return 0.0;
}

void validate_body(const Body& body) {
  std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LpBall>) {
          if (!(b.p > 0.0) || !(b.radius > 0.0) || b.dim < 1) fail(ErrorKind::InvalidSpec, "bad l_p ball");
        } else if constexpr (std::is_same_v<T, AxisBox>) {
          for (double h : b.half_widths)
            if (!(h > 0.0)) fail(ErrorKind::InvalidSpec, "box half-widths must be positive");
        } else if constexpr (std::is_same_v<T, RotatedBox>) {
          if (b.frame.rows() != b.frame.cols() ||
              static_cast<std::size_t>(b.frame.rows()) != b.half_widths.size())
            fail(ErrorKind::InvalidSpec, "parallelotope frame must be square and match half-widths");
          const Matrix gram = b.frame * b.frame.transpose();
          if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > 1e-10)
            fail(ErrorKind::InvalidSpec, "parallelotope frame rows must be orthonormal");
        } else {
          if (!(b.p >= 1.0)) fail(ErrorKind::InvalidSpec, "section requires p >= 1");
          const Matrix gram = b.basis * b.basis.transpose();
          if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > 1e-12 * gram.rows())
            fail(ErrorKind::InvalidSpec, "section basis rows must be orthonormal");
        }
      },
      body);
}

Parts uniform_body_parts(const UniformBodyFamily& f) {
  validate_body(f.body);
  bool known = false;
  const double log_vol = body_log_volume(f.body, known);
  const double log_norm = known ? -log_vol : 0.0;
  const Body body = f.body;
  Parts p;
  p.dim = body_dimension(body);
  p.logf = [body, log_norm](std::span<const double> x) { return body_contains(body, x) ? log_norm : -kInf; };
  p.grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  p.box = body_bounding_box(body);
  p.bounded = true;
  p.normalized = known;
  p.unconditional = body_unconditional(body);
  p.desc = "uniform(" + body_name(body) + ")";
  return p;
}

// Half-width of the projection onto axis i of {x : |x|_1 + xᵀQx <= drop}:
// bisection on x_i = t with the other coordinates minimized cyclically.
double nu_n_q_extent(const Matrix& Q, int i, double drop) {
  const auto dim = Q.rows();
  auto psi = [&Q](const Vector& x) { return x.lpNorm<1>() + x.dot(Q * x); };
  auto min_other = [&](double t) {
    Vector x = Vector::Zero(dim);
    x[i] = t;
    for (int sweep = 0; sweep < 40; ++sweep) {
      for (Eigen::Index k = 0; k < dim; ++k) {
        if (k == i) continue;
        // Exact minimizer of |y| + Q_kk y² + 2 y c over y, c = Σ_{j≠k} Q_kj x_j.
        const double c = Q.row(k).dot(x) - Q(k, k) * x[k];
        const double qk = Q(k, k);
        double y = 0.0;
        if (qk > 0.0) {
          if (2 * c > 1.0) y = -(2 * c - 1.0) / (2 * qk);
          else if (2 * c < -1.0) y = -(2 * c + 1.0) / (2 * qk);
        }
        x[k] = y;
      }
    }
    return psi(x);
  };
  double lo = 0.0, hi = drop;  // ψ ≥ |x_i| bounds the extent by drop
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (min_other(mid) <= drop) lo = mid;
    else hi = mid;
  }
  return hi;
}

Parts nu_n_q_parts(const NuNQFamily& f, int dim) {
  const Matrix& Q = f.Q;
  if (Q.rows() != dim || Q.cols() != dim) fail(ErrorKind::InvalidSpec, "Q has the wrong shape");
  const double qnorm = Q.norm();
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, qnorm))
    fail(ErrorKind::NonPSDQuadratic, "Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(qnorm, 1e-300))
    fail(ErrorKind::NonPSDQuadratic, "Q has a negative eigenvalue");
  Parts p;
  p.dim = dim;
  p.logf = [Q, dim](std::span<const double> x) {
    Eigen::Map<const Vector> v(x.data(), dim);
    return -v.lpNorm<1>() - v.dot(Q * v);
  };
  p.grad = [Q, dim](std::span<const double> x, std::span<double> g) {
    Eigen::Map<const Vector> v(x.data(), dim);
    Eigen::Map<Vector> out(g.data(), dim);
    out = -2.0 * (Q * v);
    for (int i = 0; i < dim; ++i) out[i] -= smoothed_abs_derivative(v[i], kDefaultSmoothing);
  };
  p.smoothing = kDefaultSmoothing;
  if (dim <= 3) {
    std::vector<double> hw(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) hw[static_cast<std::size_t>(i)] = nu_n_q_extent(Q, i, kTruncationLogDrop);
    p.box = Box::centered(hw);
  } else {
    p.box = Box::cube(dim, kTruncationLogDrop);
  }
  p.normalized = false;
  p.unconditional = (Q - Matrix(Q.diagonal().asDiagonal())).norm() == 0.0;
  p.desc = "nu^{n,Q}";
  return p;
}

Parts product_parts(const ProductFamily& f) {
  if (f.components.empty()) fail(ErrorKind::InvalidSpec, "empty product");
  std::vector<Parts> parts;
  parts.reserve(f.components.size());
  for (const auto& c : f.components) {
    if (c.dim != 1) fail(ErrorKind::InvalidSpec, "product components must be one-dimensional");
    if (c.perturbation) fail(ErrorKind::InvalidSpec, "product components cannot carry perturbations");
    parts.push_back(build_family(c));
  }
  const int dim = static_cast<int>(parts.size());
  Parts out;
  out.dim = dim;
  out.box.lo.resize(static_cast<std::size_t>(dim));
  out.box.hi.resize(static_cast<std::size_t>(dim));
  std::vector<LogDensityFn> fns;
  std::vector<GradientFn> grads;
  bool have_grads = true;
  out.desc = "product(";
  for (int i = 0; i < dim; ++i) {
    const auto& pi = parts[static_cast<std::size_t>(i)];
    fns.push_back(pi.logf);
    grads.push_back(pi.grad);
    have_grads = have_grads && static_cast<bool>(pi.grad);
    out.box.lo[static_cast<std::size_t>(i)] = pi.box.lo[0];
    out.box.hi[static_cast<std::size_t>(i)] = pi.box.hi[0];
    out.bounded = out.bounded || pi.bounded;
    out.normalized = out.normalized && pi.normalized;
    out.even = out.even && pi.even;
    out.log_concave = out.log_concave && pi.log_concave;
    out.smoothing = std::max(out.smoothing, pi.smoothing);
    out.desc += (i ? "," : "") + pi.desc;
  }
  out.desc += ")";
  out.unconditional = out.even;
  out.logf = [fns](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < fns.size(); ++i) {
      s += fns[i](x.subspan(i, 1));
      if (s == -kInf) return s;
    }
    return s;
  };
  if (have_grads) {
    out.grad = [grads](std::span<const double> x, std::span<double> g) {
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i](x.subspan(i, 1), g.subspan(i, 1));
    };
  }
  return out;
}

Parts apply_scale(Parts p, const std::vector<double>& scale) {
  if (scale.empty()) return p;
  if (static_cast<int>(scale.size()) != p.dim) fail(ErrorKind::InvalidSpec, "scale has the wrong length");
  double log_jac = 0.0;
  for (double s : scale) {
    if (!(s > 0.0)) fail(ErrorKind::InvalidSpec, "scale must be positive");
    log_jac += std::log(s);
  }
  const auto base = p.logf;
  p.logf = [base, scale, log_jac](std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / scale[i];
    return base(y) - log_jac;
  };
  if (p.grad) {
    const auto base_grad = p.grad;
    p.grad = [base_grad, scale](std::span<const double> x, std::span<double> g) {
      std::vector<double> y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / scale[i];
      base_grad(y, g);
      for (std::size_t i = 0; i < x.size(); ++i) g[i] /= scale[i];
    };
  }
  for (int i = 0; i < p.dim; ++i) {
    p.box.lo[static_cast<std::size_t>(i)] *= scale[static_cast<std::size_t>(i)];
    p.box.hi[static_cast<std::size_t>(i)] *= scale[static_cast<std::size_t>(i)];
  }
  if (p.phi0) *p.phi0 /= scale[0];
  p.smoothing *= *std::max_element(scale.begin(), scale.end());
  return p;
}

Parts build_family(const MeasureSpec& spec) {
  if (spec.dim < 1) fail(ErrorKind::InvalidSpec, "dimension must be positive");
  Parts p = std::visit(
      [&](const auto& f) -> Parts {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianFamily>) return gaussian_parts(f, spec.dim);
        else if constexpr (std::is_same_v<T, LaplaceFamily>) return laplace_parts();
        else if constexpr (std::is_same_v<T, NuPFamily>) return nu_p_parts(f);
        else if constexpr (std::is_same_v<T, TiltedNuPFamily>) return tilted_parts(f);
        else if constexpr (std::is_same_v<T, UniformIntervalFamily>) return uniform_interval_parts(f);
        else if constexpr (std::is_same_v<T, UniformBodyFamily>) return uniform_body_parts(f);
        else if constexpr (std::is_same_v<T, NuNQFamily>) return nu_n_q_parts(f, spec.dim);
        else return product_parts(f);
      },
      spec.family);
  if (p.dim != spec.dim) fail(ErrorKind::InvalidSpec, "family dimension does not match spec.dim");
  return apply_scale(std::move(p), spec.scale);
}

struct PerturbationParts {
  LogDensityFn log_rho;
  GradientFn grad;
  std::optional<Box> box;
};

PerturbationParts perturbation_parts(const PerturbationSpec& pert, int dim) {
  return std::visit(
      [dim](const auto& k) -> PerturbationParts {
        using T = std::decay_t<decltype(k)>;
        PerturbationParts out;
        if constexpr (std::is_same_v<T, IndicatorPerturbation>) {
          validate_body(k.body);
          if (body_dimension(k.body) != dim) fail(ErrorKind::InvalidSpec, "indicator body has the wrong dimension");
          const Body body = k.body;
          out.log_rho = [body](std::span<const double> x) { return body_contains(body, x) ? 0.0 : -kInf; };
          out.grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
          out.box = body_bounding_box(body);
        } else if constexpr (std::is_same_v<T, QuadraticPerturbation>) {
          const Matrix A = k.matrix;
          if (A.rows() != dim || A.cols() != dim) fail(ErrorKind::InvalidSpec, "perturbation matrix has the wrong shape");
          if ((A - A.transpose()).norm() > 1e-12 * std::max(1.0, A.norm()))
            fail(ErrorKind::NonPSDQuadratic, "perturbation matrix is not symmetric");
          Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
          if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(A.norm(), 1e-300))
            fail(ErrorKind::NonPSDQuadratic, "perturbation matrix has a negative eigenvalue");
          out.log_rho = [A, dim](std::span<const double> x) {
            Eigen::Map<const Vector> v(x.data(), dim);
            return -v.dot(A * v);
          };
          out.grad = [A, dim](std::span<const double> x, std::span<double> g) {
            Eigen::Map<const Vector> v(x.data(), dim);
            Eigen::Map<Vector>(g.data(), dim) = -2.0 * (A * v);
          };
        } else if constexpr (std::is_same_v<T, ConvexPotentialPerturbation>) {
          const auto V = k.potential;
          if (!V) fail(ErrorKind::InvalidSpec, "convex perturbation needs a potential");
          out.log_rho = [V](std::span<const double> x) { return -V(x); };
        } else {
          if (static_cast<int>(k.half_widths.size()) != dim)
            fail(ErrorKind::InvalidSpec, "truncation box has the wrong dimension");
          const Box box = Box::centered(k.half_widths);
          out.log_rho = [box](std::span<const double> x) { return box.contains(x) ? 0.0 : -kInf; };
          out.grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
          out.box = box;
        }
        return out;
      },
      pert.kind);
}

// Total unnormalized mass on `box` at a coarse midpoint grid, relative to
// the maximum sampled density.
double coarse_mass(const LogDensityFn& logf, const Box& box, int resolution, double& peak) {
  const int dim = box.dim();
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(resolution);
  std::vector<double> logs(total);
  std::vector<double> x(static_cast<std::size_t>(dim));
  peak = -kInf;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int i = 0; i < dim; ++i) {
      const auto j = rem % static_cast<std::size_t>(resolution);
      rem /= static_cast<std::size_t>(resolution);
      x[static_cast<std::size_t>(i)] = box.lo[i] + (static_cast<double>(j) + 0.5) * box.width(i) / resolution;
    }
    logs[idx] = logf(x);
    peak = std::max(peak, logs[idx]);
  }
  double vol = 1.0;
  for (int i = 0; i < dim; ++i) vol *= box.width(i) / resolution;
  double mass = 0.0;
  for (double l : logs)
    if (std::isfinite(l)) mass += std::exp(l - peak);
  return mass * vol;
}

}  // namespace

Density build_measure(const MeasureSpec& spec) {
  Parts fam = build_family(spec);
  Density d;
  d.dim = spec.dim;
  d.support_box = fam.box;
  d.bounded_support = fam.bounded;
  d.normalized = fam.normalized;
  d.density_at_origin = fam.phi0;
  d.even = fam.even;
  d.unconditional = fam.unconditional;
  d.log_concave = fam.log_concave;
  d.smoothing_width = fam.smoothing;
  d.description = fam.desc;
  d.log_density = fam.logf;
  d.grad_log_density = fam.grad;

  if (spec.perturbation) {
    const auto& pert = *spec.perturbation;
    PerturbationParts pp = perturbation_parts(pert, spec.dim);
    const Box check_box = pp.box ? fam.box.intersect(*pp.box) : fam.box;
    if (pert.even && !spot_check_even(pp.log_rho, check_box))
      fail(ErrorKind::InvalidSpec, "perturbation flagged even fails the rho(x) = rho(-x) spot check");
    if (pert.unconditional && !spot_check_unconditional(pp.log_rho, check_box))
      fail(ErrorKind::InvalidSpec, "perturbation flagged unconditional fails the coordinate-flip spot check");
    if (pert.log_concave && !spot_check_log_concave(pp.log_rho, check_box))
      fail(ErrorKind::InvalidSpec, "perturbation flagged log-concave fails the midpoint spot check");
    if (pert.even && !fam.even)
      fail(ErrorKind::InvalidSpec, "an even perturbation requires an even base measure");
    const auto base = fam.logf;
    const auto log_rho = pp.log_rho;
    d.log_density = [base, log_rho](std::span<const double> x) {
      const double r = log_rho(x);
      if (r == -kInf) return r;
      return base(x) + r;
    };
    if (fam.grad && pp.grad) {
      const auto base_grad = fam.grad;
      const auto rho_grad = pp.grad;
      d.grad_log_density = [base_grad, rho_grad](std::span<const double> x, std::span<double> g) {
        std::vector<double> extra(g.size());
        base_grad(x, g);
        rho_grad(x, extra);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += extra[i];
      };
    } else {
      d.grad_log_density = nullptr;
    }
    if (pp.box) {
      d.support_box = d.support_box.intersect(*pp.box);
      d.bounded_support = true;
    }
    d.normalized = false;
    d.density_at_origin.reset();
    d.even = fam.even && pert.even;
    d.unconditional = fam.unconditional && pert.unconditional;
    d.log_concave = fam.log_concave && pert.log_concave;
    d.description += " * rho";
  }

  if (spec.even && !d.even) {
    if (!spot_check_even(d.log_density, d.support_box))
      fail(ErrorKind::InvalidSpec, "measure flagged even fails the spot check");
    d.even = true;
  }
  if (spec.unconditional && !d.unconditional) {
    if (!spot_check_unconditional(d.log_density, d.support_box))
      fail(ErrorKind::InvalidSpec, "measure flagged unconditional fails the spot check");
    d.unconditional = true;
  }

  // Integrability: doubling the canonical box must not add visible mass.
  if (spec.dim <= 3 && !d.bounded_support) {
    const int res = spec.dim == 1 ? 512 : (spec.dim == 2 ? 48 : 16);
    double peak1 = 0.0;
    double peak2 = 0.0;
    const double m1 = coarse_mass(d.log_density, d.support_box, res, peak1);
    Box wide = d.support_box;
    for (int i = 0; i < wide.dim(); ++i) {
      const double c = 0.5 * (wide.lo[i] + wide.hi[i]);
      const double h = wide.width(i);
      wide.lo[i] = c - h;
      wide.hi[i] = c + h;
    }
    const double m2 = coarse_mass(d.log_density, wide, 2 * res, peak2);
    if (!std::isfinite(peak1) || !(m1 > 0.0)) fail(ErrorKind::UnboundedDensity, "density has no mass on its box");
    const double scaled_m2 = m2 * std::exp(peak2 - peak1);
    if (!std::isfinite(scaled_m2) || scaled_m2 > m1 * 1.01)
      fail(ErrorKind::UnboundedDensity, "density mass keeps growing outside its truncation box");
  }
  return d;
}

// ------------------------------------------------------------ exact_poincare

std::optional<double> exact_poincare(const MeasureSpec& spec) {
  if (spec.perturbation) return std::nullopt;
  std::optional<double> base = std::visit(
      [&](const auto& f) -> std::optional<double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianFamily>) {
          Eigen::SelfAdjointEigenSolver<Matrix> eig(f.covariance);
          return eig.eigenvalues().maxCoeff();
        } else if constexpr (std::is_same_v<T, LaplaceFamily>) {
          return 4.0;
        } else if constexpr (std::is_same_v<T, NuPFamily>) {
          const double alpha = f.calibrated ? nu_p_alpha(f.p) : 1.0;
          if (f.p == 1.0) return 4.0 / (alpha * alpha);
          if (f.p == 2.0) return 0.5 / (alpha * alpha);  // N(0, 1/2) before dilation
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, UniformIntervalFamily>) {
          return (f.b - f.a) * (f.b - f.a) / (M_PI * M_PI);
        } else if constexpr (std::is_same_v<T, UniformBodyFamily>) {
          if (const auto* box = std::get_if<AxisBox>(&f.body)) {
            double best = 0.0;
            for (double h : box->half_widths) best = std::max(best, 4.0 * h * h / (M_PI * M_PI));
            return best;
          }
          if (const auto* box = std::get_if<RotatedBox>(&f.body)) {
            double best = 0.0;
            for (double h : box->half_widths) best = std::max(best, 4.0 * h * h / (M_PI * M_PI));
            return best;
          }
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ProductFamily>) {
          double best = 0.0;
          for (const auto& c : f.components) {
            auto v = exact_poincare(c);
            if (!v) return std::nullopt;
            best = std::max(best, *v);
          }
          return best;
        } else {
          return std::nullopt;
        }
      },
      spec.family);
  if (!base || spec.scale.empty()) return base;
  if (std::holds_alternative<ProductFamily>(spec.family)) {
    // Dilating coordinate i multiplies that component's constant by s_i^2.
    const auto& comps = std::get<ProductFamily>(spec.family).components;
    double best = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i)
      best = std::max(best, *exact_poincare(comps[i]) * spec.scale[i] * spec.scale[i]);
    return best;
  }
  if (std::holds_alternative<GaussianFamily>(spec.family)) {
    const auto& cov = std::get<GaussianFamily>(spec.family).covariance;
    Eigen::Map<const Vector> s(spec.scale.data(), static_cast<Eigen::Index>(spec.scale.size()));
    Matrix scaled = s.asDiagonal() * cov * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(scaled);
    return eig.eigenvalues().maxCoeff();
  }
  if (spec.dim == 1) return *base * spec.scale[0] * spec.scale[0];
  // Non-isotropic dilations of non-product bodies have no closed form.
  const double s0 = spec.scale[0];
  for (double s : spec.scale)
    if (s != s0) return std::nullopt;
  return *base * s0 * s0;
}

// ---------------------------------------------------------- restrict_to_line

Density restrict_to_line(const Density& density, int axis, std::span<const double> anchor) {
  if (axis < 0 || axis >= density.dim) fail(ErrorKind::InvalidSpec, "axis out of range");
  std::vector<double> base(anchor.begin(), anchor.end());
  const auto parent = density.log_density;
  Density line;
  line.dim = 1;
  line.log_density = [parent, base, axis](std::span<const double> t) {
    std::vector<double> x = base;
    x[static_cast<std::size_t>(axis)] = t[0];
    return parent(x);
  };
  Box hint;
  hint.lo = {density.support_box.lo[axis]};
  hint.hi = {density.support_box.hi[axis]};
  line.support_box = canonical_window_1d(line.log_density, hint);
  line.bounded_support = density.bounded_support;
  line.normalized = false;
  line.log_concave = density.log_concave;
  line.description = density.description + "|line";
  return line;
}

}  // namespace loggap
