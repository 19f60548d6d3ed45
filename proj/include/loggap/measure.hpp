#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace loggap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using LogDensityFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
using ScalarField = std::function<double(std::span<const double>)>;

// ln(1e14): the canonical truncation keeps every point whose density is at
// least 1e-14 times the maximum.
inline constexpr double kTruncationLogDrop = 32.23619130191664;

/// Axis-aligned box [lo_i, hi_i].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box centered(std::vector<double> half_widths);
  static Box cube(int dim, double half_width);

  int dim() const { return static_cast<int>(lo.size()); }
  double width(int i) const { return hi[i] - lo[i]; }
  bool is_centered(double tol = 1e-12) const;
  bool contains(std::span<const double> x) const;
  Box intersect(const Box& other) const;
};

// ---------------------------------------------------------------- bodies

/// {x in R^dim : ||x||_p <= radius}
struct LpBall {
  int dim = 2;
  double p = 2.0;
  double radius = 1.0;
};

/// {x : |x_i| <= half_widths[i]}
struct AxisBox {
  std::vector<double> half_widths;
};

/// Orthogonal parallelotope {x : |<x, frame.row(k)>| <= half_widths[k]}.
/// `frame` is square with orthonormal rows.
struct RotatedBox {
  Matrix frame;
  std::vector<double> half_widths;
};

/// Central section B_p^n ∩ E written in coordinates y of E = row span of
/// `basis` (d x n, orthonormal rows): y is inside iff ||basis^T y||_p <= 1.
struct LpSection {
  double p = 1.0;
  Matrix basis;
};

using Body = std::variant<LpBall, AxisBox, RotatedBox, LpSection>;

int body_dimension(const Body& body);
bool body_contains(const Body& body, std::span<const double> x);
Box body_bounding_box(const Body& body);
bool body_unconditional(const Body& body);
std::string body_name(const Body& body);

// -------------------------------------------------------------- families

struct MeasureSpec;

struct GaussianFamily {
  Matrix covariance;
};
struct LaplaceFamily {};
/// exp(-|t|^p)/Z_p, or exp(-|alpha_p t|^p) with alpha_p = 2Γ(1+1/p) when
/// calibrated (unit density at the origin).
struct NuPFamily {
  double p = 1.0;
  bool calibrated = false;
};
/// exp(-|t|^p + a t)/Z_{p,a}.
struct TiltedNuPFamily {
  double p = 1.0;
  double tilt = 0.0;
};
struct UniformIntervalFamily {
  double a = -0.5;
  double b = 0.5;
};
struct UniformBodyFamily {
  Body body;
};
/// exp(-||x||_1 - x^T Q x)/Z.
struct NuNQFamily {
  Matrix Q;
};
struct ProductFamily {
  std::vector<MeasureSpec> components;
};

using Family = std::variant<GaussianFamily, LaplaceFamily, NuPFamily, TiltedNuPFamily,
                            UniformIntervalFamily, UniformBodyFamily, NuNQFamily, ProductFamily>;

// --------------------------------------------------------- perturbations

struct IndicatorPerturbation {
  Body body;
};
/// rho(x) = exp(-x^T A x), A PSD.
struct QuadraticPerturbation {
  Matrix matrix;
};
/// rho(x) = exp(-V(x)) for a user-supplied convex V. Not serializable.
struct ConvexPotentialPerturbation {
  ScalarField potential;
  std::string label = "convex";
};
struct TruncationPerturbation {
  std::vector<double> half_widths;
};

using PerturbationKind = std::variant<IndicatorPerturbation, QuadraticPerturbation,
                                      ConvexPotentialPerturbation, TruncationPerturbation>;

struct PerturbationSpec {
  PerturbationKind kind;
  bool even = true;
  bool unconditional = false;
  bool log_concave = true;
};

struct MeasureSpec {
  int dim = 1;
  Family family = LaplaceFamily{};
  /// Per-coordinate dilation: the measure is the law of scale ⊙ X. Empty
  /// means unit scale.
  std::vector<double> scale;
  std::optional<PerturbationSpec> perturbation;
  /// Declared symmetry; declared flags are certified at build time.
  bool even = false;
  bool unconditional = false;
};

/// Evaluator bundle for a (possibly unnormalized) density exp(log_density).
struct Density {
  int dim = 1;
  LogDensityFn log_density;
  GradientFn grad_log_density;  // empty when no analytic gradient exists
  Box support_box;
  bool bounded_support = false;
  bool normalized = false;
  std::optional<double> density_at_origin;
  bool even = false;
  bool unconditional = false;
  bool log_concave = true;
  /// Width used to smooth |t| in gradients of l1-type potentials.
  double smoothing_width = 0.0;
  std::string description;

  double log_at(std::span<const double> x) const { return log_density(x); }
  double log_at(std::initializer_list<double> x) const {
    return log_density(std::span<const double>(x.begin(), x.size()));
  }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// ------------------------------------------------------------ spec helpers

MeasureSpec gaussian_spec(const Matrix& covariance);
MeasureSpec standard_gaussian_spec(int dim);
MeasureSpec laplace_spec();
MeasureSpec nu_p_spec(double p, bool calibrated = false);
MeasureSpec tilted_nu_p_spec(double p, double tilt);
MeasureSpec uniform_interval_spec(double a, double b);
MeasureSpec uniform_body_spec(const Body& body);
MeasureSpec nu_n_q_spec(const Matrix& Q);
MeasureSpec product_spec(std::vector<MeasureSpec> components);
MeasureSpec with_scale(MeasureSpec spec, std::vector<double> scale);
MeasureSpec with_perturbation(MeasureSpec spec, PerturbationSpec perturbation);

PerturbationSpec indicator_perturbation(const Body& body);
PerturbationSpec quadratic_perturbation(const Matrix& A);
PerturbationSpec truncation_perturbation(std::vector<double> half_widths);
PerturbationSpec convex_perturbation(ScalarField potential, std::string label, bool even,
                                     bool unconditional);

// ------------------------------------------------------------- operations

/// Validates the spec, certifies declared flags and returns the evaluator
/// bundle. Throws NonPSDQuadratic, UnboundedDensity or InvalidSpec.
Density build_measure(const MeasureSpec& spec);

/// Closed-form Poincaré constant for uniform intervals, Gaussians, Laplace,
/// nu_2, axis boxes and products/dilations of those; absent otherwise.
std::optional<double> exact_poincare(const MeasureSpec& spec);

/// Normalized expectation ∫ f dμ / μ(R^n) by midpoint tensor quadrature at
/// `resolution` cells per axis on `box` (default: the support box), with a
/// Richardson estimate from the /2 and /4 grids. Dimension ≤ 3.
Estimate expectation(const Density& density, const ScalarField& f, int resolution,
                     const std::optional<Box>& box = std::nullopt);

/// Same, for several integrands sharing one set of density evaluations.
std::vector<Estimate> expectations(const Density& density, const std::vector<ScalarField>& fs,
                                   int resolution, const std::optional<Box>& box = std::nullopt);

/// One-dimensional restriction t ↦ density(anchor + (t - anchor_i) e_axis);
/// the 1-D coordinate is the absolute value of x_axis.
Density restrict_to_line(const Density& density, int axis, std::span<const double> anchor);

/// Smallest interval around the mode of a 1-D log-density where it stays
/// within kTruncationLogDrop of its maximum; searched inside `hint`.
Box canonical_window_1d(const LogDensityFn& log_density, const Box& hint);

/// α_p = 2Γ(1+1/p).
double nu_p_alpha(double p);
/// log of Z_p = ∫ exp(-|t|^p) dt = 2Γ(1+1/p).
double nu_p_log_normalizer(double p);

/// Numeric spot checks used to certify perturbation and measure flags.
bool spot_check_even(const LogDensityFn& log_rho, const Box& box, int samples = 1000,
                     double tol = 1e-9);
bool spot_check_unconditional(const LogDensityFn& log_rho, const Box& box, int samples = 1000,
                              double tol = 1e-9);
bool spot_check_log_concave(const LogDensityFn& log_rho, const Box& box, int samples = 1000,
                            double tol = 1e-9);

}  // namespace loggap
