#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loggap/measure.hpp"
#include "loggap/measure_json.hpp"

namespace loggap {

struct MixtureAtom {
  double sigma = 1.0;
  double weight = 1.0;
};

/// Even 1-D density given as a Gaussian scale mixture.
struct MixtureDensity {
  std::string name;
  /// log φ(t).
  std::function<double(double)> log_phi;
  /// log ∫_{|t|}^∞ u φ(u) du.
  std::function<double(double)> log_tail;
  double phi0 = 0.0;
  /// Atoms (σ_k, w_k) of the mixing measure when it is discrete.
  std::optional<std::vector<MixtureAtom>> mixing;
  /// Potential V = -log φ + const and V′ on t > 0, when known.
  std::function<double(double)> potential;
  std::function<double(double)> potential_derivative;

  double phi(double t) const;
  double tail_first_moment(double t) const;
};

MixtureDensity laplace_mixture();
MixtureDensity gaussian_mixture(double sigma);
MixtureDensity atomic_mixture(std::vector<MixtureAtom> atoms);
/// exp(-|t|^p)/Z_p; tail moments by adaptive quadrature in log space.
MixtureDensity nu_p_mixture(double p);

/// α(t) = φ(t)^{-1} ∫_{|t|}^∞ u φ(u) du. Throws DensityUnderflow.
double alpha_weight(const MixtureDensity& d, double t);
/// For atomic mixings: φ(t)^{-1} ∫ σ e^{-t²/(2σ²)}/√(2π) dm(σ).
double alpha_weight_from_mixing(const MixtureDensity& d, double t);
/// |t|/(2φ(0)) + 1/(4φ(0)²).
double alpha_bound(const MixtureDensity& d, double t);

/// c(1 + |t|^{2-p}) with c measured on a reference grid.
struct NuPAlphaBound {
  double p = 1.5;
  double c = 0.0;
  double t_max = 0.0;
  int grid_points = 0;
  double argmax = 0.0;
  double operator()(double t) const;
};

/// Measures c = max α(t)/(1+|t|^{2-p}) over `points` nodes on [0, t_max]
/// (default: where φ drops by the canonical truncation factor).
NuPAlphaBound calibrate_alpha_bound_nu_p(double p, int points = 400, std::optional<double> t_max = std::nullopt);
double alpha_bound_nu_p(double p, double t, double c);

/// The tail refinement for ν_p where t V′(t) ≥ 2:
/// ∫_t^∞ u φ(u) du ≤ 2 (t/V′(t)) φ(t).
struct TailRefinementCheck {
  double t = 0.0;
  bool applicable = false;
  double tail = 0.0;
  double bound = 0.0;
  bool holds = false;
};
TailRefinementCheck tail_refinement_check(const MixtureDensity& d, double t);

struct WeightedVarianceReport {
  double variance = 0.0;
  double weighted_energy = 0.0;
  bool holds = false;
};

/// Var(f) against ∫ Σ α_i(x_i)(∂_i f)² under ρ · ⊗ φ_i (dimension ≤ 3).
/// `log_rho` may be empty. Throws FNotOdd.
WeightedVarianceReport weighted_variance_bound(const std::vector<MixtureDensity>& components,
                                               const LogDensityFn& log_rho, const ScalarField& f,
                                               int resolution = 256, double tol = 1e-3);

/// Density of ρ · ⊗ φ_i on the product of canonical windows (restricted to
/// `rho_box` when given).
Density mixture_product_density(const std::vector<MixtureDensity>& components, const LogDensityFn& log_rho,
                                const std::optional<Box>& rho_box = std::nullopt);

struct CorrelationReport {
  double lhs = 0.0;  // ∫ f g dμ
  double rhs = 0.0;  // ∫ f dμ ∫ g dμ
  double error = 0.0;
  bool holds = false;
};

/// positive: checks ∫fg ≥ ∫f∫g; otherwise ∫fg ≤ ∫f∫g (tolerance: three
/// quadrature error estimates plus `tol`).
CorrelationReport correlation_check(const Density& mu, const ScalarField& f, const ScalarField& g, bool positive,
                                    int resolution = 512, double tol = 1e-9);

/// Rows (t, alpha, bound).
void write_alpha_profile_csv(const MixtureDensity& d, const std::vector<double>& ts, const std::string& path);
Json alpha_profile_json(const MixtureDensity& d, const std::vector<double>& ts);

}  // namespace loggap
