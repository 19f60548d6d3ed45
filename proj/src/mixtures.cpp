#include "loggap/mixtures.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>

#include "loggap/errors.hpp"
#include "loggap/quadrature.hpp"

namespace loggap {

namespace {

constexpr double kLogUnderflow = -690.0;  // φ below ~1e-300

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_normal_density(double t, double sigma) {
  return -0.5 * t * t / (sigma * sigma) - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace

double MixtureDensity::phi(double t) const { return std::exp(log_phi(t)); }
double MixtureDensity::tail_first_moment(double t) const { return std::exp(log_tail(t)); }

MixtureDensity laplace_mixture() {
  MixtureDensity d;
  d.name = "laplace";
  d.log_phi = [](double t) { return -std::abs(t) - std::log(2.0); };
  d.log_tail = [](double t) { return std::log1p(std::abs(t)) - std::abs(t) - std::log(2.0); };
  d.phi0 = 0.5;
  d.potential = [](double t) { return std::abs(t); };
  d.potential_derivative = [](double) { return 1.0; };
  return d;
}

MixtureDensity gaussian_mixture(double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::InvalidSpec, "sigma must be positive");
  MixtureDensity d;
  d.name = "gaussian";
  d.log_phi = [sigma](double t) { return log_normal_density(t, sigma); };
  // ∫_t^∞ u N(u; σ) du = σ² N(t; σ).
  d.log_tail = [sigma](double t) { return 2.0 * std::log(sigma) + log_normal_density(t, sigma); };
  d.phi0 = std::exp(log_normal_density(0.0, sigma));
  d.mixing = std::vector<MixtureAtom>{{sigma, 1.0}};
  d.potential = [sigma](double t) { return 0.5 * t * t / (sigma * sigma); };
  d.potential_derivative = [sigma](double t) { return t / (sigma * sigma); };
  return d;
}

MixtureDensity atomic_mixture(std::vector<MixtureAtom> atoms) {
  if (atoms.empty()) fail(ErrorKind::InvalidSpec, "mixture needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.sigma > 0.0) || !(a.weight > 0.0)) fail(ErrorKind::InvalidSpec, "atoms need positive sigma and weight");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidSpec, "atom weights must sum to 1");
  MixtureDensity d;
  d.name = "atomic";
  d.log_phi = [atoms](double t) {
    std::vector<double> terms;
    for (const auto& a : atoms) terms.push_back(std::log(a.weight) + log_normal_density(t, a.sigma));
    return log_sum_exp(terms);
  };
  d.log_tail = [atoms](double t) {
    std::vector<double> terms;
    for (const auto& a : atoms) terms.push_back(std::log(a.weight) + 2.0 * std::log(a.sigma) + log_normal_density(t, a.sigma));
    return log_sum_exp(terms);
  };
  d.phi0 = std::exp(d.log_phi(0.0));
  d.mixing = atoms;
  return d;
}

MixtureDensity nu_p_mixture(double p) {
  if (!(p > 0.0) || p > 2.0) fail(ErrorKind::InvalidSpec, "nu_p mixtures need 0 < p <= 2");
  if (p == 1.0) {
    MixtureDensity d = laplace_mixture();
    d.name = "nu_1";
    return d;
  }
  const double log_z = nu_p_log_normalizer(p);
  MixtureDensity d;
  d.name = "nu_" + std::to_string(p);
  d.log_phi = [p, log_z](double t) { return -std::pow(std::abs(t), p) - log_z; };
  // log ∫_t^∞ u e^{-u^p} du = -t^p - log Z + log ∫_0^∞ (t+s) e^{-((t+s)^p - t^p)} ds.
  d.log_tail = [p, log_z](double t) {
    const double a = std::abs(t);
    const double vt = std::pow(a, p);
    auto integrand = [a, p, vt](double s) {
      const double u = a + s;
      return u * std::exp(-(std::pow(u, p) - vt));
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0.0;
    const double value = integrator.integrate(integrand, 1e-14, &err);
    return std::log(value) - vt - log_z;
  };
  d.phi0 = std::exp(-log_z);
  d.potential = [p](double t) { return std::pow(std::abs(t), p); };
  d.potential_derivative = [p](double t) { return p * std::pow(std::abs(t), p - 1.0); };
  return d;
}

double alpha_weight(const MixtureDensity& d, double t) {
  const double lp = d.log_phi(t);
  if (lp < kLogUnderflow) fail(ErrorKind::DensityUnderflow, "phi(" + std::to_string(t) + ") underflows; shrink the window");
  return std::exp(d.log_tail(t) - lp);
}

double alpha_weight_from_mixing(const MixtureDensity& d, double t) {
  if (!d.mixing) fail(ErrorKind::InvalidSpec, "density has no discrete mixing measure");
  std::vector<double> num, den;
  for (const auto& a : *d.mixing) {
    const double e = -0.5 * t * t / (a.sigma * a.sigma);
    num.push_back(std::log(a.weight) + std::log(a.sigma) + e - 0.5 * std::log(2.0 * M_PI));
    den.push_back(std::log(a.weight) + e - std::log(a.sigma) - 0.5 * std::log(2.0 * M_PI));
  }
  const double lp = log_sum_exp(den);
  if (lp < kLogUnderflow) fail(ErrorKind::DensityUnderflow, "phi(" + std::to_string(t) + ") underflows; shrink the window");
  return std::exp(log_sum_exp(num) - lp);
}

double alpha_bound(const MixtureDensity& d, double t) {
  return std::abs(t) / (2.0 * d.phi0) + 1.0 / (4.0 * d.phi0 * d.phi0);
}

double NuPAlphaBound::operator()(double t) const { return alpha_bound_nu_p(p, t, c); }

double alpha_bound_nu_p(double p, double t, double c) { return c * (1.0 + std::pow(std::abs(t), 2.0 - p)); }

NuPAlphaBound calibrate_alpha_bound_nu_p(double p, int points, std::optional<double> t_max) {
  if (!(p > 1.0 && p < 2.0)) fail(ErrorKind::InvalidSpec, "the refined bound needs 1 < p < 2");
  if (points < 2) fail(ErrorKind::InvalidSpec, "need at least two grid points");
  const MixtureDensity d = nu_p_mixture(p);
  NuPAlphaBound out;
  out.p = p;
  out.t_max = t_max.value_or(std::pow(kTruncationLogDrop, 1.0 / p));
  out.grid_points = points;
  for (int i = 0; i < points; ++i) {
    const double t = out.t_max * i / (points - 1);
    const double ratio = alpha_weight(d, t) / (1.0 + std::pow(t, 2.0 - p));
    if (ratio > out.c) {
      out.c = ratio;
      out.argmax = t;
    }
  }
  return out;
}

TailRefinementCheck tail_refinement_check(const MixtureDensity& d, double t) {
  if (!d.potential_derivative) fail(ErrorKind::InvalidSpec, "density has no potential derivative");
  TailRefinementCheck out;
  out.t = std::abs(t);
  const double vp = out.t > 0.0 ? d.potential_derivative(out.t) : 0.0;
  out.applicable = out.t * vp >= 2.0;
  out.tail = d.tail_first_moment(out.t);
  out.bound = vp > 0.0 ? 2.0 * (out.t / vp) * d.phi(out.t) : std::numeric_limits<double>::infinity();
  out.holds = !out.applicable || out.tail <= out.bound * (1.0 + 1e-10);
  return out;
}

Density mixture_product_density(const std::vector<MixtureDensity>& components, const LogDensityFn& log_rho,
                                const std::optional<Box>& rho_box) {
  const int dim = static_cast<int>(components.size());
  if (dim < 1 || dim > 3) fail(ErrorKind::DimensionTooLarge, "mixture products use tensor quadrature (dimension <= 3)");
  Density d;
  d.dim = dim;
  d.support_box.lo.resize(static_cast<std::size_t>(dim));
  d.support_box.hi.resize(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const auto& c = components[static_cast<std::size_t>(i)];
    const LogDensityFn lf = [c](std::span<const double> x) { return c.log_phi(x[0]); };
    const Box w = canonical_window_1d(lf, Box::cube(1, 1e4));
    const double h = std::max(std::abs(w.lo[0]), std::abs(w.hi[0]));
    d.support_box.lo[static_cast<std::size_t>(i)] = -h;
    d.support_box.hi[static_cast<std::size_t>(i)] = h;
  }
  if (rho_box) {
    d.support_box = d.support_box.intersect(*rho_box);
    d.bounded_support = true;
  }
  d.log_density = [components, log_rho](std::span<const double> x) {
    double s = log_rho ? log_rho(x) : 0.0;
    if (s == -std::numeric_limits<double>::infinity()) return s;
    for (std::size_t i = 0; i < components.size(); ++i) s += components[i].log_phi(x[i]);
    return s;
  };
  d.even = true;
  d.description = "mixture product";
  return d;
}

WeightedVarianceReport weighted_variance_bound(const std::vector<MixtureDensity>& components,
                                               const LogDensityFn& log_rho, const ScalarField& f, int resolution,
                                               double tol) {
  const Density mu = mixture_product_density(components, log_rho);
  const int dim = mu.dim;
  std::mt19937_64 rng(3);
  for (int s = 0; s < 200; ++s) {
    std::vector<double> x(static_cast<std::size_t>(dim)), y(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      x[si] = std::uniform_real_distribution<double>(mu.support_box.lo[si], mu.support_box.hi[si])(rng);
      y[si] = -x[si];
    }
    const double a = f(x), b = f(y);
    if (std::abs(a + b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)})) fail(ErrorKind::FNotOdd, "f(-x) != -f(x)");
  }
  // α_i depends on x_i only; cache per coordinate value.
  auto cache = std::make_shared<std::vector<std::map<double, double>>>(static_cast<std::size_t>(dim));
  auto mutex = std::make_shared<std::mutex>();
  auto alpha = [components, cache, mutex](std::size_t i, double t) {
    {
      std::lock_guard<std::mutex> lock(*mutex);
      auto it = (*cache)[i].find(t);
      if (it != (*cache)[i].end()) return it->second;
    }
    const double v = alpha_weight(components[i], t);
    std::lock_guard<std::mutex> lock(*mutex);
    (*cache)[i][t] = v;
    return v;
  };
  const ScalarField energy = [f, alpha, dim](std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const double h = 1e-5 * (1.0 + std::abs(x[si]));
      y[si] = x[si] + h;
      const double up = f(y);
      y[si] = x[si] - h;
      const double down = f(y);
      y[si] = x[si];
      const double g = (up - down) / (2 * h);
      s += alpha(si, x[si]) * g * g;
    }
    return s;
  };
  const ScalarField square = [f](std::span<const double> x) {
    const double v = f(x);
    return v * v;
  };
  const auto e = expectations(mu, {f, square, energy}, resolution);
  WeightedVarianceReport rep;
  rep.variance = e[1].value - e[0].value * e[0].value;
  rep.weighted_energy = e[2].value;
  rep.holds = rep.variance <= rep.weighted_energy * (1.0 + tol) + 1e-12;
  return rep;
}

CorrelationReport correlation_check(const Density& mu, const ScalarField& f, const ScalarField& g, bool positive,
                                    int resolution, double tol) {
  const ScalarField fg = [f, g](std::span<const double> x) { return f(x) * g(x); };
  const auto e = expectations(mu, {fg, f, g}, resolution);
  CorrelationReport rep;
  rep.lhs = e[0].value;
  rep.rhs = e[1].value * e[2].value;
  rep.error = e[0].error + std::abs(e[1].value) * e[2].error + std::abs(e[2].value) * e[1].error;
  const double slack = 3.0 * rep.error + tol;
  rep.holds = positive ? rep.lhs >= rep.rhs - slack : rep.lhs <= rep.rhs + slack;
  return rep;
}

Json alpha_profile_json(const MixtureDensity& d, const std::vector<double>& ts) {
  Json rows = Json::array();
  for (double t : ts) rows.push_back({{"t", t}, {"alpha", alpha_weight(d, t)}, {"bound", alpha_bound(d, t)}});
  return rows;
}

void write_alpha_profile_csv(const MixtureDensity& d, const std::vector<double>& ts, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  out.precision(12);
  out << "t,alpha,bound\n";
  for (double t : ts) out << t << ',' << alpha_weight(d, t) << ',' << alpha_bound(d, t) << '\n';
}

}  // namespace loggap
