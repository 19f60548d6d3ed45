#include "loggap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loggap/errors.hpp"
#include "loggap/spectral_1d.hpp"

namespace loggap {

const std::vector<FormulaInfo>& bound_registry() {
  static const std::vector<FormulaInfo> registry = {
      {"trace", "C_P(mu) <= c * Tr(Cov(mu))", {"covariance"}, {"c"}},
      {"hilbert_schmidt", "C_P(mu) <= c * ||Cov(mu)||_HS", {"covariance"}, {"c"}},
      {"tensorization", "C_P(mu_1 x ... x mu_n) = max_i C_P(mu_i)", {"components"}, {}},
      {"bounded_perturbation", "C_P(nu) <= C_P(mu) * exp(Osc(V))", {"cp", "oscillation"}, {}},
      {"even_general", "C_P(mu^{n,rho}) <= c * sum_i Var(mu_i)", {"variances"}, {"c"}},
      {"mixture_sqrt", "C_P(mu^{n,rho}) <= c * n^{1/2} * max_i Var(mu_i)", {"n", "variances"}, {"c"}},
      {"mixture_log", "C_P(mu^{n,rho}) <= (1 + C log n) * C_P(mu^{n,1})", {"n", "cp"}, {"C"}},
      {"nu_p_log", "C_P(nu_p^{n,rho}) <= c * (1 + C log n)^{(2-p)/p}", {"n", "p"}, {"c", "C"}},
      {"z_e_lower",
       "Z_E >= (sqrt(pi) / (n^{1/p-1/2} alpha_p))^d * Gamma(1+d/p) / Gamma(1+d/2), alpha_p = 2 Gamma(1+1/p)",
       {"n", "d", "p"},
       {}},
      {"section", "C_P(B_p^n cap E) <= c(kappa) * (n/d)^{2/p-1} * log(n)^{2/p}, kappa = d/n", {"n", "d", "p"},
       {"c_kappa"}},
      {"level_set", "C_P(level set) <= C * C_P(mu) * log(e + C_P(mu) sqrt(d))", {"cp", "d"}, {"C"}},
      {"unconditional_log2", "C_P(lambda_K) <= c * log(1+n)^2 * C_P(lambda_K, linear)", {"n", "cp_linear"}, {"c"}},
  };
  return registry;
}

namespace {

const FormulaInfo& lookup(const std::string& id) {
  for (const auto& f : bound_registry())
    if (f.id == id) return f;
  fail(ErrorKind::UnknownFormula, "unknown bound formula '" + id + "'");
}

double number(const Json& params, const std::string& key, const std::string& id) {
  if (!params.is_object() || !params.contains(key) || !params[key].is_number())
    fail(ErrorKind::BadParams, id + ": numeric parameter '" + key + "' required");
  const double v = params[key].get<double>();
  if (!std::isfinite(v)) fail(ErrorKind::BadParams, id + ": parameter '" + key + "' must be finite");
  return v;
}

std::vector<double> numbers(const Json& params, const std::string& key, const std::string& id) {
  if (!params.is_object() || !params.contains(key) || !params[key].is_array() || params[key].empty())
    fail(ErrorKind::BadParams, id + ": nonempty array '" + key + "' required");
  std::vector<double> out;
  for (const auto& v : params[key]) {
    if (!v.is_number()) fail(ErrorKind::BadParams, id + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Matrix covariance_param(const Json& params, const std::string& id) {
  if (!params.is_object() || !params.contains("covariance"))
    fail(ErrorKind::BadParams, id + ": 'covariance' matrix required");
  Matrix C;
  try {
    C = matrix_from_json(params["covariance"]);
  } catch (const Error& e) {
    fail(ErrorKind::BadParams, id + ": " + e.what());
  }
  if (C.rows() != C.cols() || C.rows() == 0) fail(ErrorKind::BadParams, id + ": covariance must be square");
  return C;
}

int dimension_param(const Json& params, const std::string& key, const std::string& id) {
  const double v = number(params, key, id);
  if (v < 1 || v != std::floor(v)) fail(ErrorKind::BadParams, id + ": '" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

double exponent_param(const Json& params, const std::string& id) {
  const double p = number(params, "p", id);
  if (!(p >= 1.0)) fail(ErrorKind::BadParams, id + ": p must be >= 1");
  return p;
}

void require_nonnegative(double v, const std::string& what, const std::string& id) {
  if (!(v >= 0.0)) fail(ErrorKind::BadParams, id + ": " + what + " must be nonnegative");
}

}  // namespace

BoundValue eval_bound(const std::string& id, const Json& params, const ConstantOverrides& overrides,
                      const KappaFn& c_kappa) {
  const FormulaInfo& info = lookup(id);
  BoundValue out;
  out.formula_id = id;
  out.provenance = info.formula;
  for (const auto& [name, value] : overrides) {
    if (std::find(info.constants.begin(), info.constants.end(), name) == info.constants.end())
      fail(ErrorKind::BadParams, id + ": formula has no constant '" + name + "'");
    if (!(value > 0.0) || !std::isfinite(value)) fail(ErrorKind::BadParams, id + ": constants must be positive");
  }
  for (const auto& name : info.constants) {
    const auto it = overrides.find(name);
    out.constants_used[name] = it == overrides.end() ? 1.0 : it->second;
    if (it != overrides.end() && it->second != 1.0) out.nominal = false;
  }
  auto k = [&out](const char* name) { return out.constants_used.at(name); };

  if (id == "trace") {
    const Matrix C = covariance_param(params, id);
    out.value = k("c") * C.trace();
  } else if (id == "hilbert_schmidt") {
    const Matrix C = covariance_param(params, id);
    out.value = k("c") * C.norm();
  } else if (id == "tensorization") {
    const auto cps = numbers(params, "components", id);
    for (double c : cps) require_nonnegative(c, "component constants", id);
    out.value = *std::max_element(cps.begin(), cps.end());
  } else if (id == "bounded_perturbation") {
    const double cp = number(params, "cp", id), osc = number(params, "oscillation", id);
    require_nonnegative(cp, "cp", id);
    require_nonnegative(osc, "oscillation", id);
    out.value = cp * std::exp(osc);
  } else if (id == "even_general") {
    const auto vars = numbers(params, "variances", id);
    double sum = 0.0;
    for (double v : vars) {
      require_nonnegative(v, "variances", id);
      sum += v;
    }
    out.value = k("c") * sum;
  } else if (id == "mixture_sqrt") {
    const int n = dimension_param(params, "n", id);
    const auto vars = numbers(params, "variances", id);
    for (double v : vars) require_nonnegative(v, "variances", id);
    out.value = k("c") * std::sqrt(static_cast<double>(n)) * *std::max_element(vars.begin(), vars.end());
  } else if (id == "mixture_log") {
    const int n = dimension_param(params, "n", id);
    const double cp = number(params, "cp", id);
    require_nonnegative(cp, "cp", id);
    out.value = (1.0 + k("C") * std::log(static_cast<double>(n))) * cp;
  } else if (id == "nu_p_log") {
    const int n = dimension_param(params, "n", id);
    const double p = exponent_param(params, id);
    if (p > 2.0) fail(ErrorKind::BadParams, id + ": p must lie in [1,2]");
    out.value = k("c") * std::pow(1.0 + k("C") * std::log(static_cast<double>(n)), (2.0 - p) / p);
  } else if (id == "z_e_lower") {
    const int n = dimension_param(params, "n", id), d = dimension_param(params, "d", id);
    const double p = exponent_param(params, id);
    if (d > n) fail(ErrorKind::BadParams, id + ": need d <= n");
    const double alpha = 2.0 * std::tgamma(1.0 + 1.0 / p);
    const double base = std::log(std::sqrt(std::numbers::pi)) - (1.0 / p - 0.5) * std::log(static_cast<double>(n)) -
                        std::log(alpha);
    out.value = std::exp(d * base + std::lgamma(1.0 + d / p) - std::lgamma(1.0 + d / 2.0));
  } else if (id == "section") {
    const int n = dimension_param(params, "n", id), d = dimension_param(params, "d", id);
    const double p = exponent_param(params, id);
    if (d > n) fail(ErrorKind::BadParams, id + ": need d <= n");
    if (p > 2.0) fail(ErrorKind::BadParams, id + ": p must lie in [1,2]");
    const double kappa = static_cast<double>(d) / n;
    if (c_kappa) {
      const double c = c_kappa(kappa);
      if (!(c > 0.0)) fail(ErrorKind::BadParams, id + ": c(kappa) must be positive");
      out.constants_used["c_kappa"] = c;
      out.nominal = false;
    }
    out.constants_used["kappa"] = kappa;
    out.value = out.constants_used["c_kappa"] * std::pow(static_cast<double>(n) / d, 2.0 / p - 1.0) *
                std::pow(std::log(static_cast<double>(n)), 2.0 / p);
  } else if (id == "level_set") {
    const double cp = number(params, "cp", id);
    const int d = dimension_param(params, "d", id);
    require_nonnegative(cp, "cp", id);
    out.value = k("C") * cp * std::log(std::numbers::e + cp * std::sqrt(static_cast<double>(d)));
  } else if (id == "unconditional_log2") {
    const int n = dimension_param(params, "n", id);
    const double cp = number(params, "cp_linear", id);
    require_nonnegative(cp, "cp_linear", id);
    const double l = std::log(1.0 + n);
    out.value = k("c") * l * l * cp;
  }
  if (!(out.value >= 0.0) || !std::isfinite(out.value)) fail(ErrorKind::BadParams, id + ": parameters give no finite value");
  return out;
}

Matrix helmert_basis(int n) {
  if (n < 1) fail(ErrorKind::BadParams, "helmert basis needs n >= 1");
  Matrix H = Matrix::Zero(n - 1, n);
  for (int k = 1; k < n; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) H(k - 1, j) = s;
    H(k - 1, k) = -k * s;
  }
  return H;
}

Parallelotope parallelotope(int n, double eps) {
  if (n < 1 || !(eps > 0.0 && eps < 1.0)) fail(ErrorKind::BadParams, "parallelotope needs n >= 1 and eps in (0,1)");
  Parallelotope P;
  P.frame.resize(n, n);
  P.frame.row(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  const double long_side = (1.0 - eps) * std::sqrt(static_cast<double>(n));
  std::vector<double> sides{long_side};
  if (n > 1) {
    const Matrix H = helmert_basis(n);
    P.frame.bottomRows(n - 1) = H;
    // The diagonal side uses (1-ε)/2 of each coordinate's half-width.
    const double spread = H.cwiseAbs().colwise().sum().maxCoeff();
    const double width = std::min(eps / spread, long_side);
    sides.insert(sides.end(), static_cast<std::size_t>(n - 1), width);
  }
  Json comps = Json::array();
  for (double s : sides) {
    P.half_widths.push_back(0.5 * s);
    comps.push_back(s * s / (std::numbers::pi * std::numbers::pi));  // C_P of a uniform interval of length s
  }
  P.constant = eval_bound("tensorization", Json{{"components", comps}}).value;
  return P;
}

double parallelotope_constant(int n, double eps) { return parallelotope(n, eps).constant; }

std::vector<std::vector<double>> probe_grid(const Density& density, int per_axis, double half_width) {
  if (per_axis < 1) fail(ErrorKind::BadParams, "probe grid needs at least one point per axis");
  const int dim = density.dim;
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const double lo = std::max(density.support_box.lo[static_cast<std::size_t>(i)], -half_width);
    const double hi = std::min(density.support_box.hi[static_cast<std::size_t>(i)], half_width);
    for (int k = 0; k < per_axis; ++k)
      axes[static_cast<std::size_t>(i)].push_back(per_axis == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (per_axis - 1));
  }
  std::vector<std::vector<double>> out;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    out.push_back(std::move(x));
    int i = 0;
    while (i < dim && ++idx[static_cast<std::size_t>(i)] == per_axis) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == dim) break;
  }
  return out;
}

HelfferReport helffer_bound(const Density& density, const HessianFn& hessian,
                            const std::vector<std::vector<double>>& probes, int nodes) {
  if (density.dim > 3) fail(ErrorKind::DimensionTooLarge, "helffer bound supports dimension <= 3");
  if (!hessian) fail(ErrorKind::BadParams, "helffer bound needs the potential Hessian");
  if (probes.empty()) fail(ErrorKind::BadParams, "helffer bound needs probe points");
  const int n = density.dim;
  HelfferReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& x : probes) {
    if (static_cast<int>(x.size()) != n) fail(ErrorKind::BadParams, "probe point has wrong dimension");
    const Matrix H = hessian(x);
    Matrix K = H;
    for (int i = 0; i < n; ++i) K(i, i) = conditional_gap(density, i, x, nodes);
    const double m = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly).eigenvalues()[0];
    if (m < rep.min_eigenvalue) {
      rep.min_eigenvalue = m;
      rep.argmin = x;
    }
  }
  if (rep.min_eigenvalue > 0.0) {
    BoundValue b;
    b.formula_id = "helffer";
    b.provenance = "K(x) >= eps Id for all x  =>  C_P(mu) <= 1/eps";
    b.value = 1.0 / rep.min_eigenvalue;
    b.constants_used["eps"] = rep.min_eigenvalue;
    rep.bound = b;
  }
  return rep;
}

Json to_json(const BoundValue& b) {
  return {{"value", b.value},
          {"formula_id", b.formula_id},
          {"constants_used", b.constants_used},
          {"provenance", b.provenance},
          {"constants_label", b.nominal ? "nominal" : "configured"}};
}

Json registry_json() {
  Json out = Json::array();
  for (const auto& f : bound_registry())
    out.push_back({{"id", f.id}, {"formula", f.formula}, {"params", f.params}, {"constants", f.constants}});
  return out;
}

}  // namespace loggap
