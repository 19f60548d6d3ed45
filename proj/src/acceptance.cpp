#include "loggap/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "loggap/bounds.hpp"
#include "loggap/errors.hpp"
#include "loggap/mixtures.hpp"
#include "loggap/sampling.hpp"
#include "loggap/spectral_1d.hpp"
#include "loggap/spectral_nd.hpp"

namespace loggap {

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr int kSuiteResolution = 96;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

CriterionResult named(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

double rel_err(double value, double target) { return std::abs(value - target) / std::abs(target); }

struct Spectrum2D {
  GridOperator op;
  SpectrumReport report;
};

/// Grows k until the interlacing comparison has the odd eigenvalues it needs.
Spectrum2D grid_spectrum(const MeasureSpec& spec, int resolution, int k = 10) {
  const Density d = build_measure(spec);
  Spectrum2D s{assemble_generator(d, resolution), {}};
  for (;; k += 6) {
    s.report = lowest_spectrum(s.op, k);
    try {
      verify_interlacing(s.report, spec.dim);
      return s;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientSpectrum || k >= 20) throw;
    }
  }
}

struct OddFirstCheck {
  bool odd = true;
  double max_residual = 0.0;
};

OddFirstCheck odd_first(const SpectrumReport& r) {
  OddFirstCheck c;
  const int g = r.group_of(1);
  for (int i : r.multiplicity_groups[static_cast<std::size_t>(g)]) {
    c.odd = c.odd && r.parity[static_cast<std::size_t>(i)] == Parity::Odd;
    c.max_residual = std::max(c.max_residual, r.residuals[static_cast<std::size_t>(i)]);
  }
  return c;
}

/// Criteria 3, 4 and 12 share this per-measure evaluation.
struct SuiteRow {
  std::string label;
  double lambda1 = 0.0;
  bool odd = false;
  double residual = 0.0;
  bool interlaced = false;
  double even_first = 0.0;
  double odd_bound = 0.0;
};

std::vector<SuiteRow> run_suite(const std::vector<NamedMeasure>& suite) {
  std::vector<SuiteRow> rows;
  for (const auto& m : suite) {
    const Spectrum2D s = grid_spectrum(m.spec, kSuiteResolution);
    const auto oc = odd_first(s.report);
    const auto il = verify_interlacing(s.report, m.spec.dim);
    rows.push_back({m.label, s.report.eigenvalues[1], oc.odd, oc.max_residual, il.holds, il.lambda_even_first,
                    il.lambda_odd_sorted.back()});
  }
  return rows;
}

Json rows_json(const std::vector<SuiteRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"measure", r.label},
                   {"lambda1", r.lambda1},
                   {"cp", 1.0 / r.lambda1},
                   {"odd", r.odd},
                   {"residual", r.residual},
                   {"interlaced", r.interlaced},
                   {"lambda_even_first", r.even_first},
                   {"lambda_odd_n_plus_1", r.odd_bound}});
  return out;
}

/// Criteria 3 and 4 evaluate the same 30 measures; computed once.
const std::vector<SuiteRow>& shared_rows() {
  static const auto rows = run_suite(even_log_concave_suite(30, 20240611));
  return rows;
}

// ------------------------------------------------------------------ 1

CriterionResult exact_1d() {
  CriterionResult r = named(1, "exact 1-D constants");
  Stopwatch su;
  const auto u = poincare_1d(build_measure(uniform_interval_spec(-0.5, 0.5)));
  const double tu = su.seconds();
  Stopwatch sl;
  const auto l = poincare_1d(build_measure(laplace_spec()));
  const double tl = sl.seconds();
  bool gauss_ok = true;
  Json gs = Json::array();
  for (double sigma : {0.3, 1.0, 1.7, 5.0}) {
    Matrix cov(1, 1);
    cov(0, 0) = sigma * sigma;
    const auto g = poincare_1d(build_measure(gaussian_spec(cov)));
    const double e = rel_err(g.cp, sigma * sigma);
    gauss_ok = gauss_ok && e <= 5e-3;
    gs.push_back({{"sigma2", sigma * sigma}, {"cp", g.cp}, {"rel_err", e}});
  }
  const double eu = rel_err(u.cp, 1.0 / kPi2), el = rel_err(l.cp, 4.0);
  r.passed = eu <= 5e-3 && tu <= 1.0 && el <= 5e-2 && tl <= 2.0 && gauss_ok;
  r.detail = "uniform " + fmt(u.cp) + " (err " + fmt(eu, 2) + ", " + fmt(tu, 2) + " s), Laplace " + fmt(l.cp) +
             " (err " + fmt(el, 2) + ", " + fmt(tl, 2) + " s), Gaussians " + (gauss_ok ? "ok" : "off");
  r.data = {{"uniform", to_json(u)}, {"laplace", to_json(l)}, {"gaussian", gs}};
  return r;
}

// ------------------------------------------------------------------ 2

CriterionResult gaussian_2d() {
  CriterionResult r = named(2, "2-D Gaussian spectrum");
  Stopwatch sw;
  const auto op = assemble_generator(build_measure(standard_gaussian_spec(2)), 128);
  const auto rep = lowest_spectrum(op, 6);
  const double t = sw.seconds();
  const auto& ev = rep.eigenvalues;
  const bool values = rel_err(ev[1], 1) <= 1e-2 && rel_err(ev[2], 1) <= 1e-2 && rel_err(ev[3], 2) <= 1e-2;
  bool parity = true;
  for (std::size_t i = 1; i < ev.size(); ++i) {
    if (rel_err(ev[i], 1) <= 1e-2) parity = parity && rep.parity[i] == Parity::Odd;
    if (rel_err(ev[i], 2) <= 1e-2) parity = parity && rep.parity[i] == Parity::Even;
  }
  r.passed = values && parity && t <= 30.0;
  r.detail = "lambda " + fmt(ev[1]) + ", " + fmt(ev[2]) + ", " + fmt(ev[3]) + "; parity " +
             (parity ? "odd/even as expected" : "mismatch") + " (" + fmt(t, 3) + " s)";
  r.data = to_json(rep);
  return r;
}

// ------------------------------------------------------------- 3 and 4

CriterionResult odd_first_suite() {
  CriterionResult r = named(3, "odd-first suite");
  Stopwatch sw;
  const auto& rows = shared_rows();
  int odd = 0;
  double worst = 0.0;
  for (const auto& row : rows) {
    odd += row.odd && row.residual < 1e-4;
    worst = std::max(worst, row.residual);
  }
  const double t = sw.seconds();
  r.passed = odd == static_cast<int>(rows.size()) && t <= 600.0;
  r.detail = std::to_string(odd) + "/" + std::to_string(rows.size()) +
             " measures with an odd lambda1 cluster, worst residual " + fmt(worst, 2) + " (" + fmt(t, 3) + " s)";
  r.data = rows_json(rows);
  return r;
}

CriterionResult interlacing_suite() {
  CriterionResult r = named(4, "interlacing suite");
  const auto& rows = shared_rows();
  int ok = 0;
  double worst = -1e300;
  for (const auto& row : rows) {
    ok += row.interlaced;
    worst = std::max(worst, row.even_first / row.odd_bound - 1.0);
  }
  r.passed = ok == static_cast<int>(rows.size());
  r.detail = std::to_string(ok) + "/" + std::to_string(rows.size()) +
             " measures interlace; largest lambda_even/lambda_odd(n+1) - 1 = " + fmt(worst, 3);
  r.data = rows_json(rows);
  return r;
}

// ------------------------------------------------------------------ 5

CriterionResult eigenspace() {
  CriterionResult r = named(5, "eigenspace structure");
  r.passed = true;
  r.data = Json::array();
  for (double p : {4.0, 1.5}) {
    const auto spec = product_spec({nu_p_spec(p), nu_p_spec(p)});
    const auto op = assemble_generator(build_measure(spec), 128);
    const auto rep = lowest_spectrum(op, 4);
    const auto es = eigenspace_structure(op, rep, cube_group_generators(2));
    const bool ok = es.multiplicity == 2 && es.basis_error <= 1e-3 && es.max_inner <= 1e-6;
    r.passed = r.passed && ok;
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("p=") + fmt(p) + ": mult " +
                std::to_string(es.multiplicity) + ", basis err " + fmt(es.basis_error, 2) + ", inner " +
                fmt(es.max_inner, 2);
    Json j = to_json(es);
    j["p"] = p;
    r.data.push_back(j);
  }
  return r;
}

// ------------------------------------------------------------------ 6

CriterionResult variance_inequality() {
  CriterionResult r = named(6, "H^-1 variance inequality");
  std::vector<NamedMeasure> measures = {
      {"gaussian", standard_gaussian_spec(2)},
      {"laplace^2", product_spec({laplace_spec(), laplace_spec()})},
      {"nu^{2,Q}", nu_n_q_spec(0.5 * Matrix::Identity(2, 2))},
      {"uniform square", product_spec({uniform_interval_spec(-0.5, 0.5), uniform_interval_spec(-0.5, 0.5)})},
      {"nu_1.5^2 ball", with_perturbation(product_spec({nu_p_spec(1.5), nu_p_spec(1.5)}),
                                          indicator_perturbation(LpBall{2, 2.0, 2.0}))},
  };
  std::mt19937_64 rng(777);
  std::normal_distribution<double> gauss;
  int held = 0, total = 0;
  double worst = -1e300;
  Json rows = Json::array();
  for (const auto& m : measures) {
    const auto op = assemble_generator(build_measure(m.spec), 128);
    for (int trial = 0; trial < 10; ++trial) {
      // Random cubic times a Gaussian bump.
      std::vector<double> c(10);
      for (auto& v : c) v = gauss(rng);
      const double width = 1.0 + 2.0 * std::abs(gauss(rng));
      const ScalarField f = [c, width](std::span<const double> x) {
        const double a = x[0], b = x[1];
        const double poly = c[0] * a + c[1] * b + c[2] * a * a + c[3] * a * b + c[4] * b * b + c[5] * a * a * a +
                            c[6] * a * a * b + c[7] * a * b * b + c[8] * b * b * b + c[9];
        return poly * std::exp(-(a * a + b * b) / (2 * width * width));
      };
      const auto rep = verify_variance_inequality(op, op.evaluate(f));
      held += rep.holds;
      ++total;
      worst = std::max(worst, rep.lhs / rep.rhs);
      rows.push_back({{"measure", m.label}, {"lhs", rep.lhs}, {"rhs", rep.rhs}, {"holds", rep.holds}});
    }
  }
  const auto gop = assemble_generator(build_measure(standard_gaussian_spec(2)), 128);
  const auto g =
      verify_variance_inequality(gop, gop.evaluate([](std::span<const double> x) { return x[0] * x[0] - 1.0; }));
  const bool exact = rel_err(g.lhs, 2.0) <= 1e-3 && rel_err(g.rhs, 4.0) <= 1e-3;
  r.passed = held == total && exact;
  r.detail = std::to_string(held) + "/" + std::to_string(total) + " hold (max lhs/rhs " + fmt(worst, 4) +
             "); Gaussian x1^2-1 -> (" + fmt(g.lhs, 7) + ", " + fmt(g.rhs, 7) + ")";
  r.data = {{"random", rows}, {"gaussian_x1sq", to_json(g)}};
  return r;
}

// ------------------------------------------------------------------ 7

CriterionResult alpha_weights() {
  CriterionResult r = named(7, "alpha weights");
  const auto lap = laplace_mixture();
  const auto gau = gaussian_mixture(1.0);
  double lap_err = 0.0, gau_err = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = 20.0 * i / 200;
    lap_err = std::max(lap_err, rel_err(alpha_weight(lap, t), std::abs(t) + 1.0));
    gau_err = std::max(gau_err, std::abs(alpha_weight(gau, t) - 1.0));
  }
  bool within_bound = true, refine = true;
  int refine_points = 0;
  double bound_margin = 1e300;
  for (double p : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    const auto d = nu_p_mixture(p);
    for (int i = 0; i < 200; ++i) {
      const double t = 20.0 * i / 199;
      const double a = alpha_weight(d, t), b = alpha_bound(d, t);
      // Laplace attains the bound identically; compare to roundoff.
      within_bound = within_bound && a <= b * (1.0 + 1e-12);
      bound_margin = std::min(bound_margin, (b - a) / b);
      const auto tr = tail_refinement_check(d, t);
      if (tr.applicable) {
        ++refine_points;
        refine = refine && tr.holds;
      }
    }
  }
  r.passed = lap_err <= 1e-9 && gau_err <= 1e-9 && within_bound && refine;
  r.detail = "Laplace err " + fmt(lap_err, 2) + ", Gaussian err " + fmt(gau_err, 2) +
             ", alpha bound min rel margin " + fmt(bound_margin, 3) + ", refinement " +
             (refine ? "holds" : "fails") + " at " + std::to_string(refine_points) + " points";
  r.data = {{"laplace_max_rel_err", lap_err},
            {"gaussian_max_err", gau_err},
            {"alpha_bound_min_rel_margin", bound_margin},
            {"refinement_points", refine_points}};
  return r;
}

// ------------------------------------------------------------------ 8

struct DominanceRow {
  std::string label;
  double factor = 1.0;
  DominanceReport rep;
  bool coordinate_bound = true;
};

DominanceRow dominance_row(const std::string& label, const MeasureSpec& base, const PerturbationSpec& rho,
                           double factor) {
  constexpr int res = 512;
  const auto A = quadrature_covariance(build_measure(with_perturbation(base, rho)), res);
  const auto B = quadrature_covariance(build_measure(base), res);
  DominanceRow row{label, factor, dominance_check(A, B, factor)};
  for (Eigen::Index i = 0; i < A.matrix.rows(); ++i)
    row.coordinate_bound = row.coordinate_bound && A.matrix(i, i) <= B.matrix(i, i) + 1e-8;
  return row;
}

CriterionResult covariance_domination() {
  CriterionResult r = named(8, "covariance domination");
  Matrix A(2, 2);
  A << 0.6, 0.3, 0.3, 0.4;
  Matrix U(2, 2);
  U << 3.0, 2.0, 2.0, 3.0;
  std::vector<DominanceRow> rows;
  for (double p : {1.0, 1.5, 2.0}) {
    const auto base = product_spec({nu_p_spec(p), nu_p_spec(p)});
    rows.push_back(dominance_row("nu_" + fmt(p) + "^2, ball", base, indicator_perturbation(LpBall{2, 2.0, 1.0}), 1.0));
    rows.push_back(dominance_row("nu_" + fmt(p) + "^2, exp(-Q)", base, quadratic_perturbation(A), 1.0));
  }
  const auto cube = product_spec({uniform_interval_spec(-0.5, 0.5), uniform_interval_spec(-0.5, 0.5)});
  const auto par = parallelotope(2, 0.1);
  const auto par_rho = indicator_perturbation(RotatedBox{par.frame, par.half_widths});
  rows.push_back(dominance_row("uniform^2, ball", cube, indicator_perturbation(LpBall{2, 2.0, 0.4}), 2.0));
  rows.push_back(dominance_row("uniform^2, exp(-Q)", cube, quadratic_perturbation(U), 2.0));
  rows.push_back(dominance_row("uniform^2, parallelotope", cube, par_rho, 2.0));
  const auto counter = dominance_row("uniform^2, parallelotope, factor 1", cube, par_rho, 1.0);
  bool all = true;
  double worst = 1e300;
  Json js = Json::array();
  for (const auto& row : rows) {
    all = all && row.rep.holds && row.rep.margin >= -1e-8 && row.coordinate_bound;
    worst = std::min(worst, row.rep.margin);
    js.push_back({{"instance", row.label},
                  {"factor", row.factor},
                  {"margin", row.rep.margin},
                  {"holds", row.rep.holds},
                  {"coordinate_bound", row.coordinate_bound}});
  }
  const double expected = 1.0 / 12.0 - std::pow(1.0 - 0.1, 2) / 6.0;
  r.passed = all && !counter.rep.holds && counter.rep.margin < 0.0;
  r.detail = std::to_string(rows.size()) + " instances dominated (min margin " + fmt(worst, 3) +
             "); parallelotope factor-1 margin " + fmt(counter.rep.margin, 4) + " (exact " + fmt(expected, 4) + ")";
  js.push_back({{"instance", counter.label},
                {"factor", 1.0},
                {"margin", counter.rep.margin},
                {"holds", counter.rep.holds},
                {"exact_margin", expected}});
  r.data = js;
  return r;
}

// ------------------------------------------------------------------ 9

/// ν_p^{⊗n} restricted to the diagonal line; t is the coordinate along u_n.
Density diagonal_conditioning(int n, double p) {
  Density d;
  d.dim = 1;
  const double root = std::sqrt(static_cast<double>(n));
  d.log_density = [n, p, root](std::span<const double> t) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s -= std::pow(std::abs(t[0] / root), p);
    return s;
  };
  d.support_box = Box::cube(1, std::pow(kTruncationLogDrop * n, 1.0 / p));
  d.even = true;
  d.description = "diagonal conditioning";
  return d;
}

CriterionResult counterexamples() {
  CriterionResult r = named(9, "counterexample formulas");
  double par_err = 0.0;
  for (int n : {1, 2, 4, 10, 100})
    for (double eps : {0.01, 0.1, 0.3, 0.5}) {
      const double target = std::pow((1 - eps) * std::sqrt(static_cast<double>(n)), 2) / kPi2;
      par_err = std::max(par_err, rel_err(parallelotope_constant(n, eps), target));
    }
  const double c1 = poincare_1d(diagonal_conditioning(1, 4.0)).cp;
  Json ratios = Json::array();
  bool ratio_ok = true;
  std::string detail;
  for (int n : {4, 16}) {
    const double ratio = poincare_1d(diagonal_conditioning(n, 4.0)).cp / c1;
    const double e = rel_err(ratio, std::sqrt(static_cast<double>(n)));
    ratio_ok = ratio_ok && e <= 2e-2;
    ratios.push_back({{"n", n}, {"ratio", ratio}, {"rel_err", e}});
    detail += ", n=" + std::to_string(n) + " ratio " + fmt(ratio);
  }
  r.passed = par_err <= 1e-12 && ratio_ok;
  r.detail = "parallelotope max rel err " + fmt(par_err, 2) + detail;
  r.data = {{"parallelotope_max_rel_err", par_err}, {"p4_ratios", ratios}};
  return r;
}

// ----------------------------------------------------------------- 10

bool within_stderr(const CovEstimate& c, const Matrix& target, double k, double& worst) {
  bool ok = true;
  for (Eigen::Index i = 0; i < c.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double z = std::abs(c.matrix(i, j) - target(i, j)) / c.standard_error(i, j);
      worst = std::max(worst, z);
      ok = ok && z <= k;
    }
  return ok;
}

CriterionResult sampling_oracles() {
  CriterionResult r = named(10, "sampling oracles");
  Stopwatch sw;
  const auto hr = run_hit_and_run(SectionSpec::full(2, 1.0), 100000, 42);
  const auto hc = covariance(hr);
  const double th = sw.seconds();
  double zh = 0.0, zm = 0.0;
  const bool h_ok = within_stderr(hc, Matrix::Identity(2, 2) / 6.0, 3.0, zh) && hr.audit_passed;
  MalaOptions mo;
  mo.steps = 100000;
  mo.seed = 7;
  const auto mb = run_mala(build_measure(standard_gaussian_spec(4)), mo);
  const auto mc = covariance(mb);
  const bool m_ok = within_stderr(mc, Matrix::Identity(4, 4), 3.0, zm) && mb.audit_passed;
  r.passed = h_ok && m_ok && th <= 30.0;
  r.detail = "hit-and-run B1^2 max |z| " + fmt(zh, 3) + " (" + fmt(th, 3) + " s); MALA N(0,I4) max |z| " +
             fmt(zm, 3) + ", acceptance " + fmt(mb.acceptance, 3);
  r.data = {{"hit_and_run", {{"cov", to_json(hc)}, {"diagnostics", diagnostics_json(hr)}}},
            {"mala", {{"cov", to_json(mc)}, {"diagnostics", diagnostics_json(mb)}}}};
  return r;
}

// ----------------------------------------------------------------- 11

CriterionResult helffer() {
  CriterionResult r = named(11, "Helffer bound");
  constexpr double eps = 0.5;
  Matrix precision(2, 2);
  precision << 1.0, eps, eps, 1.0;
  const Density d = build_measure(gaussian_spec(precision.inverse()));
  const auto h = helffer_bound(d, [precision](std::span<const double>) { return precision; }, probe_grid(d, 5));
  const auto rep = lowest_spectrum(assemble_generator(d, 128), 2);
  const double grid_cp = 1.0 / rep.eigenvalues[1];
  const double bound = h.bound ? h.bound->value : 0.0;
  const bool formula = h.bound && rel_err(bound, 1.0 / (1.0 - eps)) <= 1e-2;
  // The bound is attained here, so the comparison carries the 1% solver tolerance.
  const bool dominates = h.bound && grid_cp <= bound * (1.0 + 1e-2);
  r.passed = formula && dominates;
  r.detail = "bound " + fmt(bound) + " vs 1/(1-eps) = 2, grid C_P " + fmt(grid_cp);
  r.data = {{"bound", h.bound ? to_json(*h.bound) : Json()},
            {"grid_cp", grid_cp},
            {"min_eigenvalue", h.min_eigenvalue}};
  return r;
}

// ----------------------------------------------------------------- 12

CriterionResult nu_q_sweep() {
  CriterionResult r = named(12, "nu^{2,Q} sweep");
  const auto rows = run_suite(nu_q_sweep_suite(20, 99));
  int ok = 0, below = 0;
  double max_cp = 0.0;
  for (const auto& row : rows) {
    ok += row.odd && row.residual < 1e-4 && row.interlaced;
    below += 1.0 / row.lambda1 <= 4.05;
    max_cp = std::max(max_cp, 1.0 / row.lambda1);
  }
  r.passed = ok == static_cast<int>(rows.size());
  r.detail = std::to_string(ok) + "/" + std::to_string(rows.size()) + " odd-first and interlaced; reported: " +
             std::to_string(below) + "/" + std::to_string(rows.size()) + " with C_P <= 4.05, max C_P " + fmt(max_cp);
  r.data = rows_json(rows);
  return r;
}

}  // namespace

Matrix random_psd(int n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = gauss(rng);
  Matrix Q = G * G.transpose();
  Q *= unif(rng) / Q.trace();
  return 0.5 * (Q + Q.transpose());
}

std::vector<NamedMeasure> even_log_concave_suite(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif;
  const double ps[] = {1.0, 1.25, 1.5, 1.75, 2.0};
  const double qs[] = {1.0, 2.0, 4.0};
  std::vector<NamedMeasure> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t sub = rng();
    const double p = ps[rng() % 5];
    const auto base = product_spec({nu_p_spec(p), nu_p_spec(p)});
    switch (i % 3) {
      case 0:
        out.push_back({"nu^{2,Q} #" + std::to_string(i), nu_n_q_spec(random_psd(2, 0.05, 2.0, sub))});
        break;
      case 1: {
        const double q = qs[rng() % 3], radius = 0.8 + 2.2 * unif(rng);
        out.push_back({"nu_" + fmt(p) + "^2 & l" + fmt(q) + "-ball r=" + fmt(radius, 3),
                       with_perturbation(base, indicator_perturbation(LpBall{2, q, radius}))});
        break;
      }
      default:
        out.push_back({"nu_" + fmt(p) + "^2 & exp(-xAx) #" + std::to_string(i),
                       with_perturbation(base, quadratic_perturbation(random_psd(2, 0.1, 3.0, sub)))});
    }
  }
  return out;
}

std::vector<NamedMeasure> nu_q_sweep_suite(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedMeasure> out;
  for (int i = 0; i < count; ++i)
    out.push_back({"Q#" + std::to_string(i), nu_n_q_spec(random_psd(2, 0.01, 4.0, rng()))});
  return out;
}

CriterionResult run_criterion(int id) {
  Stopwatch sw;
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = exact_1d(); break;
      case 2: r = gaussian_2d(); break;
      case 3: r = odd_first_suite(); break;
      case 4: r = interlacing_suite(); break;
      case 5: r = eigenspace(); break;
      case 6: r = variance_inequality(); break;
      case 7: r = alpha_weights(); break;
      case 8: r = covariance_domination(); break;
      case 9: r = counterexamples(); break;
      case 10: r = sampling_oracles(); break;
      case 11: r = helffer(); break;
      case 12: r = nu_q_sweep(); break;
      default: fail(ErrorKind::ConfigInvalid, "no acceptance criterion " + std::to_string(id));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    r = named(id, "criterion " + std::to_string(id));
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = sw.seconds();
  return r;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name << ": " << r.detail << " [" << fmt(r.seconds, 3)
    << " s]";
  return s.str();
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::ostream& out) {
  std::vector<int> todo = ids;
  if (todo.empty())
    for (int i = 1; i <= kCriterionCount; ++i) todo.push_back(i);
  std::vector<CriterionResult> results;
  for (int id : todo) {
    results.push_back(run_criterion(id));
    out << format_result(results.back()) << std::endl;
  }
  return results;
}

}  // namespace loggap
