#include "loggap/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "loggap/acceptance.hpp"
#include "loggap/bounds.hpp"
#include "loggap/errors.hpp"
#include "loggap/mixtures.hpp"
#include "loggap/sampling.hpp"
#include "loggap/spectral_1d.hpp"
#include "loggap/spectral_nd.hpp"

namespace loggap {

namespace {

constexpr std::pair<Task, const char*> kTaskNames[] = {
    {Task::Spectrum, "spectrum"},
    {Task::Interlace, "interlace"},
    {Task::Eigenspace, "eigenspace"},
    {Task::AlphaProfile, "alpha_profile"},
    {Task::CovarianceDominance, "covariance_dominance"},
    {Task::Section, "section"},
    {Task::BoundsReport, "bounds_report"},
    {Task::Sweep, "sweep"},
};

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
  fail(ErrorKind::ConfigInvalid, path + ": " + message);
}

int int_field(const Json& j, const char* key, int fallback, int lo, int hi) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (!v.is_number_integer() || v.get<long long>() < lo || v.get<long long>() > hi)
    invalid(std::string("/") + key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v.get<int>();
}

double number_field(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) invalid(std::string("/") + key, "expected a number");
  return j[key].get<double>();
}

bool needs_measure(Task t) {
  return t == Task::Spectrum || t == Task::Interlace || t == Task::Eigenspace || t == Task::CovarianceDominance;
}

bool stochastic(const ExperimentConfig& c) {
  if (c.task == Task::Section || c.task == Task::Sweep) return true;
  return c.task == Task::CovarianceDominance && c.measure && c.measure->dim > 3;
}

class Reporter {
 public:
  explicit Reporter(const ExperimentConfig& c) : dir_(c.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::ConfigInvalid, "/out: cannot create " + dir_.string());
  }
  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream out(path);
    if (!out) fail(ErrorKind::ConfigInvalid, "/out: cannot write " + path.string());
    out.precision(17);
    files.push_back(path.string());
    return out;
  }
  std::string path(const std::string& name) {
    files.push_back((dir_ / name).string());
    return files.back();
  }
  std::vector<std::string> files;

 private:
  std::filesystem::path dir_;
};

bool even_log_concave(const Density& d) { return d.even && d.log_concave; }

// ------------------------------------------------------------- tasks

Json spectrum_task(const ExperimentConfig& c, Reporter& rep, int& exit_code) {
  const Density d = build_measure(*c.measure);
  if (d.dim == 1) {
    Poincare1DOptions o;
    o.tolerance = c.tolerance;
    const auto r = poincare_1d(d, o);
    auto csv = rep.open("eigenvalues.csv");
    csv << "index,lambda\n";
    for (std::size_t i = 0; i < r.lambdas.size(); ++i) csv << i << ',' << r.lambdas[i] << '\n';
    return to_json(r);
  }
  const auto op = assemble_generator(d, c.resolution);
  const auto r = lowest_spectrum(op, c.k);
  auto csv = rep.open("eigenvalues.csv");
  csv << "index,lambda,parity,parity_score,residual,group\n";
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
    csv << i << ',' << r.eigenvalues[i] << ',' << to_string(r.parity[i]) << ',' << r.parity_score[i] << ','
        << r.residuals[i] << ',' << r.group_of(static_cast<int>(i)) << '\n';
  write_slice_csv(op, r.eigenvectors.col(1), rep.path("lambda1_slice.csv"));
  Json out = to_json(r);
  out["cp"] = 1.0 / r.eigenvalues[1];
  if (even_log_concave(d)) {
    bool odd = true;
    for (int i : r.multiplicity_groups[static_cast<std::size_t>(r.group_of(1))])
      odd = odd && r.parity[static_cast<std::size_t>(i)] == Parity::Odd;
    out["odd_first"] = odd;
    if (!odd) exit_code = 2;
  }
  return out;
}

Json interlace_task(const ExperimentConfig& c, int& exit_code) {
  const Density d = build_measure(*c.measure);
  if (d.dim < 2) invalid("/measure/dim", "interlacing needs dimension 2 or 3");
  const auto op = assemble_generator(d, c.resolution);
  const int k = std::max(c.k, 10);
  const auto r = lowest_spectrum(op, k);
  const auto il = verify_interlacing(r, d.dim, c.tolerance);
  if (even_log_concave(d) && !il.holds) exit_code = 2;
  return {{"interlacing", to_json(il)}, {"spectrum", to_json(r)}, {"guaranteed", even_log_concave(d)}};
}

Json eigenspace_task(const ExperimentConfig& c, int& exit_code) {
  const Density d = build_measure(*c.measure);
  if (d.dim < 2) invalid("/measure/dim", "eigenspace structure needs dimension 2 or 3");
  const std::string group = c.options.value("group", std::string("cube"));
  std::vector<Eigen::MatrixXi> gens;
  if (group == "cube") gens = cube_group_generators(d.dim);
  else if (group == "flips") gens = flip_group_generators(d.dim);
  else invalid("/group", "expected \"cube\" or \"flips\"");
  const auto op = assemble_generator(d, c.resolution);
  const auto r = lowest_spectrum(op, std::max(c.k, d.dim + 2));
  const auto es = eigenspace_structure(op, r, gens);
  if (es.hypothesis_met && !es.claim_holds) exit_code = 2;
  return {{"eigenspace", to_json(es)}, {"group", group}, {"spectrum", to_json(r)}};
}

MixtureDensity mixture_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    invalid("/mixture/type", "expected one of laplace, gaussian, nu_p, atoms");
  const std::string type = j["type"];
  if (type == "laplace") return laplace_mixture();
  if (type == "gaussian") return gaussian_mixture(j.value("sigma", 1.0));
  if (type == "nu_p") {
    const double p = j.value("p", 1.5);
    if (!(p >= 1.0 && p <= 2.0)) invalid("/mixture/p", "nu_p is a Gaussian mixture only for p in [1,2]");
    return nu_p_mixture(p);
  }
  if (type == "atoms") {
    if (!j.contains("atoms") || !j["atoms"].is_array()) invalid("/mixture/atoms", "expected [{sigma, weight}]");
    std::vector<MixtureAtom> atoms;
    for (const auto& a : j["atoms"]) atoms.push_back({a.value("sigma", 1.0), a.value("weight", 1.0)});
    return atomic_mixture(atoms);
  }
  invalid("/mixture/type", "unknown mixture '" + type + "'");
}

Json alpha_task(const ExperimentConfig& c, Reporter& rep, int& exit_code) {
  const auto mix = mixture_from_json(c.options.value("mixture", Json{{"type", "laplace"}}));
  const double t_max = number_field(c.options, "t_max", 20.0);
  const int points = int_field(c.options, "points", 200, 2, 100000);
  std::vector<double> ts;
  for (int i = 0; i < points; ++i) ts.push_back(t_max * i / (points - 1));
  write_alpha_profile_csv(mix, ts, rep.path("alpha_profile.csv"));
  Json out = {{"profile", alpha_profile_json(mix, ts)}};
  // The alpha bound is enforced only for log-concave phi.
  bool concave = true;
  for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
    const double second = mix.log_phi(ts[i - 1]) - 2 * mix.log_phi(ts[i]) + mix.log_phi(ts[i + 1]);
    concave = concave && second <= 1e-9 * (1 + std::abs(mix.log_phi(ts[i])));
  }
  bool within_bound = true;
  int refinements = 0, refinement_failures = 0;
  for (double t : ts) {
    within_bound = within_bound && alpha_weight(mix, t) <= alpha_bound(mix, t) * (1.0 + 1e-12);
    if (!concave || !mix.potential_derivative) continue;
    const auto tr = tail_refinement_check(mix, t);
    refinements += tr.applicable;
    refinement_failures += tr.applicable && !tr.holds;
  }
  out["log_concave"] = concave;
  out["alpha_bound_holds"] = within_bound;
  out["refinement_points"] = refinements;
  out["refinement_failures"] = refinement_failures;
  if ((concave && !within_bound) || refinement_failures > 0) exit_code = 2;
  return out;
}

Json dominance_task(const ExperimentConfig& c, int& exit_code) {
  const MeasureSpec& spec = *c.measure;
  if (!spec.perturbation) invalid("/measure/perturbation", "covariance domination compares a perturbed measure with its base");
  MeasureSpec base = spec;
  base.perturbation.reset();
  const bool mixture = is_mixture_base(base);
  const bool even_lc = spec.perturbation->even && spec.perturbation->log_concave;
  const double default_factor = mixture ? 1.0 : static_cast<double>(spec.dim);
  const double factor = number_field(c.options, "factor", default_factor);
  CovEstimate A, B;
  Json diagnostics;
  if (spec.dim <= 3) {
    A = quadrature_covariance(build_measure(spec), c.resolution);
    B = quadrature_covariance(build_measure(base), c.resolution);
  } else {
    MalaOptions o;
    o.steps = c.steps;
    o.seed = *c.seed;
    const auto ba = run_mala(build_measure(spec), o);
    o.seed = *c.seed + 1;
    const auto bb = run_mala(build_measure(base), o);
    A = covariance(ba);
    B = covariance(bb);
    diagnostics = {{"perturbed", diagnostics_json(ba)}, {"base", diagnostics_json(bb)}};
  }
  const auto d = dominance_check(A, B, factor);
  bool coordinate = true;
  for (Eigen::Index i = 0; i < A.matrix.rows(); ++i)
    coordinate = coordinate && A.matrix(i, i) <= B.matrix(i, i) + (A.from_quadrature ? 1e-8 : 3 * (A.standard_error(i, i) + B.standard_error(i, i)));
  const bool guaranteed = even_lc && (factor >= spec.dim || (mixture && factor >= 1.0));
  if (guaranteed && (!d.holds || (mixture && !coordinate))) exit_code = 2;
  return {{"perturbed", to_json(A)}, {"base", to_json(B)}, {"factor", factor},
          {"margin", d.margin},      {"tolerance", d.tolerance}, {"holds", d.holds},
          {"coordinate_variance_bound", coordinate}, {"mixture_base", mixture}, {"guaranteed", guaranteed},
          {"sampling", diagnostics}};
}

Json section_task(const ExperimentConfig& c, Reporter& rep) {
  const int n = int_field(c.options, "n", 4, 1, 1000);
  const int d = int_field(c.options, "d", 2, 1, n);
  const double p = number_field(c.options, "p", 1.0);
  if (!(p >= 1.0 && p <= 2.0)) invalid("/p", "expected p in [1,2]");
  const auto body = SectionSpec::random(n, d, p, *c.seed);
  const auto batch = run_hit_and_run(body, c.steps, *c.seed + 1);
  const auto cov = covariance(batch);
  if (c.options.value("write_samples", false)) write_samples_csv(batch, rep.path("samples.csv"));
  const auto envelope = eval_bound("section", {{"n", n}, {"d", d}, {"p", p}});
  const auto ze = eval_bound("z_e_lower", {{"n", n}, {"d", d}, {"p", p}});
  return {{"n", n}, {"d", d}, {"p", p}, {"basis", matrix_to_json(body.basis)}, {"covariance", to_json(cov)},
          {"diagnostics", diagnostics_json(batch)}, {"envelope", to_json(envelope)},
          {"ratio_op_norm_to_envelope", cov.op_norm / envelope.value}, {"z_e_lower", to_json(ze)}};
}

Json bounds_task(const ExperimentConfig& c) {
  Json out = {{"registry", registry_json()}};
  Json evaluated = Json::array();
  if (c.options.contains("bounds")) {
    for (const auto& b : c.options["bounds"]) {
      if (!b.is_object() || !b.contains("id")) invalid("/bounds", "each entry needs an \"id\"");
      ConstantOverrides k;
      if (b.contains("constants")) k = b["constants"].get<ConstantOverrides>();
      evaluated.push_back(to_json(eval_bound(b["id"].get<std::string>(), b.value("params", Json::object()), k)));
    }
  }
  if (c.measure) {
    // Observed C_P against the covariance formulas, constants as configured.
    const Density d = build_measure(*c.measure);
    double cp = 0.0;
    if (d.dim == 1) cp = poincare_1d(d).cp;
    else cp = 1.0 / lowest_spectrum(assemble_generator(d, c.resolution), 2).eigenvalues[1];
    const auto cov = quadrature_covariance(d, 256);
    Json obs = Json::array();
    for (const char* id : {"trace", "hilbert_schmidt"}) {
      const auto b = eval_bound(id, {{"covariance", matrix_to_json(cov.matrix)}});
      Json j = to_json(b);
      j["observed_cp"] = cp;
      j["ratio_bound_to_observed"] = b.value / cp;
      j["nominal_constant_exceeded"] = cp > b.value;
      obs.push_back(j);
    }
    out["observed"] = {{"cp", cp}, {"covariance", to_json(cov)}, {"bounds", obs}};
  }
  out["evaluated"] = evaluated;
  return out;
}

Json sweep_task(const ExperimentConfig& c, Reporter& rep, int& exit_code) {
  const int count = int_field(c.options, "count", 20, 1, 1000);
  const auto suite = nu_q_sweep_suite(count, *c.seed);
  auto csv = rep.open("sweep.csv");
  csv << "q_id,q11,q12,q22,lambda1,cp,odd\n";
  Json rows = Json::array();
  int below = 0;
  bool all_odd = true;
  for (const auto& m : suite) {
    const auto& Q = std::get<NuNQFamily>(m.spec.family).Q;
    const auto r = lowest_spectrum(assemble_generator(build_measure(m.spec), c.resolution), c.k);
    bool odd = true;
    for (int i : r.multiplicity_groups[static_cast<std::size_t>(r.group_of(1))])
      odd = odd && r.parity[static_cast<std::size_t>(i)] == Parity::Odd;
    all_odd = all_odd && odd;
    const double cp = 1.0 / r.eigenvalues[1];
    below += cp <= 4.05;
    csv << m.label << ',' << Q(0, 0) << ',' << Q(0, 1) << ',' << Q(1, 1) << ',' << r.eigenvalues[1] << ',' << cp << ','
        << (odd ? 1 : 0) << '\n';
    rows.push_back({{"q_id", m.label}, {"Q", matrix_to_json(Q)}, {"lambda1", r.eigenvalues[1]}, {"cp", cp}, {"odd", odd}});
  }
  if (!all_odd) exit_code = 2;
  return {{"instances", rows}, {"all_odd", all_odd}, {"cp_at_most_4.05", below}, {"count", count}};
}

}  // namespace

std::string to_string(Task t) {
  for (const auto& [task, name] : kTaskNames)
    if (task == t) return name;
  return "unknown";
}

Task task_from_string(const std::string& name) {
  for (const auto& [task, n] : kTaskNames)
    if (name == n) return task;
  invalid("/task", "unknown task '" + name + "'");
}

bool is_mixture_base(const MeasureSpec& spec) {
  if (spec.perturbation) return false;
  return std::visit(
      [](const auto& f) -> bool {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LaplaceFamily>) return true;
        else if constexpr (std::is_same_v<F, NuPFamily>) return f.p >= 1.0 && f.p <= 2.0;
        else if constexpr (std::is_same_v<F, GaussianFamily>) return f.covariance.isDiagonal(1e-14);
        else if constexpr (std::is_same_v<F, ProductFamily>) {
          for (const auto& comp : f.components)
            if (!is_mixture_base(comp)) return false;
          return true;
        } else return false;
      },
      spec.family);
}

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) invalid("", "config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("task") || !j["task"].is_string()) invalid("/task", "required string");
  c.task = task_from_string(j["task"]);
  if (j.contains("measure") && !j["measure"].is_null()) {
    try {
      c.measure = measure_from_json(j["measure"]);
    } catch (const Error& e) {
      invalid("/measure", e.what());
    }
  }
  if (needs_measure(c.task) && !c.measure) invalid("/measure", "task '" + to_string(c.task) + "' needs a measure");
  c.resolution = int_field(j, "resolution", c.resolution, 32, 1 << 14);
  if (c.resolution % 8 != 0) invalid("/resolution", "must be a multiple of 8");
  c.k = int_field(j, "k", c.k, 1, 20);
  c.steps = int_field(j, "steps", c.steps, 1000, 1 << 30);
  c.tolerance = number_field(j, "tolerance", c.tolerance);
  if (!(c.tolerance > 0.0)) invalid("/tolerance", "must be positive");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      invalid("/seed", "expected a nonnegative 64-bit integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (stochastic(c) && !c.seed) invalid("/seed", "task '" + to_string(c.task) + "' is stochastic and needs a seed");
  if (j.contains("out")) {
    if (!j["out"].is_string()) invalid("/out", "expected a directory path");
    c.out_dir = j["out"];
  }
  static const char* kReserved[] = {"task", "measure", "resolution", "k", "steps", "tolerance", "seed", "out", "threads"};
  for (const auto& [key, value] : j.items())
    if (std::find(std::begin(kReserved), std::end(kReserved), key) == std::end(kReserved)) c.options[key] = value;
  c.resolved = j;
  c.resolved["task"] = to_string(c.task);
  c.resolved["resolution"] = c.resolution;
  c.resolved["k"] = c.k;
  c.resolved["steps"] = c.steps;
  c.resolved["tolerance"] = c.tolerance;
  c.resolved["out"] = c.out_dir;
  if (c.measure) c.resolved["measure"] = measure_to_json(*c.measure);
  if (c.seed) c.resolved["seed"] = *c.seed;
  return c;
}

ExperimentOutcome run_experiment(const ExperimentConfig& c) {
  Reporter rep(c);
  ExperimentOutcome out;
  Json result;
  switch (c.task) {
    case Task::Spectrum: result = spectrum_task(c, rep, out.exit_code); break;
    case Task::Interlace: result = interlace_task(c, out.exit_code); break;
    case Task::Eigenspace: result = eigenspace_task(c, out.exit_code); break;
    case Task::AlphaProfile: result = alpha_task(c, rep, out.exit_code); break;
    case Task::CovarianceDominance: result = dominance_task(c, out.exit_code); break;
    case Task::Section: result = section_task(c, rep); break;
    case Task::BoundsReport: result = bounds_task(c); break;
    case Task::Sweep: result = sweep_task(c, rep, out.exit_code); break;
  }
  out.summary = {{"config", c.resolved}, {"result", result}, {"exit_code", out.exit_code}};
  auto summary = rep.open("summary.json");
  summary << out.summary.dump(2) << '\n';
  out.files = rep.files;
  return out;
}

}  // namespace loggap
