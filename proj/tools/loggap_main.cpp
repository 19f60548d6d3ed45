#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "loggap/acceptance.hpp"
#include "loggap/bounds.hpp"
#include "loggap/errors.hpp"
#include "loggap/experiment.hpp"
#include "loggap/parallel.hpp"

namespace {

using loggap::Json;

struct GlobalFlags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> tolerance;
};

struct TaskFlags {
  std::string measure;
  std::optional<int> resolution, k, steps;
  Json extra = Json::object();
};

Json read_json(const std::string& source, const std::string& what) {
  // Inline JSON or a path to a JSON file.
  std::string text = source;
  if (!source.empty() && source.front() != '{' && source.front() != '[') {
    std::ifstream in(source);
    if (!in) loggap::fail(loggap::ErrorKind::ConfigInvalid, what + ": cannot read " + source);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    loggap::fail(loggap::ErrorKind::ConfigInvalid, what + ": " + e.what());
  }
}

Json flags_to_json(const std::string& task, const GlobalFlags& g, const TaskFlags& t) {
  Json j = t.extra;
  j["task"] = task;
  j["out"] = g.out;
  if (!t.measure.empty()) j["measure"] = read_json(t.measure, "--measure");
  if (t.resolution) j["resolution"] = *t.resolution;
  if (t.k) j["k"] = *t.k;
  if (t.steps) j["steps"] = *t.steps;
  if (g.seed) j["seed"] = *g.seed;
  if (g.tolerance) j["tolerance"] = *g.tolerance;
  return j;
}

/// Config file values win; every overridden flag is reported.
Json merge(Json flags, const Json& config) {
  for (const auto& [key, value] : config.items()) {
    if (flags.contains(key) && flags[key] != value && key != "out")
      std::cerr << "warning: config value for '" << key << "' overrides the command-line flag\n";
    flags[key] = value;
  }
  return flags;
}

int run_task(const std::string& task, const GlobalFlags& g, const TaskFlags& t) {
  Json j = flags_to_json(task, g, t);
  if (!g.config.empty()) {
    const Json cfg = read_json(g.config, "--config");
    if (!cfg.is_object()) loggap::fail(loggap::ErrorKind::ConfigInvalid, "--config: expected a JSON object");
    j = merge(std::move(j), cfg);
  }
  if (j.contains("threads") && j["threads"].is_number_integer()) loggap::set_thread_count(j["threads"].get<int>());
  const auto config = loggap::config_from_json(j);
  if (config.task == loggap::Task::BoundsReport && !config.measure && !config.options.contains("bounds")) {
    for (const auto& f : loggap::bound_registry()) std::cout << f.id << ": " << f.formula << '\n';
  }
  const auto outcome = loggap::run_experiment(config);
  const Json& result = outcome.summary["result"];
  if (config.task == loggap::Task::BoundsReport) {
    if (!result["evaluated"].empty()) std::cout << result["evaluated"].dump(2) << '\n';
    if (result.contains("observed")) std::cout << result["observed"].dump(2) << '\n';
  } else {
    std::cout << result.dump(2) << '\n';
  }
  for (const auto& f : outcome.files) std::cerr << "wrote " << f << '\n';
  if (outcome.exit_code == 2) std::cerr << "assertion failure: a guaranteed inequality was violated\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poincare constants and spectral gaps of log-concave measures"};
  app.require_subcommand(1);
  // Global flags are accepted before or after the subcommand.
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON experiment config (wins over flags)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Seed for stochastic tasks");
  app.add_option("--threads", g.threads, "Worker threads (default LOGGAP_THREADS or 1)");
  app.add_option("--tolerance", g.tolerance, "Relative tolerance");

  TaskFlags t;
  std::string task;
  auto add_task = [&](const std::string& name, const std::string& task_name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--measure", t.measure, "Measure spec (JSON text or file)");
    sub->add_option("--resolution", t.resolution, "Cells per axis");
    sub->add_option("--k", t.k, "Number of nonzero eigenvalues");
    sub->add_option("--steps", t.steps, "Sampler steps");
    sub->callback([&task, task_name] { task = task_name; });
    return sub;
  };
  add_task("spectrum", "spectrum", "Lowest eigenpairs with parity labels");
  add_task("interlace", "interlace", "Odd/even interlacing check");
  auto* eig = add_task("eigenspace", "eigenspace", "Eigenspace structure under a symmetry group");
  std::string group;
  eig->add_option("--group", group, "cube or flips");
  auto* alpha = add_task("alpha", "alpha_profile", "Alpha weight profile of a 1-D Gaussian mixture");
  std::string mixture;
  std::optional<double> t_max;
  std::optional<int> points;
  alpha->add_option("--mixture", mixture, "Mixture JSON, e.g. {\"type\":\"nu_p\",\"p\":1.5}");
  alpha->add_option("--t-max", t_max, "Largest t");
  alpha->add_option("--points", points, "Number of t values");
  auto* cov = add_task("cov", "covariance_dominance", "Covariance domination of a perturbed measure");
  std::optional<double> factor;
  cov->add_option("--factor", factor, "Domination factor");
  auto* section = add_task("section", "section", "Hit-and-run covariance of a random central section");
  std::optional<int> sn, sd;
  std::optional<double> sp;
  bool write_samples = false;
  section->add_option("--n", sn, "Ambient dimension");
  section->add_option("--d", sd, "Section dimension");
  section->add_option("--p", sp, "Exponent of the l_p ball");
  section->add_flag("--write-samples", write_samples, "Export samples as CSV");
  auto* bounds = add_task("bounds", "bounds_report", "Bound registry; 'bounds list' prints it");
  std::string formula, params;
  bool list = false;
  bounds->add_option("--formula", formula, "Formula id to evaluate");
  bounds->add_option("--params", params, "Formula parameters (JSON)");
  bounds->add_subcommand("list", "Print the registry")->callback([&list] { list = true; });
  auto* sweep = add_task("sweep", "sweep", "nu^{2,Q} sweep over random PSD Q");
  std::optional<int> count;
  sweep->add_option("--count", count, "Number of random Q");
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");
  std::vector<int> criteria;
  selftest->add_option("--criteria", criteria, "Criterion ids (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g.threads) loggap::set_thread_count(*g.threads);
    if (selftest->parsed()) {
      const auto results = loggap::run_acceptance(criteria, std::cout);
      for (const auto& r : results)
        if (!r.passed) return 2;
      return 0;
    }
    if (list) {
      for (const auto& f : loggap::bound_registry()) std::cout << f.id << ": " << f.formula << '\n';
      return 0;
    }
    if (!group.empty()) t.extra["group"] = group;
    if (!mixture.empty()) t.extra["mixture"] = read_json(mixture, "--mixture");
    if (t_max) t.extra["t_max"] = *t_max;
    if (points) t.extra["points"] = *points;
    if (factor) t.extra["factor"] = *factor;
    if (sn) t.extra["n"] = *sn;
    if (sd) t.extra["d"] = *sd;
    if (sp) t.extra["p"] = *sp;
    if (write_samples) t.extra["write_samples"] = true;
    if (count) t.extra["count"] = *count;
    if (!formula.empty())
      t.extra["bounds"] = Json::array({{{"id", formula}, {"params", params.empty() ? Json::object() : read_json(params, "--params")}}});
    return run_task(task, g, t);
  } catch (const loggap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
