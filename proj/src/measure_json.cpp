#include "loggap/measure_json.hpp"

#include "loggap/errors.hpp"

namespace loggap {

namespace {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::InvalidSpec, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidSpec, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? get<T>(j, key) : fallback;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::InvalidSpec, "matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorKind::InvalidSpec, "matrix rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Json body_to_json(const Body& body) {
  return std::visit(
      [](const auto& b) -> Json {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, LpBall>)
          return {{"kind", "lp_ball"}, {"dim", b.dim}, {"p", b.p}, {"radius", b.radius}};
        else if constexpr (std::is_same_v<T, AxisBox>)
          return {{"kind", "axis_box"}, {"half_widths", b.half_widths}};
        else if constexpr (std::is_same_v<T, RotatedBox>)
          return {{"kind", "rotated_box"}, {"frame", matrix_to_json(b.frame)}, {"half_widths", b.half_widths}};
        else
          return {{"kind", "lp_section"}, {"p", b.p}, {"basis", matrix_to_json(b.basis)}};
      },
      body);
}

Body body_from_json(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "lp_ball") return LpBall{get<int>(j, "dim"), get<double>(j, "p"), get_or<double>(j, "radius", 1.0)};
  if (kind == "axis_box") return AxisBox{get<std::vector<double>>(j, "half_widths")};
  if (kind == "rotated_box")
    return RotatedBox{matrix_from_json(j.at("frame")), get<std::vector<double>>(j, "half_widths")};
  if (kind == "lp_section") return LpSection{get<double>(j, "p"), matrix_from_json(j.at("basis"))};
  fail(ErrorKind::InvalidSpec, "unknown body kind '" + kind + "'");
}

namespace {

Json family_to_json(const Family& family) {
  return std::visit(
      [](const auto& f) -> Json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GaussianFamily>)
          return {{"type", "gaussian"}, {"covariance", matrix_to_json(f.covariance)}};
        else if constexpr (std::is_same_v<T, LaplaceFamily>)
          return {{"type", "laplace"}};
        else if constexpr (std::is_same_v<T, NuPFamily>)
          return {{"type", "nu_p"}, {"p", f.p}, {"calibrated", f.calibrated}};
        else if constexpr (std::is_same_v<T, TiltedNuPFamily>)
          return {{"type", "tilted_nu_p"}, {"p", f.p}, {"tilt", f.tilt}};
        else if constexpr (std::is_same_v<T, UniformIntervalFamily>)
          return {{"type", "uniform_interval"}, {"a", f.a}, {"b", f.b}};
        else if constexpr (std::is_same_v<T, UniformBodyFamily>)
          return {{"type", "uniform_body"}, {"body", body_to_json(f.body)}};
        else if constexpr (std::is_same_v<T, NuNQFamily>)
          return {{"type", "nu_n_Q"}, {"Q", matrix_to_json(f.Q)}};
        else {
          Json comps = Json::array();
          for (const auto& c : f.components) comps.push_back(measure_to_json(c));
          return {{"type", "product"}, {"components", comps}};
        }
      },
      family);
}

Family family_from_json(const Json& j, int dim) {
  const auto type = get<std::string>(j, "type");
  if (type == "gaussian") {
    if (!j.contains("covariance")) return GaussianFamily{Matrix::Identity(dim, dim)};
    return GaussianFamily{matrix_from_json(j.at("covariance"))};
  }
  if (type == "laplace") return LaplaceFamily{};
  if (type == "nu_p") return NuPFamily{get<double>(j, "p"), get_or<bool>(j, "calibrated", false)};
  if (type == "tilted_nu_p") return TiltedNuPFamily{get<double>(j, "p"), get<double>(j, "tilt")};
  if (type == "uniform_interval") return UniformIntervalFamily{get<double>(j, "a"), get<double>(j, "b")};
  if (type == "uniform_body") {
    if (!j.contains("body")) fail(ErrorKind::InvalidSpec, "uniform_body needs a body");
    return UniformBodyFamily{body_from_json(j.at("body"))};
  }
  if (type == "nu_n_Q") {
    if (!j.contains("Q")) return NuNQFamily{Matrix::Zero(dim, dim)};
    return NuNQFamily{matrix_from_json(j.at("Q"))};
  }
  if (type == "product") {
    if (!j.contains("components") || !j.at("components").is_array())
      fail(ErrorKind::InvalidSpec, "product needs a components array");
    ProductFamily p;
    for (const auto& c : j.at("components")) p.components.push_back(measure_from_json(c));
    return p;
  }
  fail(ErrorKind::InvalidSpec, "unknown family type '" + type + "'");
}

Json perturbation_to_json(const PerturbationSpec& p) {
  Json out = std::visit(
      [](const auto& k) -> Json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, IndicatorPerturbation>)
          return {{"kind", "indicator"}, {"body", body_to_json(k.body)}};
        else if constexpr (std::is_same_v<T, QuadraticPerturbation>)
          return {{"kind", "exp_neg_quadratic"}, {"matrix", matrix_to_json(k.matrix)}};
        else if constexpr (std::is_same_v<T, ConvexPotentialPerturbation>)
          fail(ErrorKind::InvalidSpec, "convex potential perturbations ('" + k.label + "') are not serializable");
        else
          return {{"kind", "truncation_box"}, {"half_widths", k.half_widths}};
      },
      p.kind);
  out["flags"] = {{"even", p.even}, {"unconditional", p.unconditional}, {"log_concave", p.log_concave}};
  return out;
}

PerturbationSpec perturbation_from_json(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  PerturbationSpec p;
  if (kind == "indicator") {
    p = indicator_perturbation(body_from_json(j.at("body")));
  } else if (kind == "exp_neg_quadratic") {
    p = quadratic_perturbation(matrix_from_json(j.at("matrix")));
  } else if (kind == "truncation_box") {
    p = truncation_perturbation(get<std::vector<double>>(j, "half_widths"));
  } else {
    fail(ErrorKind::InvalidSpec, "unknown perturbation kind '" + kind + "'");
  }
  if (j.contains("flags")) {
    const auto& f = j.at("flags");
    p.even = get_or<bool>(f, "even", p.even);
    p.unconditional = get_or<bool>(f, "unconditional", p.unconditional);
    p.log_concave = get_or<bool>(f, "log_concave", p.log_concave);
  }
  return p;
}

}  // namespace

Json measure_to_json(const MeasureSpec& spec) {
  Json j;
  j["dim"] = spec.dim;
  j["family"] = family_to_json(spec.family);
  if (!spec.scale.empty()) j["scale"] = spec.scale;
  j["perturbation"] = spec.perturbation ? perturbation_to_json(*spec.perturbation) : Json(nullptr);
  j["flags"] = {{"even", spec.even}, {"unconditional", spec.unconditional}};
  return j;
}

MeasureSpec measure_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::InvalidSpec, "measure spec must be a JSON object");
  MeasureSpec spec;
  spec.dim = get<int>(j, "dim");
  if (!j.contains("family")) fail(ErrorKind::InvalidSpec, "missing field 'family'");
  spec.family = family_from_json(j.at("family"), spec.dim);
  spec.scale = get_or<std::vector<double>>(j, "scale", {});
  if (j.contains("perturbation") && !j.at("perturbation").is_null())
    spec.perturbation = perturbation_from_json(j.at("perturbation"));
  if (j.contains("flags")) {
    spec.even = get_or<bool>(j.at("flags"), "even", false);
    spec.unconditional = get_or<bool>(j.at("flags"), "unconditional", false);
  }
  return spec;
}

}  // namespace loggap
