#pragma once

#include <json.hpp>

#include "loggap/measure.hpp"

namespace loggap {

using Json = nlohmann::json;

/// Schema: {"dim", "family": {"type", ...}, "scale": [...], "perturbation":
/// {"kind", ..., "flags"} | null, "flags": {"even", "unconditional"}}.
Json measure_to_json(const MeasureSpec& spec);
MeasureSpec measure_from_json(const Json& j);

Json body_to_json(const Body& body);
Body body_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

}  // namespace loggap
