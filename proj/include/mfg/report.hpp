#pragma once

#include "mfg/bounds.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/measures.hpp"

#include <json.hpp>

#include <string>

namespace mfg {

using Json = nlohmann::json;

/// Serializes with keys sorted, numbers printed with 17 significant digits
/// and non-finite numbers as null.
std::string emit_json(const Json& value, int indent = 2);

Json to_json(const Vec& v);
Json to_json(const Mat& m);  ///< row-major nested arrays
Json to_json(const AprioriBounds& b);
Json to_json(const AdmissibilityReport& r);
Json to_json(const H1Report& r);
Json to_json(const EquilibriumReport& r, bool include_paths = false);

}  // namespace mfg
