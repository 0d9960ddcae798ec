#pragma once

#include <string>

#include <json.hpp>

#include "measure.hpp"

namespace freeconv {

/// Parses a measure spec:
///   {"family":"semicircle","variance":t}
///   {"family":"marchenko_pastur","ratio":c,"scale":s}
///   {"family":"point_mass","a":x}
///   {"family":"bernoulli_symmetric"}
///   {"family":"empirical","points":[...]}
///   {"atoms":[[x,w],...], "density":{"intervals":[{"a":..,"b":..,"nodes":[..],"values":[..]}]}}
/// Throws MeasureError on malformed input.
SpectralMeasure measure_from_json(const nlohmann::json& j);
SpectralMeasure measure_from_json_text(const std::string& text);

nlohmann::json measure_to_json(const SpectralMeasure& tau);

}  // namespace freeconv
