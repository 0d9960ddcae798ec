#include "measure_json.hpp"

#include <cmath>

#include "errors.hpp"

namespace freeconv {

namespace {

using nlohmann::json;

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw MeasureError(std::string("measure spec needs numeric field \"") + key + "\"");
  }
  return j.at(key).get<double>();
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw MeasureError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw MeasureError(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

DensityPiece parse_interval(const json& iv) {
  if (!iv.is_object()) throw MeasureError("density interval must be an object");
  const double a = number(iv, "a");
  const double b = number(iv, "b");
  if (!(a < b)) throw MeasureError("density interval needs a < b");
  if (!iv.contains("values")) throw MeasureError("density interval needs \"values\"");
  DensityPiece p;
  p.values = numbers(iv.at("values"), "values");
  if (iv.contains("nodes")) {
    p.nodes = numbers(iv.at("nodes"), "nodes");
  } else {
    // Uniform grid on [a, b] when nodes are omitted.
    const std::size_t n = p.values.size();
    if (n < 2) throw MeasureError("density interval needs at least 2 values");
    p.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.nodes[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
  }
  if (p.nodes.size() != p.values.size()) throw MeasureError("nodes and values differ in length");
  if (p.nodes.empty() || p.nodes.front() != a || p.nodes.back() != b) {
    throw MeasureError("density nodes must start at a and end at b");
  }
  return p;
}

}  // namespace

SpectralMeasure measure_from_json(const json& j) {
  if (!j.is_object()) throw MeasureError("measure spec must be a JSON object");
  if (j.contains("family")) {
    if (!j.at("family").is_string()) throw MeasureError("\"family\" must be a string");
    const auto fam = j.at("family").get<std::string>();
    if (fam == "semicircle") return SpectralMeasure::semicircle(number(j, "variance"));
    if (fam == "marchenko_pastur") {
      return SpectralMeasure::marchenko_pastur(number(j, "ratio"), j.contains("scale") ? number(j, "scale") : 1.0);
    }
    if (fam == "point_mass") return SpectralMeasure::point_mass(number(j, "a"));
    if (fam == "bernoulli_symmetric") return SpectralMeasure::bernoulli_symmetric();
    if (fam == "empirical") {
      if (!j.contains("points")) throw MeasureError("empirical measure needs \"points\"");
      const auto pts = numbers(j.at("points"), "points");
      return SpectralMeasure::empirical(pts);
    }
    throw MeasureError("unknown measure family \"" + fam + "\"");
  }

  std::vector<Atom> atoms;
  std::vector<DensityPiece> pieces;
  if (j.contains("atoms")) {
    const auto& arr = j.at("atoms");
    if (!arr.is_array()) throw MeasureError("\"atoms\" must be an array of [position, weight]");
    for (const auto& a : arr) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw MeasureError("each atom must be [position, weight]");
      }
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    if (!d.is_object() || !d.contains("intervals") || !d.at("intervals").is_array()) {
      throw MeasureError("\"density\" must be {\"intervals\": [...]}");
    }
    for (const auto& iv : d.at("intervals")) pieces.push_back(parse_interval(iv));
  }
  if (atoms.empty() && pieces.empty()) {
    throw MeasureError("measure spec needs \"family\", \"atoms\" or \"density\"");
  }
  const bool normalize = j.contains("normalize") && j.at("normalize").is_boolean() && j.at("normalize").get<bool>();
  return SpectralMeasure::from_parts(std::move(atoms), std::move(pieces), normalize);
}

SpectralMeasure measure_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MeasureError(std::string("invalid JSON: ") + e.what());
  }
  return measure_from_json(j);
}

json measure_to_json(const SpectralMeasure& tau) {
  switch (tau.family()) {
    case Family::Semicircle: return {{"family", "semicircle"}, {"variance", tau.semicircle_variance()}};
    case Family::MarchenkoPastur:
      return {{"family", "marchenko_pastur"}, {"ratio", tau.mp_ratio()}, {"scale", tau.mp_scale()}};
    case Family::PointMass: return {{"family", "point_mass"}, {"a", tau.atoms().front().position}};
    case Family::BernoulliSymmetric: return {{"family", "bernoulli_symmetric"}};
    default: break;
  }
  json out = json::object();
  if (!tau.atoms().empty()) {
    json arr = json::array();
    for (const auto& a : tau.atoms()) arr.push_back({a.position, a.weight});
    out["atoms"] = arr;
  }
  if (!tau.density_pieces().empty()) {
    json ivs = json::array();
    for (const auto& p : tau.density_pieces()) {
      ivs.push_back({{"a", p.a()}, {"b", p.b()}, {"nodes", p.nodes}, {"values", p.values}});
    }
    out["density"] = {{"intervals", ivs}};
  }
  return out;
}

}  // namespace freeconv
