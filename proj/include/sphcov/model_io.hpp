#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "errors.hpp"
#include "geometry.hpp"
#include "kernels.hpp"

namespace sphcov {

using json = nlohmann::json;

namespace io {

// Typed field access that reports failures with a JSON pointer.
inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "/" + key, "missing required field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline double number(const json& j, const std::string& key, const std::string& path) {
  return number(field(j, key, path), path + "/" + key);
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), path + "/" + key);
}

inline long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

inline long long integer_or(const json& j, const std::string& key, long long fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return integer(j.at(key), path + "/" + key);
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline std::string string(const json& j, const std::string& key, const std::string& path) {
  return string(field(j, key, path), path + "/" + key);
}

inline std::string string_or(const json& j, const std::string& key, const std::string& fallback,
                             const std::string& path) {
  if (!j.contains(key)) return fallback;
  return string(j.at(key), path + "/" + key);
}

// Runs `fn`, rethrowing InvalidArgument as a ConfigError located at `path`.
template <class F>
auto at_path(const std::string& path, F&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace io

inline json to_json(const Sphere& s) { return {{"d", s.dimension()}, {"r", s.radius()}}; }

inline Sphere sphere_from_json(const json& j, const std::string& path = "") {
  const auto d = io::integer(io::field(j, "d", path), path + "/d");
  const double r = io::number(j, "r", path);
  return io::at_path(path, [&] { return Sphere(static_cast<int>(d), r); });
}

inline json to_json(const Location& l) {
  if (l.dimension() == 1) return {{"angle_deg", rad2deg(l.angle_rad())}};
  return {{"lat", l.lat_deg()}, {"lon", l.lon_deg()}};
}

inline Location location_from_json(const json& j, const std::string& path = "") {
  if (j.is_object() && j.contains("angle_deg")) {
    const double a = io::number(j, "angle_deg", path);
    return io::at_path(path, [&] { return Location::angle(deg2rad(a)); });
  }
  const double lat = io::number(j, "lat", path);
  const double lon = io::number(j, "lon", path);
  return io::at_path(path, [&] { return Location::latlon(lat, lon); });
}

inline json to_json(const Model& m) {
  if (m.is_base()) {
    const auto& b = m.base();
    json params = json::object();
    const auto names = parameter_names(b.family());
    for (std::size_t i = 0; i < names.size(); ++i) params[std::string(names[i])] = b.params()[i];
    return {{"family", std::string(to_string(b.family()))},
            {"metric", std::string(to_string(b.metric()))},
            {"params", params},
            {"sphere", to_json(b.sphere())}};
  }
  json comps = json::array();
  for (const auto& c : m.components()) comps.push_back(to_json(c));
  if (m.kind() == Model::Kind::ConvexSum) return {{"kind", "convex_sum"}, {"weights", m.weights()}, {"components", comps}};
  return {{"kind", "product"}, {"components", comps}};
}

/// Accepts {family, metric, params{...}, sphere{d, r}} or a composite
/// {kind: convex_sum|product, weights?, components[...]}.
inline Model model_from_json(const json& j, const std::string& path = "") {
  if (!j.is_object()) throw ConfigError(path, "model must be an object");
  if (j.contains("kind")) {
    const auto kind = io::string(j, "kind", path);
    const auto& comps_j = io::field(j, "components", path);
    if (!comps_j.is_array()) throw ConfigError(path + "/components", "expected an array");
    std::vector<Model> comps;
    for (std::size_t i = 0; i < comps_j.size(); ++i)
      comps.push_back(model_from_json(comps_j[i], path + "/components/" + std::to_string(i)));
    if (kind == "convex_sum") {
      const auto& w_j = io::field(j, "weights", path);
      if (!w_j.is_array()) throw ConfigError(path + "/weights", "expected an array");
      std::vector<double> w;
      for (std::size_t i = 0; i < w_j.size(); ++i) w.push_back(io::number(w_j[i], path + "/weights/" + std::to_string(i)));
      return io::at_path(path, [&] { return Model::convex_sum(std::move(comps), std::move(w)); });
    }
    if (kind == "product") return io::at_path(path, [&] { return Model::product(std::move(comps)); });
    throw ConfigError(path + "/kind", "expected 'convex_sum' or 'product'");
  }
  const auto family = io::at_path(path + "/family", [&] { return family_from_string(io::string(j, "family", path)); });
  const auto metric = io::at_path(path + "/metric", [&] { return metric_from_string(io::string(j, "metric", path)); });
  const auto sphere = sphere_from_json(io::field(j, "sphere", path), path + "/sphere");
  const auto& p = io::field(j, "params", path);
  if (!p.is_object()) throw ConfigError(path + "/params", "expected an object");
  std::vector<double> values;
  for (auto name : parameter_names(family)) {
    values.push_back(io::number(p, std::string(name), path + "/params"));
  }
  for (const auto& [k, v] : p.items()) {
    bool known = false;
    for (auto name : parameter_names(family)) known = known || name == k;
    if (!known) throw ConfigError(path + "/params/" + k, "unknown parameter for family " + std::string(to_string(family)));
  }
  return io::at_path(path + "/params", [&] { return Model(CovarianceModel(family, metric, sphere, std::move(values))); });
}

}  // namespace sphcov
