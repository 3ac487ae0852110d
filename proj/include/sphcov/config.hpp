#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "experiments.hpp"
#include "field.hpp"
#include "fit.hpp"
#include "grid.hpp"
#include "model_io.hpp"

namespace sphcov {

namespace io {

inline bool boolean_or(const json& j, const std::string& key, bool fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(path + "/" + key, "expected a boolean");
  return j.at(key).get<bool>();
}

inline std::size_t count_or(const json& j, const std::string& key, std::size_t fallback, const std::string& path) {
  const auto v = integer_or(j, key, static_cast<long long>(fallback), path);
  if (v < 0) throw ConfigError(path + "/" + key, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t seed_or(const json& j, const std::string& key, std::uint64_t fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(path + "/" + key, "expected a nonnegative integer seed");
}

inline const json& array(const json& j, const std::string& key, const std::string& path) {
  const auto& a = field(j, key, path);
  if (!a.is_array()) throw ConfigError(path + "/" + key, "expected an array");
  return a;
}

inline std::pair<double, double> pair_or(const json& j, const std::string& key, std::pair<double, double> fallback,
                                         const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ConfigError(path + "/" + key, "expected a two-element array");
  return {number(a[0], path + "/" + key + "/0"), number(a[1], path + "/" + key + "/1")};
}

inline std::vector<std::string> strings_or(const json& j, const std::string& key, std::vector<std::string> fallback,
                                           const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& a = array(j, key, path);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(string(a[i], path + "/" + key + "/" + std::to_string(i)));
  return out;
}

/// Rejects keys outside `allowed`, so typos surface as errors.
inline void only_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError(path + "/" + k, "unknown field");
  }
}

inline json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace io

// ---------------------------------------------------------------------------
// Mean

inline json to_json(const MeanModel& m) {
  return {{"kind", std::string(to_string(m.kind))}, {"coefficients", m.coefficients}};
}

/// "zero" | "constant" | "harmonic" (coefficients fitted later), or
/// {kind, coefficients[3]} for a fixed mean.
inline std::pair<MeanKind, std::optional<MeanModel>> mean_from_json(const json& j, const std::string& path) {
  if (j.is_string()) return {io::at_path(path, [&] { return mean_kind_from_string(j.get<std::string>()); }), std::nullopt};
  io::only_keys(j, {"kind", "coefficients"}, path);
  const auto kind = io::at_path(path + "/kind", [&] { return mean_kind_from_string(io::string(j, "kind", path)); });
  if (!j.contains("coefficients")) return {kind, std::nullopt};
  const auto& c = io::array(j, "coefficients", path);
  if (c.size() != 3) throw ConfigError(path + "/coefficients", "expected three coefficients");
  MeanModel m;
  m.kind = kind;
  for (std::size_t i = 0; i < 3; ++i) m.coefficients[i] = io::number(c[i], path + "/coefficients/" + std::to_string(i));
  return {kind, m};
}

// ---------------------------------------------------------------------------
// Fitting

inline json to_json(const FitOptions& o) {
  return {{"starts", o.starts},
          {"max_evaluations", o.max_evaluations},
          {"tolerance", o.tolerance},
          {"tie_loglik", o.tie_loglik},
          {"nugget", o.nugget},
          {"nugget_bounds", {o.nugget_lower, o.nugget_upper}}};
}

inline FitOptions fit_options_from_json(const json& j, const std::string& path, FitOptions o = {}) {
  io::only_keys(j, {"starts", "max_evaluations", "tolerance", "tie_loglik", "nugget", "nugget_bounds"}, path);
  o.starts = static_cast<int>(io::integer_or(j, "starts", o.starts, path));
  o.max_evaluations = static_cast<int>(io::integer_or(j, "max_evaluations", o.max_evaluations, path));
  o.tolerance = io::number_or(j, "tolerance", o.tolerance, path);
  o.tie_loglik = io::number_or(j, "tie_loglik", o.tie_loglik, path);
  o.nugget = io::boolean_or(j, "nugget", o.nugget, path);
  std::tie(o.nugget_lower, o.nugget_upper) = io::pair_or(j, "nugget_bounds", {o.nugget_lower, o.nugget_upper}, path);
  if (o.starts < 1) throw ConfigError(path + "/starts", "must be at least 1");
  if (o.max_evaluations < 1) throw ConfigError(path + "/max_evaluations", "must be at least 1");
  if (!(o.tolerance > 0.0)) throw ConfigError(path + "/tolerance", "must be positive");
  if (!(o.nugget_lower > 0.0 && o.nugget_lower < o.nugget_upper))
    throw ConfigError(path + "/nugget_bounds", "need 0 < lower < upper");
  return o;
}

inline json to_json(const FitSpec& s) {
  json free = json::array();
  for (const auto& p : s.free) {
    json e = {{"path", p.path},
              {"lower", p.lower},
              {"upper", p.upper},
              {"scale", p.scale == ParamScale::Log ? "log" : "logit"}};
    if (p.initial) e["initial"] = *p.initial;
    free.push_back(e);
  }
  json ties = json::array();
  for (const auto& t : s.ties) ties.push_back({{"target", t.target}, {"source", t.source}});
  return {{"model", to_json(s.model)}, {"free", free}, {"ties", ties}, {"options", to_json(s.options)}};
}

/// {model, free: [path | {path, lower?, upper?, initial?, scale?}], ties?, options?}.
/// Bare paths and omitted bounds take the defaults for that parameter.
inline FitSpec fit_spec_from_json(const json& j, const std::string& path) {
  io::only_keys(j, {"model", "free", "ties", "options"}, path);
  FitSpec spec{model_from_json(io::field(j, "model", path), path + "/model"), {}, {}, {}};
  const auto& free = io::array(j, "free", path);
  for (std::size_t i = 0; i < free.size(); ++i) {
    const std::string p = path + "/free/" + std::to_string(i);
    const auto& e = free[i];
    const std::string name = e.is_string() ? e.get<std::string>() : io::string(e, "path", p);
    if (!spec.model.has_parameter(name)) throw ConfigError(p, "model has no parameter '" + name + "'");
    FreeParameter fp = io::at_path(p, [&] { return default_free_parameter(spec.model, name); });
    if (e.is_object()) {
      io::only_keys(e, {"path", "lower", "upper", "initial", "scale"}, p);
      fp.lower = io::number_or(e, "lower", fp.lower, p);
      fp.upper = io::number_or(e, "upper", fp.upper, p);
      if (e.contains("initial")) fp.initial = io::number(e.at("initial"), p + "/initial");
      if (e.contains("scale")) {
        const auto sc = io::string(e, "scale", p);
        if (sc == "log") fp.scale = ParamScale::Log;
        else if (sc == "logit") fp.scale = ParamScale::Logit;
        else throw ConfigError(p + "/scale", "expected 'log' or 'logit'");
      }
    } else if (!e.is_string()) {
      throw ConfigError(p, "expected a parameter path or an object");
    }
    if (!(fp.lower < fp.upper)) throw ConfigError(p, "need lower < upper");
    if (fp.scale == ParamScale::Log && !(fp.lower > 0.0)) throw ConfigError(p + "/lower", "log scale needs a positive lower bound");
    spec.free.push_back(fp);
  }
  if (j.contains("ties")) {
    const auto& ties = io::array(j, "ties", path);
    for (std::size_t i = 0; i < ties.size(); ++i) {
      const std::string p = path + "/ties/" + std::to_string(i);
      io::only_keys(ties[i], {"target", "source"}, p);
      Tie t{io::string(ties[i], "target", p), io::string(ties[i], "source", p)};
      if (!spec.model.has_parameter(t.target)) throw ConfigError(p + "/target", "model has no parameter '" + t.target + "'");
      if (!spec.model.has_parameter(t.source)) throw ConfigError(p + "/source", "model has no parameter '" + t.source + "'");
      spec.ties.push_back(t);
    }
  }
  if (j.contains("options")) spec.options = fit_options_from_json(j.at("options"), path + "/options");
  return spec;
}

inline json to_json(const FittedModel& f) {
  json starts = json::array();
  for (const auto& s : f.starts)
    starts.push_back({{"initial_loglik", s.initial_loglik},
                      {"final_loglik", s.final_loglik},
                      {"evaluations", s.evaluations},
                      {"converged", s.converged}});
  return {{"model", to_json(f.model)},     {"loglik", f.loglik}, {"converged", f.converged},
          {"evaluations", f.evaluations},  {"jitter", f.jitter}, {"nugget", f.nugget},
          {"at_boundary", f.at_boundary},  {"starts", starts}};
}

// ---------------------------------------------------------------------------
// Designs

inline json to_json(const LatLonBox& b) {
  return {{"lat", {b.lat_min, b.lat_max}}, {"lon", {b.lon_min, b.lon_max}}};
}

inline LatLonBox box_from_json(const json& j, const std::string& path, LatLonBox b) {
  io::only_keys(j, {"lat", "lon"}, path);
  std::tie(b.lat_min, b.lat_max) = io::pair_or(j, "lat", {b.lat_min, b.lat_max}, path);
  std::tie(b.lon_min, b.lon_max) = io::pair_or(j, "lon", {b.lon_min, b.lon_max}, path);
  if (!(b.lat_min <= b.lat_max) || b.lat_min < -90.0 || b.lat_max > 90.0)
    throw ConfigError(path + "/lat", "need -90 <= min <= max <= 90");
  if (b.lon_min < -180.0 || b.lon_max > 180.0) throw ConfigError(path + "/lon", "longitudes must lie in [-180, 180]");
  return b;
}

inline json to_json(const Design& d) {
  return {{"kind", std::string(to_string(d.kind))},
          {"replicates", d.replicates},
          {"seed", d.seed},
          {"n_estimation", d.n_estimation},
          {"n_prediction", d.n_prediction},
          {"arc_deg", {d.arc_min_deg, d.arc_max_deg}},
          {"prediction_arc_deg", {d.prediction_arc_min_deg, d.prediction_arc_max_deg}},
          {"estimation_below", d.estimation_below},
          {"prediction_above", d.prediction_above},
          {"estimation_region", to_json(d.estimation_region)},
          {"prediction_region", to_json(d.prediction_region)}};
}

/// Unspecified fields take the defaults of the design's kind.
inline Design design_from_json(const json& j, const std::string& path) {
  io::only_keys(j,
                {"kind", "replicates", "seed", "n_estimation", "n_prediction", "arc_deg", "prediction_arc_deg",
                 "estimation_below", "prediction_above", "estimation_region", "prediction_region"},
                path);
  const auto kind = io::at_path(path + "/kind", [&] { return design_kind_from_string(io::string(j, "kind", path)); });
  Design d;
  switch (kind) {
    case DesignKind::S1Arc: d = Design::s1(); break;
    case DesignKind::S2Threshold: d = Design::s2(); break;
    case DesignKind::GeoRegion: d = Design::geo_region(); break;
    case DesignKind::GeoHemisphere: d = Design::geo_hemisphere(); break;
  }
  d.replicates = io::count_or(j, "replicates", d.replicates, path);
  d.seed = io::seed_or(j, "seed", d.seed, path);
  d.n_estimation = io::count_or(j, "n_estimation", d.n_estimation, path);
  d.n_prediction = io::count_or(j, "n_prediction", d.n_prediction, path);
  std::tie(d.arc_min_deg, d.arc_max_deg) = io::pair_or(j, "arc_deg", {d.arc_min_deg, d.arc_max_deg}, path);
  std::tie(d.prediction_arc_min_deg, d.prediction_arc_max_deg) =
      io::pair_or(j, "prediction_arc_deg", {d.prediction_arc_min_deg, d.prediction_arc_max_deg}, path);
  d.estimation_below = io::number_or(j, "estimation_below", d.estimation_below, path);
  d.prediction_above = io::number_or(j, "prediction_above", d.prediction_above, path);
  if (j.contains("estimation_region"))
    d.estimation_region = box_from_json(j.at("estimation_region"), path + "/estimation_region", d.estimation_region);
  if (j.contains("prediction_region"))
    d.prediction_region = box_from_json(j.at("prediction_region"), path + "/prediction_region", d.prediction_region);
  try {
    d.validate();
  } catch (const DesignError& e) {
    throw ConfigError(path, e.what());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Experiment configurations

inline std::vector<std::pair<std::string, std::string>> pairs_or(const json& j, const std::string& key,
                                                                 std::vector<std::pair<std::string, std::string>> fallback,
                                                                 const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& a = io::array(j, key, path);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = path + "/" + key + "/" + std::to_string(i);
    if (!a[i].is_array() || a[i].size() != 2) throw ConfigError(p, "expected a pair of model names");
    out.emplace_back(io::string(a[i][0], p + "/0"), io::string(a[i][1], p + "/1"));
  }
  return out;
}

struct S1Config {
  Design design = Design::s1();
  S1Options options;
};

inline S1Config s1_config_from_json(const json& j) {
  io::only_keys(j, {"experiment", "design", "ranges", "sigma2", "fix_truth", "models", "fit"}, "");
  S1Config c;
  c.design = design_from_json(io::field(j, "design", ""), "/design");
  if (c.design.kind != DesignKind::S1Arc) throw ConfigError("/design/kind", "s1 experiments need an s1_arc design");
  if (j.contains("ranges")) {
    const auto& r = io::array(j, "ranges", "");
    c.options.ranges.clear();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double a = io::number(r[i], "/ranges/" + std::to_string(i));
      if (!(a > 0.0)) throw ConfigError("/ranges/" + std::to_string(i), "range must be positive");
      c.options.ranges.push_back(a);
    }
    if (c.options.ranges.empty()) throw ConfigError("/ranges", "need at least one range");
  }
  c.options.sigma2 = io::number_or(j, "sigma2", c.options.sigma2, "");
  c.options.fix_truth = io::boolean_or(j, "fix_truth", c.options.fix_truth, "");
  c.options.models = io::strings_or(j, "models", c.options.models, "");
  if (c.options.models.empty()) throw ConfigError("/models", "empty model list");
  for (std::size_t i = 0; i < c.options.models.size(); ++i)
    io::at_path("/models/" + std::to_string(i), [&] { return named_fit_spec(c.options.models[i], ExperimentKind::S1); });
  if (j.contains("fit")) c.options.fit = fit_options_from_json(j.at("fit"), "/fit");
  return c;
}

inline json to_json(const S1Config& c) {
  return {{"experiment", "s1"},        {"design", to_json(c.design)}, {"ranges", c.options.ranges},
          {"sigma2", c.options.sigma2}, {"fix_truth", c.options.fix_truth}, {"models", c.options.models},
          {"fit", to_json(c.options.fit)}};
}

struct S2Config {
  Design design = Design::s2();
  S2Options options;
  std::vector<std::pair<std::string, std::string>> boxplot_pairs{{"MC", "MG"}, {"MC", "C"}};
  std::size_t bins = 10;
};

inline json to_json(const S2Generator& g) {
  if (g.model) return {{"model", to_json(*g.model)}};
  return {{"kappa", g.kappa}, {"theta", g.theta}, {"alpha", g.alpha}, {"sigma", g.sigma}, {"degree", g.degree}};
}

inline S2Generator s2_generator_from_json(const json& j, const std::string& path) {
  io::only_keys(j, {"kappa", "theta", "alpha", "sigma", "degree", "model"}, path);
  S2Generator g;
  if (j.contains("model")) {
    if (j.size() != 1) throw ConfigError(path, "a model generator takes no spectral parameters");
    g.model = model_from_json(j.at("model"), path + "/model");
    if (!(g.model->sphere() == Sphere::earth())) throw ConfigError(path + "/model/sphere", "must be the Earth sphere {d: 2, r: 6371}");
    return g;
  }
  g.kappa = io::number_or(j, "kappa", g.kappa, path);
  g.theta = io::number_or(j, "theta", g.theta, path);
  g.alpha = io::number_or(j, "alpha", g.alpha, path);
  g.sigma = io::number_or(j, "sigma", g.sigma, path);
  g.degree = static_cast<int>(io::integer_or(j, "degree", g.degree, path));
  io::at_path(path, [&] { return oscillating_matern_spectrum(g.kappa, g.theta, g.alpha, g.sigma, 0); });
  if (g.degree < 1) throw ConfigError(path + "/degree", "must be at least 1");
  return g;
}

inline S2Config s2_config_from_json(const json& j) {
  io::only_keys(j, {"experiment", "design", "generator", "grid", "redraw_field", "models", "fit", "boxplot_pairs", "bins"}, "");
  S2Config c;
  c.design = design_from_json(io::field(j, "design", ""), "/design");
  if (c.design.kind != DesignKind::S2Threshold) throw ConfigError("/design/kind", "s2 experiments need an s2_threshold design");
  if (j.contains("generator")) c.options.generator = s2_generator_from_json(j.at("generator"), "/generator");
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    io::only_keys(g, {"nlat", "nlon"}, "/grid");
    c.options.nlat = io::count_or(g, "nlat", c.options.nlat, "/grid");
    c.options.nlon = io::count_or(g, "nlon", c.options.nlon, "/grid");
    if (c.options.nlat == 0 || c.options.nlon == 0) throw ConfigError("/grid", "grid sizes must be positive");
  }
  c.options.redraw_field = io::boolean_or(j, "redraw_field", c.options.redraw_field, "");
  c.options.models = io::strings_or(j, "models", c.options.models, "");
  if (c.options.models.empty()) throw ConfigError("/models", "empty model list");
  for (std::size_t i = 0; i < c.options.models.size(); ++i)
    io::at_path("/models/" + std::to_string(i), [&] { return named_fit_spec(c.options.models[i], ExperimentKind::S2); });
  if (j.contains("fit")) c.options.fit = fit_options_from_json(j.at("fit"), "/fit");
  c.boxplot_pairs = pairs_or(j, "boxplot_pairs", c.boxplot_pairs, "");
  c.bins = io::count_or(j, "bins", c.bins, "");
  if (c.bins == 0) throw ConfigError("/bins", "must be positive");
  return c;
}

inline json to_json(const S2Config& c) {
  json pairs = json::array();
  for (const auto& [a, b] : c.boxplot_pairs) pairs.push_back({a, b});
  return {{"experiment", "s2"},
          {"design", to_json(c.design)},
          {"generator", to_json(c.options.generator)},
          {"grid", {{"nlat", c.options.nlat}, {"nlon", c.options.nlon}}},
          {"redraw_field", c.options.redraw_field},
          {"models", c.options.models},
          {"fit", to_json(c.options.fit)},
          {"boxplot_pairs", pairs},
          {"bins", c.bins}};
}

/// Source of gridded data: a grid CSV file, or a synthetic draw from a model
/// plus mean on a regular grid with spacing `step_deg`.
struct GeoData {
  std::string path;
  Transform transform = Transform::None;
  std::optional<Model> model;
  MeanModel mean;
  double step_deg = 5.0;
  std::uint64_t seed = 1;
};

inline json to_json(const GeoData& d) {
  if (d.model)
    return {{"synthetic", {{"model", to_json(*d.model)}, {"mean", to_json(d.mean)}, {"step_deg", d.step_deg}, {"seed", d.seed}}}};
  return {{"path", d.path}, {"transform", std::string(to_string(d.transform))}};
}

inline GeoData geo_data_from_json(const json& j, const std::string& path) {
  io::only_keys(j, {"path", "transform", "synthetic"}, path);
  GeoData d;
  if (j.contains("synthetic")) {
    const std::string p = path + "/synthetic";
    const auto& s = j.at("synthetic");
    io::only_keys(s, {"model", "mean", "step_deg", "seed"}, p);
    d.model = model_from_json(io::field(s, "model", p), p + "/model");
    if (!(d.model->sphere() == Sphere::earth())) throw ConfigError(p + "/model/sphere", "must be the Earth sphere {d: 2, r: 6371}");
    if (s.contains("mean")) {
      auto [kind, fixed] = mean_from_json(s.at("mean"), p + "/mean");
      if (!fixed) throw ConfigError(p + "/mean", "a synthetic mean needs coefficients");
      d.mean = *fixed;
    }
    d.step_deg = io::number_or(s, "step_deg", d.step_deg, p);
    if (!(d.step_deg > 0.0) || std::abs(180.0 / d.step_deg - std::round(180.0 / d.step_deg)) > 1e-9)
      throw ConfigError(p + "/step_deg", "must divide 180");
    d.seed = io::seed_or(s, "seed", d.seed, p);
    return d;
  }
  d.path = io::string(j, "path", path);
  d.transform = io::at_path(path + "/transform", [&] { return transform_from_string(io::string_or(j, "transform", "none", path)); });
  return d;
}

inline GridDataset load_geo_data(const GeoData& d) {
  if (d.model) {
    GridDataset g = synthetic_grid(*d.model, d.mean, GridDataset::regular(d.step_deg), d.seed);
    g.provenance = "synthetic";
    return g;
  }
  return load_grid(d.path, d.transform);
}

struct GeoConfig {
  Design design = Design::geo_region();
  GeoData data;
  std::vector<MeanKind> means{MeanKind::Constant};
  GeoOptions options;
  std::vector<std::pair<std::string, std::string>> boxplot_pairs{{"MC", "C"}, {"WC", "WG"}};
  std::size_t bins = 10;
};

inline GeoConfig geo_config_from_json(const json& j) {
  io::only_keys(j, {"experiment", "design", "data", "mean", "models", "fit", "boxplot_pairs", "bins"}, "");
  GeoConfig c;
  c.design = design_from_json(io::field(j, "design", ""), "/design");
  if (c.design.kind != DesignKind::GeoRegion && c.design.kind != DesignKind::GeoHemisphere)
    throw ConfigError("/design/kind", "geo experiments need a geo_region or geo_hemisphere design");
  c.data = geo_data_from_json(io::field(j, "data", ""), "/data");
  if (j.contains("mean")) {
    const auto& m = j.at("mean");
    c.means.clear();
    if (m.is_string()) {
      c.means.push_back(io::at_path("/mean", [&] { return mean_kind_from_string(m.get<std::string>()); }));
    } else if (m.is_array()) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::string p = "/mean/" + std::to_string(i);
        c.means.push_back(io::at_path(p, [&] { return mean_kind_from_string(io::string(m[i], p)); }));
      }
    } else {
      throw ConfigError("/mean", "expected a mean kind or an array of them");
    }
    if (c.means.empty()) throw ConfigError("/mean", "need at least one mean kind");
  }
  c.options.models = io::strings_or(j, "models", c.options.models, "");
  if (c.options.models.empty()) throw ConfigError("/models", "empty model list");
  for (std::size_t i = 0; i < c.options.models.size(); ++i)
    io::at_path("/models/" + std::to_string(i), [&] { return named_fit_spec(c.options.models[i], ExperimentKind::Geo); });
  if (j.contains("fit")) c.options.fit = fit_options_from_json(j.at("fit"), "/fit");
  c.boxplot_pairs = pairs_or(j, "boxplot_pairs", c.boxplot_pairs, "");
  c.bins = io::count_or(j, "bins", c.bins, "");
  if (c.bins == 0) throw ConfigError("/bins", "must be positive");
  return c;
}

inline json to_json(const GeoConfig& c) {
  json means = json::array();
  for (auto m : c.means) means.push_back(std::string(to_string(m)));
  json pairs = json::array();
  for (const auto& [a, b] : c.boxplot_pairs) pairs.push_back({a, b});
  return {{"experiment", "geo"},
          {"design", to_json(c.design)},
          {"data", to_json(c.data)},
          {"mean", means},
          {"models", c.options.models},
          {"fit", to_json(c.options.fit)},
          {"boxplot_pairs", pairs},
          {"bins", c.bins}};
}

}  // namespace sphcov
