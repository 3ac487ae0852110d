#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "grid.hpp"
#include "model_io.hpp"
#include "predict.hpp"
#include "validity.hpp"

namespace sphcov {

/// 64-bit FNV-1a of a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Hash of the canonical (sorted-key, compact) dump of a configuration.
inline std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

/// Provenance attached to every output file.
struct RunInfo {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline json to_json(const RunInfo& r) { return {{"command", r.command}, {"config_hash", r.config_hash}, {"seed", r.seed}}; }

/// A rectangular table of JSON scalars, written as CSV or as a JSON array of
/// row objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) {
    if (row.size() != columns.size()) throw InvalidArgument("table row has the wrong number of cells");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isnan(d)) return "nan";
    return format_number(d);
  }
  if (v.is_number() || v.is_boolean()) return v.dump();
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace detail

inline void write_csv(std::ostream& out, const Table& t, const RunInfo& info) {
  out << "# command: " << info.command << "\n# config_hash: " << info.config_hash << "\n# seed: " << info.seed << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_cell(row[i]);
    out << '\n';
  }
}

inline json table_to_json(const Table& t, const RunInfo& info) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[t.columns[i]] = row[i];
    rows.push_back(std::move(o));
  }
  return {{"meta", to_json(info)}, {"rows", rows}};
}

enum class OutputFormat { Csv, Json };

/// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`; returns the path.
inline std::string write_table(const std::string& dir, const std::string& stem, const Table& t, const RunInfo& info,
                               OutputFormat fmt) {
  const std::string file = dir + "/" + stem + (fmt == OutputFormat::Csv ? ".csv" : ".json");
  std::ofstream out(file);
  if (!out) throw ConfigError(file, "cannot write output file");
  if (fmt == OutputFormat::Csv)
    write_csv(out, t, info);
  else
    out << table_to_json(t, info).dump(2) << '\n';
  return file;
}

inline void write_json(const std::string& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw ConfigError(file, "cannot write output file");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Conversions

inline json to_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

/// Aggregated table. Replicate records are written separately.
inline json to_json(const ScoreTable& t) {
  json models = json::array();
  for (const auto& m : t.models) {
    json params = json::array();
    for (const auto& [name, s] : m.parameters) {
      json e = to_json(s);
      e["name"] = name;
      params.push_back(e);
    }
    models.push_back({{"model", m.model},
                      {"succeeded", m.succeeded},
                      {"failed", m.failed},
                      {"parameters", params},
                      {"loglik", to_json(m.loglik)},
                      {"rmse", to_json(m.rmse)},
                      {"mae", to_json(m.mae)},
                      {"crps", to_json(m.crps)}});
  }
  return {{"title", t.title}, {"replicates", t.replicates}, {"models", models}};
}

inline void add_location_columns(std::vector<std::string>& cols, int dimension) {
  if (dimension == 1) {
    cols.push_back("angle_deg");
  } else {
    cols.push_back("lat");
    cols.push_back("lon");
  }
}

inline void add_location_cells(std::vector<json>& row, const Location& l) {
  if (l.dimension() == 1) {
    row.push_back(rad2deg(l.angle_rad()));
  } else {
    row.push_back(l.lat_deg());
    row.push_back(l.lon_deg());
  }
}

inline Table replicate_table(const ScoreTable& t, const std::vector<std::pair<std::string, json>>& leading = {}) {
  Table out;
  for (const auto& [k, v] : leading) out.columns.push_back(k);
  for (const char* c : {"replicate", "model", "ok", "loglik", "rmse", "mae", "crps", "converged", "evaluations", "jitter",
                        "at_boundary", "parameters", "error"})
    out.columns.push_back(c);
  for (const auto& r : t.records) {
    std::vector<json> row;
    for (const auto& [k, v] : leading) row.push_back(v);
    std::string params, bound;
    for (const auto& [name, v] : r.parameters) params += (params.empty() ? "" : ";") + name + "=" + detail::format_number(v);
    for (const auto& b : r.at_boundary) bound += (bound.empty() ? "" : ";") + b;
    row.insert(row.end(), {json(r.replicate), json(r.model), json(r.ok), json(r.loglik), json(r.rmse), json(r.mae),
                           json(r.crps), json(r.converged), json(r.evaluations), json(r.jitter), json(bound),
                           json(params), json(r.error)});
    out.add(std::move(row));
  }
  return out;
}

inline Table point_table(std::span<const PointRecord> points, int dimension,
                         const std::vector<std::pair<std::string, json>>& leading = {}) {
  Table out;
  for (const auto& [k, v] : leading) out.columns.push_back(k);
  out.columns.insert(out.columns.end(), {"replicate", "model", "index"});
  add_location_columns(out.columns, dimension);
  out.columns.insert(out.columns.end(), {"nearest_distance", "observed", "mean", "sd", "abs_error", "crps"});
  for (const auto& p : points) {
    std::vector<json> row;
    for (const auto& [k, v] : leading) row.push_back(v);
    row.insert(row.end(), {json(p.replicate), json(p.model), json(p.index)});
    add_location_cells(row, p.location);
    row.insert(row.end(), {json(p.nearest_distance), json(p.observed), json(p.mean), json(p.sd), json(p.abs_error),
                           json(p.crps)});
    out.add(std::move(row));
  }
  return out;
}

inline Table curve_table(std::span<const CurvePoint> curves, int dimension,
                         const std::vector<std::pair<std::string, json>>& leading = {}) {
  Table out;
  for (const auto& [k, v] : leading) out.columns.push_back(k);
  out.columns.insert(out.columns.end(), {"model", "index"});
  add_location_columns(out.columns, dimension);
  out.columns.insert(out.columns.end(), {"n", "mae_mean", "mae_sd", "crps_mean", "crps_sd"});
  for (const auto& c : curves) {
    std::vector<json> row;
    for (const auto& [k, v] : leading) row.push_back(v);
    row.insert(row.end(), {json(c.model), json(c.index)});
    add_location_cells(row, c.location);
    row.insert(row.end(), {json(c.abs_error.n), json(c.abs_error.mean), json(c.abs_error.sd), json(c.crps.mean),
                           json(c.crps.sd)});
    out.add(std::move(row));
  }
  return out;
}

inline Table boxplot_table(const std::vector<BinnedDifferences>& diffs) {
  Table out;
  out.columns = {"model_a", "model_b", "replicate", "index", "nearest_distance", "bin", "abs_error_diff", "crps_diff"};
  for (const auto& d : diffs)
    for (const auto& p : d.points)
      out.add({d.model_a, d.model_b, p.replicate, p.index, p.nearest_distance, p.bin, p.abs_error_diff, p.crps_diff});
  return out;
}

inline Table bin_table(const std::vector<BinnedDifferences>& diffs) {
  Table out;
  out.columns = {"model_a",       "model_b",     "bin",          "lower",         "upper",
                 "n",             "abs_error_diff_mean", "abs_error_diff_sd", "crps_diff_mean", "crps_diff_sd"};
  for (const auto& d : diffs)
    for (const auto& b : d.bins)
      out.add({d.model_a, d.model_b, b.bin, b.lower, b.upper, b.abs_error_diff.n, b.abs_error_diff.mean,
               b.abs_error_diff.sd, b.crps_diff.mean, b.crps_diff.sd});
  return out;
}

inline json to_json(const ValidityVerdict& v) {
  json j = {{"valid", v.valid},
            {"verdict", v.valid ? "valid" : "invalid"},
            {"method", v.method},
            {"dimension", v.dimension},
            {"n_max", v.n_max},
            {"tolerance", v.tolerance},
            {"coefficients", v.coefficients}};
  if (v.first_violation)
    j["first_violation"] = {{"n", v.first_violation->index}, {"value", v.first_violation->value}};
  else
    j["first_violation"] = nullptr;
  if (v.method != "catalog") {
    j["tail"] = {{"origin_index", std::isfinite(v.tail.origin_index) ? json(v.tail.origin_index) : json(nullptr)},
                 {"antipode_slope", v.tail.antipode_slope},
                 {"alternating", v.tail.alternating}};
  }
  return j;
}

inline Table prediction_table(std::span<const Prediction> preds, int dimension) {
  Table out;
  add_location_columns(out.columns, dimension);
  out.columns.insert(out.columns.end(), {"mean", "sd", "nearest_distance", "observed", "abs_error", "crps"});
  for (const auto& p : preds) {
    std::vector<json> row;
    add_location_cells(row, p.location);
    row.insert(row.end(), {json(p.mean), json(p.sd), json(p.nearest_distance)});
    if (p.observed) {
      row.insert(row.end(), {json(*p.observed), json(std::abs(*p.observed - p.mean)),
                             json(crps_gaussian(p.mean, p.sd, *p.observed))});
    } else {
      row.insert(row.end(), {json(nullptr), json(nullptr), json(nullptr)});
    }
    out.add(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Point data files

/// Reads point data: a header naming `lat,lon[,value]` or `angle_deg[,value]`
/// columns (any order, extra columns ignored), '#' lines skipped. Missing
/// values read as NaN when `need_value` is false.
inline std::vector<Observation> load_observations(std::istream& in, const std::string& name, bool need_value = true) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  int ilat = -1, ilon = -1, iang = -1, ival = -1;
  std::vector<Observation> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split_csv(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (header.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string c(cells[i]);
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
        while (!c.empty() && c.back() == ' ') c.pop_back();
        header.push_back(c);
        const int k = static_cast<int>(i);
        if (c == "lat") ilat = k;
        if (c == "lon") ilon = k;
        if (c == "angle_deg") iang = k;
        if (c == "value") ival = k;
      }
      const bool geo = ilat >= 0 && ilon >= 0;
      if (geo == (iang >= 0)) throw ConfigError(where, "header must name either lat,lon or angle_deg columns");
      if (need_value && ival < 0) throw ConfigError(where, "header has no value column");
      continue;
    }
    if (cells.size() != header.size())
      throw ConfigError(where, "expected " + std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    auto num = [&](int i) { return detail::parse_number(cells[static_cast<std::size_t>(i)], where); };
    Observation o{};
    try {
      o.location = iang >= 0 ? Location::angle(deg2rad(num(iang))) : Location::latlon(num(ilat), num(ilon));
    } catch (const InvalidArgument& e) {
      throw ConfigError(where, e.what());
    }
    o.value = ival >= 0 ? num(ival) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(o);
  }
  if (header.empty()) throw ConfigError(name, "empty data file");
  return out;
}

inline std::vector<Observation> load_observations(const std::string& path, bool need_value = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open data file");
  return load_observations(in, path, need_value);
}

}  // namespace sphcov
