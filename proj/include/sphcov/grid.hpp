#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"

namespace sphcov {

enum class Transform { None, Sqrt };

inline std::string_view to_string(Transform t) { return t == Transform::Sqrt ? "sqrt" : "none"; }

inline Transform transform_from_string(std::string_view s) {
  if (s == "none") return Transform::None;
  if (s == "sqrt") return Transform::Sqrt;
  throw InvalidArgument("unknown transform '" + std::string(s) + "'");
}

/// Regular lat/lon grid of scalar values. values(i, j) sits at
/// (latitudes[i], longitudes[j]). Longitudes may be given on [0, 360); they
/// are wrapped to (-180, 180] when converted to locations.
struct GridDataset {
  std::vector<double> latitudes;
  std::vector<double> longitudes;
  Eigen::MatrixXd values;
  Transform transform = Transform::None;
  std::string provenance;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }

  static double wrap_longitude(double lon) {
    if (lon > 180.0) lon -= 360.0;
    if (lon <= -180.0) lon += 360.0;
    return lon;
  }

  /// All cells as observations, row-major. Pole rows collapse to one point
  /// (their first cell) since every longitude names the same location there.
  std::vector<Observation> observations() const {
    std::vector<Observation> out;
    out.reserve(size());
    for (std::size_t i = 0; i < latitudes.size(); ++i) {
      const bool pole = std::abs(latitudes[i]) == 90.0;
      for (std::size_t j = 0; j < longitudes.size(); ++j) {
        if (pole && j > 0) break;
        out.push_back({Location::latlon(latitudes[i], wrap_longitude(longitudes[j])),
                       values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
      }
    }
    return out;
  }

  /// Cell-centred grid: nlat latitudes -90 + 180(i+1/2)/nlat, nlon longitudes
  /// -180 + 360(j+1/2)/nlon.
  static GridDataset cell_centred(std::size_t nlat, std::size_t nlon) {
    GridDataset g;
    for (std::size_t i = 0; i < nlat; ++i) g.latitudes.push_back(-90.0 + 180.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(nlat));
    for (std::size_t j = 0; j < nlon; ++j) g.longitudes.push_back(-180.0 + 360.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(nlon));
    g.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nlat), static_cast<Eigen::Index>(nlon));
    return g;
  }

  /// Node grid including both poles: latitudes -90..90 step `step`, longitudes
  /// -180+step..180 step `step` (the layout of 2.5-degree reanalysis grids).
  static GridDataset regular(double step) {
    GridDataset g;
    const auto nlat = static_cast<std::size_t>(std::lround(180.0 / step)) + 1;
    const auto nlon = static_cast<std::size_t>(std::lround(360.0 / step));
    for (std::size_t i = 0; i < nlat; ++i) g.latitudes.push_back(-90.0 + step * static_cast<double>(i));
    for (std::size_t j = 0; j < nlon; ++j) g.longitudes.push_back(-180.0 + step * static_cast<double>(j + 1));
    g.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nlat), static_cast<Eigen::Index>(nlon));
    return g;
  }

  friend bool operator==(const GridDataset& a, const GridDataset& b) {
    return a.latitudes == b.latitudes && a.longitudes == b.longitudes && a.values == b.values &&
           a.transform == b.transform && a.provenance == b.provenance;
  }
};

namespace detail {

inline double parse_number(std::string_view cell, const std::string& where) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ConfigError(where, "not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(v)) throw ConfigError(where, "non-finite value");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return {buf, ptr};
}

}  // namespace detail

/// Reads the grid CSV format:
///
///   # transform: sqrt            (optional; transform already applied)
///   # provenance: free text      (optional)
///   lat\lon,<lon_1>,...,<lon_m>
///   <lat_1>,<v_11>,...,<v_1m>
///   ...
///
/// Latitudes must be strictly ascending. `transform` is applied to the stored
/// values on load; applying sqrt to a file already marked sqrt is an error.
inline GridDataset load_grid(std::istream& in, Transform transform = Transform::None, const std::string& name = "grid") {
  GridDataset g;
  Transform stored = Transform::None;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  auto where = [&] { return name + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.starts_with("transform:")) {
        auto v = body.substr(10);
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        try {
          stored = transform_from_string(v);
        } catch (const InvalidArgument& e) {
          throw ConfigError(where(), e.what());
        }
      } else if (body.starts_with("provenance:")) {
        auto v = body.substr(11);
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        g.provenance = std::string(v);
      }
      continue;
    }
    const auto cells = detail::split_csv(line);
    if (!have_header) {
      if (cells.size() < 2) throw ConfigError(where(), "malformed header: need a corner cell and at least one longitude");
      for (std::size_t j = 1; j < cells.size(); ++j) {
        const double lon = detail::parse_number(cells[j], where());
        if (lon < -180.0 || lon >= 360.0) throw ConfigError(where(), "longitude out of range");
        g.longitudes.push_back(lon);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != g.longitudes.size() + 1)
      throw ConfigError(where(), "dimension mismatch: expected " + std::to_string(g.longitudes.size() + 1) + " cells, got " +
                                     std::to_string(cells.size()));
    const double lat = detail::parse_number(cells[0], where());
    if (lat < -90.0 || lat > 90.0) throw ConfigError(where(), "latitude outside [-90, 90]");
    if (!g.latitudes.empty() && !(lat > g.latitudes.back())) throw ConfigError(where(), "latitudes must be strictly ascending");
    g.latitudes.push_back(lat);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(detail::parse_number(cells[j], where()));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ConfigError(name, "malformed header: file is empty");
  if (rows.empty()) throw ConfigError(name, "no data rows");
  if (transform == Transform::Sqrt && stored == Transform::Sqrt)
    throw ConfigError(name, "grid is already square-root transformed");

  g.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(g.longitudes.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      double v = rows[i][j];
      if (transform == Transform::Sqrt) {
        if (v < 0.0) throw ConfigError(name, "negative value at row " + std::to_string(i + 1) + " under sqrt transform");
        v = std::sqrt(v);
      }
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  g.transform = transform == Transform::Sqrt ? Transform::Sqrt : stored;
  return g;
}

inline GridDataset load_grid(const std::string& path, Transform transform = Transform::None) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open grid file");
  return load_grid(in, transform, path);
}

/// Writes shortest round-trip representations, so load_grid(save_grid(g)) == g.
inline void save_grid(std::ostream& out, const GridDataset& g) {
  if (g.transform != Transform::None) out << "# transform: " << to_string(g.transform) << '\n';
  if (!g.provenance.empty()) out << "# provenance: " << g.provenance << '\n';
  out << "lat\\lon";
  for (double lon : g.longitudes) out << ',' << detail::format_number(lon);
  out << '\n';
  for (std::size_t i = 0; i < g.latitudes.size(); ++i) {
    out << detail::format_number(g.latitudes[i]);
    for (std::size_t j = 0; j < g.longitudes.size(); ++j)
      out << ',' << detail::format_number(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

inline void save_grid(const std::string& path, const GridDataset& g) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path, "cannot write grid file");
  save_grid(out, g);
}

}  // namespace sphcov
