#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace sphcov {

inline constexpr double kEarthRadiusKm = 6371.0;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

enum class Metric { GreatCircle, Chordal };

inline std::string_view to_string(Metric m) { return m == Metric::GreatCircle ? "great_circle" : "chordal"; }

inline Metric metric_from_string(std::string_view s) {
  if (s == "great_circle") return Metric::GreatCircle;
  if (s == "chordal") return Metric::Chordal;
  throw InvalidArgument("unknown metric '" + std::string(s) + "'");
}

/// The circle S^1_r (dimension 1) or the sphere S^2_r (dimension 2).
class Sphere {
 public:
  Sphere() = default;
  Sphere(int dimension, double radius) : dimension_(dimension), radius_(radius) {
    if (dimension != 1 && dimension != 2) throw InvalidArgument("sphere dimension must be 1 or 2");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("sphere radius must be positive");
  }

  static Sphere unit_circle() { return {1, 1.0}; }
  static Sphere earth() { return {2, kEarthRadiusKm}; }

  int dimension() const noexcept { return dimension_; }
  double radius() const noexcept { return radius_; }

  /// Largest possible distance under `metric`: pi*r along the surface, 2r through it.
  double max_distance(Metric metric) const noexcept {
    return metric == Metric::GreatCircle ? std::numbers::pi * radius_ : 2.0 * radius_;
  }

  friend bool operator==(const Sphere&, const Sphere&) = default;

 private:
  int dimension_ = 2;
  double radius_ = kEarthRadiusKm;
};

/// A point on S^1 or S^2, stored in radians. The circle is embedded as the
/// equator of the sphere (latitude 0, longitude = angle), which makes both
/// distance formulas below valid in either dimension.
class Location {
 public:
  Location() = default;

  /// Latitude in [-90, 90], longitude in (-180, 180] (degrees). 180 and -180 are
  /// the same meridian; poles get longitude 0.
  static Location latlon(double lat_deg, double lon_deg) {
    if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg))
      throw InvalidArgument("non-finite coordinate");
    if (lat_deg < -90.0 || lat_deg > 90.0) throw InvalidArgument("latitude outside [-90, 90]");
    if (lon_deg <= -180.0 || lon_deg > 180.0) {
      if (lon_deg == -180.0) {
        lon_deg = 180.0;
      } else {
        throw InvalidArgument("longitude outside (-180, 180]");
      }
    }
    if (std::abs(lat_deg) == 90.0) lon_deg = 0.0;
    Location loc;
    loc.lat_ = deg2rad(lat_deg);
    loc.lon_ = deg2rad(lon_deg);
    loc.lat_deg_ = lat_deg;
    loc.lon_deg_ = lon_deg;
    loc.dimension_ = 2;
    return loc;
  }

  /// Angle in [0, 2*pi) radians on the circle.
  static Location angle(double radians) {
    if (!std::isfinite(radians) || radians < 0.0 || radians >= 2.0 * std::numbers::pi)
      throw InvalidArgument("circle angle outside [0, 2*pi)");
    Location loc;
    loc.lat_ = 0.0;
    loc.lon_ = radians;
    loc.lon_deg_ = rad2deg(radians);
    loc.dimension_ = 1;
    return loc;
  }

  int dimension() const noexcept { return dimension_; }
  double lat_rad() const noexcept { return lat_; }
  double lon_rad() const noexcept { return lon_; }
  double lat_deg() const noexcept { return lat_deg_; }
  double lon_deg() const noexcept { return lon_deg_; }
  double angle_rad() const noexcept { return lon_; }

  friend bool operator==(const Location&, const Location&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
  // as given, so output echoes input exactly
  double lat_deg_ = 0.0;
  double lon_deg_ = 0.0;
  int dimension_ = 2;
};

inline void require_on(const Location& loc, const Sphere& s) {
  if (loc.dimension() != s.dimension())
    throw InvalidArgument("location dimension does not match sphere dimension");
}

namespace detail {

// Squared half-chord on the unit sphere: sin^2(dL/2) + cos L1 cos L2 sin^2(dl/2).
inline double haversine(const Location& a, const Location& b) noexcept {
  const double s_lat = std::sin(0.5 * (a.lat_rad() - b.lat_rad()));
  const double s_lon = std::sin(0.5 * (a.lon_rad() - b.lon_rad()));
  const double h = s_lat * s_lat + std::cos(a.lat_rad()) * std::cos(b.lat_rad()) * s_lon * s_lon;
  return std::clamp(h, 0.0, 1.0);
}

}  // namespace detail

inline double chordal_distance(const Location& a, const Location& b, const Sphere& s) {
  require_on(a, s);
  require_on(b, s);
  return 2.0 * s.radius() * std::sqrt(detail::haversine(a, b));
}

inline double great_circle_distance(const Location& a, const Location& b, const Sphere& s) {
  require_on(a, s);
  require_on(b, s);
  return 2.0 * s.radius() * std::asin(std::sqrt(detail::haversine(a, b)));
}

inline double distance(const Location& a, const Location& b, const Sphere& s, Metric metric) {
  return metric == Metric::GreatCircle ? great_circle_distance(a, b, s) : chordal_distance(a, b, s);
}

/// t = 2r sin(theta / 2r)
inline double chordal_from_great_circle(double theta, const Sphere& s) {
  return 2.0 * s.radius() * std::sin(theta / (2.0 * s.radius()));
}

inline double great_circle_from_chordal(double t, const Sphere& s) {
  return 2.0 * s.radius() * std::asin(std::clamp(t / (2.0 * s.radius()), 0.0, 1.0));
}

inline Eigen::MatrixXd distance_matrix(std::span<const Location> locs, const Sphere& s, Metric metric) {
  if (locs.empty()) throw InvalidArgument("distance_matrix: empty location list");
  for (const auto& l : locs) require_on(l, s);
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = std::sqrt(detail::haversine(locs[i], locs[j]));
      const double v = 2.0 * s.radius() * (metric == Metric::GreatCircle ? std::asin(h) : h);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

/// Cross distances, rows = `from`, columns = `to`.
inline Eigen::MatrixXd cross_distance_matrix(std::span<const Location> from, std::span<const Location> to,
                                             const Sphere& s, Metric metric) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(from.size()), static_cast<Eigen::Index>(to.size()));
  for (std::size_t i = 0; i < from.size(); ++i) {
    for (std::size_t j = 0; j < to.size(); ++j) d(i, j) = distance(from[i], to[j], s, metric);
  }
  return d;
}

}  // namespace sphcov
