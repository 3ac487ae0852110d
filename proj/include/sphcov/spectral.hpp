#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace sphcov {

/// Isotropic covariance on a 2-sphere given by its Legendre expansion
/// C(theta) = sum_n b[n] P_n(cos(theta / r)), b[n] >= 0.
struct LegendreSpectrum {
  std::vector<double> b;

  double variance() const {
    double s = 0.0;
    for (double v : b) s += v;
    return s;
  }

  /// C at great-circle distance `gc` on a sphere of radius `radius`.
  double evaluate(double gc, double radius) const {
    const double x = std::cos(gc / radius);
    double p0 = 1.0, p1 = x, s = 0.0;
    for (std::size_t n = 0; n < b.size(); ++n) {
      const double pn = n == 0 ? p0 : p1;
      s += b[n] * pn;
      if (n >= 1) {
        const double k = static_cast<double>(n);
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
    }
    return s;
  }
};

/// Spectrum of the oscillating second-order SPDE field
/// (kappa^4 + 2 cos(pi theta) kappa^2 Delta + Delta^2)^(alpha/2) x = W / tau
/// on the unit sphere, with tau = kappa sigma / sqrt(4 pi):
/// b_n = (2n+1) / (4 pi tau^2) * (kappa^4 + 2 cos(pi theta) kappa^2 l_n + l_n^2)^(-alpha/2), l_n = n(n+1).
inline LegendreSpectrum oscillating_matern_spectrum(double kappa, double theta, double alpha, double sigma, int degree) {
  if (!(kappa > 0.0)) throw InvalidArgument("oscillating spectrum: kappa must be positive");
  if (!(theta >= 0.0 && theta < 1.0)) throw InvalidArgument("oscillating spectrum: theta must lie in [0, 1)");
  if (!(alpha > 1.0)) throw InvalidArgument("oscillating spectrum: alpha must exceed 1 for finite variance");
  if (!(sigma > 0.0)) throw InvalidArgument("oscillating spectrum: sigma must be positive");
  if (degree < 0) throw InvalidArgument("oscillating spectrum: degree must be nonnegative");
  const double tau = kappa * sigma / std::sqrt(4.0 * std::numbers::pi);
  const double k2 = kappa * kappa;
  const double c = 2.0 * std::cos(std::numbers::pi * theta) * k2;
  LegendreSpectrum s;
  s.b.resize(static_cast<std::size_t>(degree) + 1);
  for (int n = 0; n <= degree; ++n) {
    const double l = static_cast<double>(n) * (n + 1.0);
    const double base = k2 * k2 + c * l + l * l;
    s.b[static_cast<std::size_t>(n)] = (2.0 * n + 1.0) / (4.0 * std::numbers::pi * tau * tau) * std::pow(base, -0.5 * alpha);
  }
  return s;
}

/// Exact draws of a zero-mean field with a truncated Legendre spectrum on a
/// lat/lon grid, by random real spherical-harmonic coefficients. Cost per draw
/// is O(nlat * degree^2 + nlat * nlon * degree); no matrix factorization.
class SphericalHarmonicSampler {
 public:
  SphericalHarmonicSampler(const LegendreSpectrum& spectrum, std::vector<double> latitudes_deg,
                           std::vector<double> longitudes_deg)
      : lat_(std::move(latitudes_deg)), lon_(std::move(longitudes_deg)) {
    if (spectrum.b.empty()) throw InvalidArgument("harmonic sampler: empty spectrum");
    if (lat_.empty() || lon_.empty()) throw InvalidArgument("harmonic sampler: empty grid");
    for (double v : spectrum.b)
      if (!(v >= 0.0)) throw InvalidArgument("harmonic sampler: spectrum must be nonnegative");
    degree_ = spectrum.b.size() - 1;
    basis_.resize(static_cast<Eigen::Index>(lat_.size()), static_cast<Eigen::Index>((degree_ + 1) * (degree_ + 2) / 2));
    for (std::size_t i = 0; i < lat_.size(); ++i) {
      const double colat = std::numbers::pi / 2.0 - deg2rad(lat_[i]);
      for (std::size_t n = 0; n <= degree_; ++n) {
        const double w = std::sqrt(4.0 * std::numbers::pi * spectrum.b[n] / (2.0 * static_cast<double>(n) + 1.0));
        for (std::size_t m = 0; m <= n; ++m) {
          const double y = std::sph_legendre(static_cast<unsigned>(n), static_cast<unsigned>(m), colat);
          basis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(tri(n, m))) = w * y * (m > 0 ? std::numbers::sqrt2 : 1.0);
        }
      }
    }
    cos_.resize(static_cast<Eigen::Index>(degree_ + 1), static_cast<Eigen::Index>(lon_.size()));
    sin_.resizeLike(cos_);
    for (std::size_t m = 0; m <= degree_; ++m)
      for (std::size_t j = 0; j < lon_.size(); ++j) {
        const double a = static_cast<double>(m) * deg2rad(lon_[j]);
        cos_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = std::cos(a);
        sin_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = std::sin(a);
      }
  }

  std::size_t degree() const noexcept { return degree_; }

  /// Number of standard normals consumed per draw: (degree + 1)^2.
  std::size_t coefficient_count() const noexcept { return (degree_ + 1) * (degree_ + 1); }

  /// values(i, j) at (latitudes[i], longitudes[j]).
  Eigen::MatrixXd draw(RandomStream& rng) const {
    const auto z = rng.normals(coefficient_count());
    // z layout: for n, for m = 0..n: cosine coefficient, then sine coefficient if m > 0
    Eigen::VectorXd zc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>((degree_ + 1) * (degree_ + 2) / 2));
    Eigen::VectorXd zs = zc;
    std::size_t k = 0;
    for (std::size_t n = 0; n <= degree_; ++n)
      for (std::size_t m = 0; m <= n; ++m) {
        zc(static_cast<Eigen::Index>(tri(n, m))) = z[k++];
        if (m > 0) zs(static_cast<Eigen::Index>(tri(n, m))) = z[k++];
      }
    const Eigen::Index nlat = static_cast<Eigen::Index>(lat_.size());
    const Eigen::Index nm = static_cast<Eigen::Index>(degree_ + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nlat, nm);
    Eigen::MatrixXd bs = Eigen::MatrixXd::Zero(nlat, nm);
    for (Eigen::Index i = 0; i < nlat; ++i)
      for (std::size_t n = 0; n <= degree_; ++n)
        for (std::size_t m = 0; m <= n; ++m) {
          const auto t = static_cast<Eigen::Index>(tri(n, m));
          a(i, static_cast<Eigen::Index>(m)) += basis_(i, t) * zc(t);
          bs(i, static_cast<Eigen::Index>(m)) += basis_(i, t) * zs(t);
        }
    return a * cos_ + bs * sin_;
  }

  /// Covariance between grid cells (i1, j1) and (i2, j2) implied by the basis;
  /// equals the Legendre series by the addition theorem.
  double covariance(std::size_t i1, std::size_t j1, std::size_t i2, std::size_t j2) const {
    double s = 0.0;
    for (std::size_t n = 0; n <= degree_; ++n)
      for (std::size_t m = 0; m <= n; ++m) {
        const auto t = static_cast<Eigen::Index>(tri(n, m));
        const double p = basis_(static_cast<Eigen::Index>(i1), t) * basis_(static_cast<Eigen::Index>(i2), t);
        const double ang = static_cast<double>(m) * (deg2rad(lon_[j1]) - deg2rad(lon_[j2]));
        s += p * std::cos(ang);
      }
    return s;
  }

 private:
  static std::size_t tri(std::size_t n, std::size_t m) { return n * (n + 1) / 2 + m; }

  std::vector<double> lat_;
  std::vector<double> lon_;
  std::size_t degree_ = 0;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd cos_;
  Eigen::MatrixXd sin_;
};

}  // namespace sphcov
