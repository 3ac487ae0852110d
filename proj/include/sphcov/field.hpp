#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "kernels.hpp"
#include "rng.hpp"

namespace sphcov {

/// An observation: value at a location.
struct Observation {
  Location location;
  double value;
};

enum class MeanKind { Zero, Constant, HarmonicLatitude };

inline std::string_view to_string(MeanKind k) {
  switch (k) {
    case MeanKind::Zero: return "zero";
    case MeanKind::Constant: return "constant";
    case MeanKind::HarmonicLatitude: return "harmonic";
  }
  return "";
}

inline MeanKind mean_kind_from_string(std::string_view s) {
  if (s == "zero") return MeanKind::Zero;
  if (s == "constant") return MeanKind::Constant;
  if (s == "harmonic") return MeanKind::HarmonicLatitude;
  throw InvalidArgument("unknown mean kind '" + std::string(s) + "'");
}

/// m(L) = a0 + a1 cos(L pi / 90) + a2 sin(L pi / 90), latitude L in degrees.
/// Constant uses a0 only; Zero is the known-zero mean.
struct MeanModel {
  MeanKind kind = MeanKind::Zero;
  std::array<double, 3> coefficients{0.0, 0.0, 0.0};

  static MeanModel zero() { return {}; }
  static MeanModel constant(double a0) { return {MeanKind::Constant, {a0, 0.0, 0.0}}; }
  static MeanModel harmonic(double a0, double a1, double a2) { return {MeanKind::HarmonicLatitude, {a0, a1, a2}}; }

  double operator()(const Location& loc) const noexcept {
    switch (kind) {
      case MeanKind::Zero: return 0.0;
      case MeanKind::Constant: return coefficients[0];
      case MeanKind::HarmonicLatitude: {
        // L * pi / 90deg == 2 * latitude in radians
        const double arg = 2.0 * loc.lat_rad();
        return coefficients[0] + coefficients[1] * std::cos(arg) + coefficients[2] * std::sin(arg);
      }
    }
    return 0.0;
  }

  friend bool operator==(const MeanModel&, const MeanModel&) = default;
};

inline double mean_eval(const MeanModel& mm, const Location& loc) { return mm(loc); }

/// Ordinary least squares for the mean structure. Zero returns the zero mean.
inline MeanModel fit_mean(MeanKind kind, std::span<const Observation> data) {
  if (kind == MeanKind::Zero) return MeanModel::zero();
  if (data.empty()) throw InvalidArgument("fit_mean: no data");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = kind == MeanKind::Constant ? 1 : 3;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = data[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    if (p == 3) {
      const double arg = 2.0 * obs.location.lat_rad();
      x(i, 1) = std::cos(arg);
      x(i, 2) = std::sin(arg);
    }
    y(i) = obs.value;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw InvalidArgument("fit_mean: rank-deficient design (too few distinct latitudes)");
  const Eigen::VectorXd beta = qr.solve(y);
  MeanModel mm;
  mm.kind = kind;
  for (Eigen::Index i = 0; i < p; ++i) mm.coefficients[static_cast<std::size_t>(i)] = beta(i);
  return mm;
}

/// Covariance matrix of `model` at `locs`, from a precomputed distance matrix
/// in the model's metric.
inline Eigen::MatrixXd covariance_from_distances(const Model& model, const Eigen::MatrixXd& dist) {
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd c(n, n);
  const double c0 = model.variance();
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = c0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = model.evaluate_unchecked(dist(i, j));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

inline Eigen::MatrixXd covariance_matrix(const Model& model, std::span<const Location> locs) {
  return covariance_from_distances(model, distance_matrix(locs, model.sphere(), model.metric()));
}

/// Jitter schedule, as multiples of the model variance added to the diagonal.
inline constexpr std::array<double, 4> kJitterSchedule{0.0, 1e-12, 1e-10, 1e-8};

/// Lower Cholesky factor of a covariance matrix plus the jitter it needed.
struct CholeskyFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute amount added to the diagonal
};

/// Tries each jitter level in turn. Returns false if none factorizes.
inline bool try_cholesky(const Eigen::MatrixXd& cov, double variance, CholeskyFactor& out) {
  for (double level : kJitterSchedule) {
    const double add = level * variance;
    if (add == 0.0) {
      out.llt.compute(cov);
    } else {
      Eigen::MatrixXd j = cov;
      j.diagonal().array() += add;
      out.llt.compute(j);
    }
    if (out.llt.info() == Eigen::Success) {
      out.jitter = add;
      return true;
    }
  }
  return false;
}

inline CholeskyFactor cholesky_with_jitter(const Eigen::MatrixXd& cov, double variance) {
  CholeskyFactor f;
  if (!try_cholesky(cov, variance, f))
    throw FactorizationError("covariance matrix is not positive definite even with jitter " +
                             std::to_string(kJitterSchedule.back()) + " * sigma2 (is the model valid here?)");
  return f;
}

struct FieldRealization {
  std::vector<Location> locations;
  std::vector<double> values;
  std::uint64_t seed = 0;
  double jitter = 0.0;
};

/// Draws realizations of a zero-mean field at fixed locations from a single
/// factorization. Read-only after construction, so one instance can serve
/// concurrent replicates with their own streams.
class FieldSampler {
 public:
  FieldSampler(const Model& model, std::vector<Location> locations)
      : locations_(std::move(locations)),
        factor_(cholesky_with_jitter(covariance_matrix(model, locations_), model.variance())) {}

  const std::vector<Location>& locations() const noexcept { return locations_; }
  double jitter() const noexcept { return factor_.jitter; }

  Eigen::VectorXd draw(RandomStream& rng) const {
    const auto z = rng.normals(locations_.size());
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    return factor_.llt.matrixL() * zv;
  }

 private:
  std::vector<Location> locations_;
  CholeskyFactor factor_;
};

/// values = mean + L z with z drawn from RandomStream(seed).
inline FieldRealization simulate(const Model& model, std::span<const Location> locations, const MeanModel& mean,
                                 std::uint64_t seed) {
  if (locations.empty()) throw InvalidArgument("simulate: no locations");
  FieldSampler sampler(model, {locations.begin(), locations.end()});
  RandomStream rng(seed);
  const Eigen::VectorXd draw = sampler.draw(rng);
  FieldRealization out;
  out.locations.assign(locations.begin(), locations.end());
  out.values.resize(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) out.values[i] = mean(locations[i]) + draw(static_cast<Eigen::Index>(i));
  out.seed = seed;
  out.jitter = sampler.jitter();
  return out;
}

}  // namespace sphcov
