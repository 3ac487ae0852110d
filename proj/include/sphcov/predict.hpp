#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "fit.hpp"
#include "geometry.hpp"
#include "kernels.hpp"

namespace sphcov {

struct Prediction {
  Location location;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> observed;
  double nearest_distance = 0.0;  // great-circle distance to the closest observation
  double raw_variance = 0.0;      // before clamping at zero
};

/// Simple kriging on residuals from a fixed mean. Factorizes the observation
/// covariance once; `predict` is const and may run concurrently.
class Kriger {
 public:
  Kriger(Model model, MeanModel mean, std::span<const Observation> obs, double nugget = 0.0)
      : model_(std::move(model)), mean_(mean), obs_(detail::locations_of(obs)) {
    if (obs.empty()) throw InvalidArgument("krige: no observations");
    const Eigen::MatrixXd dist = distance_matrix(obs_, model_.sphere(), model_.metric());
    detail::require_distinct(dist);
    Eigen::MatrixXd cov = covariance_from_distances(model_, dist);
    if (nugget > 0.0) cov.diagonal().array() += nugget;
    factor_ = cholesky_with_jitter(cov, model_.variance());
    Eigen::VectorXd z(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) z(static_cast<Eigen::Index>(i)) = obs[i].value - mean_(obs[i].location);
    weights_ = factor_.llt.solve(z);
  }

  double jitter() const noexcept { return factor_.jitter; }

  /// Number of predictive variances that came out negative and were set to 0.
  std::size_t clamped_variances() const noexcept { return clamped_.load(); }

  std::vector<Prediction> predict(std::span<const Location> targets) const {
    std::vector<Prediction> out;
    out.reserve(targets.size());
    const double c0 = model_.variance();
    const Eigen::Index n = static_cast<Eigen::Index>(obs_.size());
    Eigen::VectorXd k(n);
    for (const auto& t : targets) {
      double nearest = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = distance(t, obs_[static_cast<std::size_t>(i)], model_.sphere(), model_.metric());
        k(i) = model_.evaluate(d);
        const double gc = model_.metric() == Metric::GreatCircle ? d : great_circle_from_chordal(d, model_.sphere());
        nearest = std::min(nearest, gc);
      }
      Prediction p;
      p.location = t;
      p.mean = mean_(t) + k.dot(weights_);
      const Eigen::VectorXd w = factor_.llt.matrixL().solve(k);
      double var = c0 - w.squaredNorm();
      p.raw_variance = var;
      if (var < 0.0) {
        ++clamped_;
        var = 0.0;
      }
      p.sd = std::sqrt(var);
      p.nearest_distance = nearest;
      out.push_back(p);
    }
    return out;
  }

 private:
  Model model_;
  MeanModel mean_;
  std::vector<Location> obs_;
  CholeskyFactor factor_;
  Eigen::VectorXd weights_;
  mutable std::atomic<std::size_t> clamped_{0};
};

inline std::vector<Prediction> krige(const Model& model, const MeanModel& mean, std::span<const Observation> obs,
                                     std::span<const Location> targets, double nugget = 0.0) {
  Kriger k(model, mean, obs, nugget);
  return k.predict(targets);
}

inline std::vector<Prediction> krige(const FittedModel& fitted, const MeanModel& mean, std::span<const Observation> obs,
                                     std::span<const Location> targets) {
  return krige(fitted.model, mean, obs, targets, fitted.nugget);
}

namespace detail {

inline void require_scored(std::span<const Prediction> preds) {
  if (preds.empty()) throw InvalidArgument("scores need at least one prediction");
  for (const auto& p : preds)
    if (!p.observed) throw InvalidArgument("scores need observed values on every prediction");
}

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

inline double rmse(std::span<const Prediction> preds) {
  detail::require_scored(preds);
  double s = 0.0;
  for (const auto& p : preds) s += (*p.observed - p.mean) * (*p.observed - p.mean);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

inline double mae(std::span<const Prediction> preds) {
  detail::require_scored(preds);
  double s = 0.0;
  for (const auto& p : preds) s += std::abs(*p.observed - p.mean);
  return s / static_cast<double>(preds.size());
}

/// CRPS of N(mean, sd^2) at `observed`: sd [z(2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)].
/// sd = 0 gives |observed - mean|.
inline double crps_gaussian(double mean, double sd, double observed) {
  if (!(sd >= 0.0)) throw InvalidArgument("crps_gaussian: sd must be nonnegative");
  if (sd == 0.0) return std::abs(observed - mean);
  const double z = (observed - mean) / sd;
  const double v =
      sd * (z * (2.0 * detail::std_normal_cdf(z) - 1.0) + 2.0 * detail::std_normal_pdf(z) - 1.0 / std::sqrt(std::numbers::pi));
  return std::max(v, 0.0);
}

inline double crps_mean(std::span<const Prediction> preds) {
  detail::require_scored(preds);
  double s = 0.0;
  for (const auto& p : preds) s += crps_gaussian(p.mean, p.sd, *p.observed);
  return s / static_cast<double>(preds.size());
}

struct VariogramEstimate {
  std::vector<double> bin_centers;
  std::vector<double> semivariance;
  std::vector<std::size_t> counts;
  double sample_variance = 0.0;
};

/// Binned half mean squared differences against great-circle distance.
/// Equal-width bins on [0, max_distance]; empty bins are omitted and pairs
/// beyond max_distance ignored.
inline VariogramEstimate empirical_semivariogram(std::span<const Observation> data, const Sphere& sphere, int n_bins,
                                                 double max_distance) {
  if (data.size() < 2) throw InvalidArgument("variogram needs at least two points");
  if (n_bins < 1) throw InvalidArgument("variogram needs at least one bin");
  if (!(max_distance > 0.0)) throw InvalidArgument("variogram max_distance must be positive");
  const auto nb = static_cast<std::size_t>(n_bins);
  const double width = max_distance / static_cast<double>(n_bins);
  std::vector<double> sum(nb, 0.0);
  std::vector<std::size_t> cnt(nb, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      const double d = great_circle_distance(data[i].location, data[j].location, sphere);
      if (d > max_distance) continue;
      const auto b = std::min(nb - 1, static_cast<std::size_t>(d / width));
      const double diff = data[i].value - data[j].value;
      sum[b] += diff * diff;
      ++cnt[b];
    }
  }
  VariogramEstimate v;
  for (std::size_t b = 0; b < nb; ++b) {
    if (cnt[b] == 0) continue;
    v.bin_centers.push_back((static_cast<double>(b) + 0.5) * width);
    v.semivariance.push_back(0.5 * sum[b] / static_cast<double>(cnt[b]));
    v.counts.push_back(cnt[b]);
  }
  double mean = 0.0;
  for (const auto& o : data) mean += o.value;
  mean /= static_cast<double>(data.size());
  double ss = 0.0;
  for (const auto& o : data) ss += (o.value - mean) * (o.value - mean);
  v.sample_variance = ss / static_cast<double>(data.size() - 1);
  return v;
}

/// Default: 25 bins out to half the largest great-circle distance.
inline VariogramEstimate empirical_semivariogram(std::span<const Observation> data, const Sphere& sphere) {
  return empirical_semivariogram(data, sphere, 25, 0.5 * sphere.max_distance(Metric::GreatCircle));
}

}  // namespace sphcov
