#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "fit.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "predict.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace sphcov {

// ---------------------------------------------------------------------------
// Designs

enum class DesignKind { S1Arc, S2Threshold, GeoRegion, GeoHemisphere };

inline std::string_view to_string(DesignKind k) {
  switch (k) {
    case DesignKind::S1Arc: return "s1_arc";
    case DesignKind::S2Threshold: return "s2_threshold";
    case DesignKind::GeoRegion: return "geo_region";
    case DesignKind::GeoHemisphere: return "geo_hemisphere";
  }
  return "";
}

inline DesignKind design_kind_from_string(std::string_view s) {
  for (auto k : {DesignKind::S1Arc, DesignKind::S2Threshold, DesignKind::GeoRegion, DesignKind::GeoHemisphere})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown design kind '" + std::string(s) + "'");
}

/// Closed lat/lon rectangle in degrees. lon_min > lon_max wraps through 180.
struct LatLonBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;

  bool contains(const Location& l) const {
    const double lat = l.lat_deg();
    const double lon = l.lon_deg();
    if (lat < lat_min || lat > lat_max) return false;
    if (lon_min <= lon_max) return lon >= lon_min && lon <= lon_max;
    return lon >= lon_min || lon <= lon_max;
  }

  friend bool operator==(const LatLonBox&, const LatLonBox&) = default;
};

/// Sampling design for one experiment. Angles are stored in degrees, as in
/// configuration files.
struct Design {
  DesignKind kind = DesignKind::S1Arc;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  std::size_t n_estimation = 100;
  std::size_t n_prediction = 10;
  // S1Arc: estimation angles uniform on the open arc, predictions equally
  // spaced on [prediction_arc_min, prediction_arc_max).
  double arc_min_deg = 90.0;
  double arc_max_deg = 270.0;
  double prediction_arc_min_deg = 0.0;
  double prediction_arc_max_deg = 90.0;
  // S2Threshold: estimation where value < below, prediction where value > above.
  double estimation_below = 0.0;
  double prediction_above = 1.0;
  // GeoRegion
  LatLonBox estimation_region{10.0, 40.0, -180.0, 180.0};
  LatLonBox prediction_region{50.0, 80.0, -180.0, 180.0};

  static Design s1() { return {}; }

  static Design s2() {
    Design d;
    d.kind = DesignKind::S2Threshold;
    d.n_estimation = 300;
    d.n_prediction = 100;
    return d;
  }

  static Design geo_region() {
    Design d;
    d.kind = DesignKind::GeoRegion;
    d.n_estimation = 600;
    d.n_prediction = 200;
    return d;
  }

  static Design geo_hemisphere() {
    Design d = geo_region();
    d.kind = DesignKind::GeoHemisphere;
    return d;
  }

  void validate() const {
    if (replicates == 0) throw DesignError("design: replicates must be positive");
    if (n_estimation == 0 || n_prediction == 0) throw DesignError("design: counts must be positive");
    if (kind == DesignKind::S1Arc) {
      const bool ok = 0.0 <= prediction_arc_min_deg && prediction_arc_min_deg < prediction_arc_max_deg &&
                      prediction_arc_max_deg <= arc_min_deg && arc_min_deg < arc_max_deg && arc_max_deg <= 360.0;
      if (!ok) throw DesignError("design: need 0 <= prediction arc <= estimation arc <= 360 degrees, in order");
    }
    if (kind == DesignKind::S2Threshold && !(estimation_below <= prediction_above))
      throw DesignError("design: estimation threshold must not exceed prediction threshold");
  }

  friend bool operator==(const Design&, const Design&) = default;
};

struct SampledSets {
  std::vector<std::size_t> estimation;  // indices into the candidates (grid designs)
  std::vector<std::size_t> prediction;
  std::vector<Location> estimation_locations;
  std::vector<Location> prediction_locations;
};

/// Stream purposes within one replicate.
enum class StreamPurpose : std::uint64_t { Sampling = 0, Field = 1 };

inline RandomStream replicate_stream(std::uint64_t seed, std::size_t replicate, StreamPurpose purpose) {
  return RandomStream(seed, static_cast<std::uint64_t>(replicate) * 4 + static_cast<std::uint64_t>(purpose));
}

/// S1Arc prediction angles (radians): min + k (max - min) / n.
inline std::vector<double> s1_prediction_angles(const Design& d) {
  std::vector<double> out;
  const double lo = deg2rad(d.prediction_arc_min_deg);
  const double hi = deg2rad(d.prediction_arc_max_deg);
  for (std::size_t k = 0; k < d.n_prediction; ++k)
    out.push_back(lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(d.n_prediction));
  return out;
}

namespace detail {

inline std::vector<std::size_t> draw_from(RandomStream& rng, const std::vector<std::size_t>& eligible, std::size_t k,
                                          const char* what) {
  if (eligible.size() < k)
    throw DesignError(std::string(what) + ": " + std::to_string(eligible.size()) + " eligible points, " +
                      std::to_string(k) + " requested");
  auto pick = rng.sample_without_replacement(eligible.size(), k);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (auto p : pick) out.push_back(eligible[p]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Estimation and prediction sets for one replicate. Grid designs choose
/// uniformly without replacement among eligible `candidates`; S2Threshold
/// needs the replicate's field `values`.
inline SampledSets sample_design(const Design& d, std::size_t replicate, std::span<const Location> candidates = {},
                                 std::span<const double> values = {}) {
  d.validate();
  RandomStream rng = replicate_stream(d.seed, replicate, StreamPurpose::Sampling);
  SampledSets out;
  if (d.kind == DesignKind::S1Arc) {
    const double lo = deg2rad(d.arc_min_deg);
    const double hi = deg2rad(d.arc_max_deg);
    while (out.estimation_locations.size() < d.n_estimation) {
      const double a = rng.uniform(lo, hi);
      if (a <= lo || a >= hi || a >= 2.0 * std::numbers::pi) continue;
      out.estimation_locations.push_back(Location::angle(a));
    }
    for (double a : s1_prediction_angles(d)) out.prediction_locations.push_back(Location::angle(a));
    return out;
  }

  if (candidates.empty()) throw DesignError("design: no candidate locations");
  if (d.kind == DesignKind::S2Threshold && values.size() != candidates.size())
    throw DesignError("design: threshold sampling needs one value per candidate");
  std::vector<std::size_t> est_ok, pred_ok;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    bool e = false, p = false;
    switch (d.kind) {
      case DesignKind::S2Threshold:
        e = values[i] < d.estimation_below;
        p = values[i] > d.prediction_above;
        break;
      case DesignKind::GeoRegion:
        e = d.estimation_region.contains(c);
        p = !e && d.prediction_region.contains(c);
        break;
      case DesignKind::GeoHemisphere:
        e = c.lon_deg() < 0.0;
        p = c.lon_deg() > 0.0;
        break;
      case DesignKind::S1Arc: break;
    }
    if (e) est_ok.push_back(i);
    if (p) pred_ok.push_back(i);
  }
  out.estimation = detail::draw_from(rng, est_ok, d.n_estimation, "estimation set");
  out.prediction = detail::draw_from(rng, pred_ok, d.n_prediction, "prediction set");
  for (auto i : out.estimation) out.estimation_locations.push_back(candidates[i]);
  for (auto i : out.prediction) out.prediction_locations.push_back(candidates[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Score aggregation

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

/// Mean and sample standard deviation (n - 1 denominator; 0 for n = 1).
inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  s.mean = m;
  s.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::string model;
  bool ok = false;
  std::string error;
  std::vector<std::pair<std::string, double>> parameters;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double mae = std::numeric_limits<double>::quiet_NaN();
  double crps = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int evaluations = 0;
  double jitter = 0.0;
  std::vector<std::string> at_boundary;
};

struct ModelSummary {
  std::string model;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::pair<std::string, Summary>> parameters;
  Summary loglik, rmse, mae, crps;
};

/// Per-model aggregates plus the replicate records they came from.
struct ScoreTable {
  std::string title;
  std::size_t replicates = 0;
  std::vector<ModelSummary> models;
  std::vector<ReplicateRecord> records;

  const ModelSummary& model(std::string_view name) const {
    for (const auto& m : models)
      if (m.model == name) return m;
    throw InvalidArgument("score table has no model '" + std::string(name) + "'");
  }
};

/// Builds the table from records; failed records count toward `failed` and
/// are excluded from every summary.
inline ScoreTable aggregate(std::string title, const std::vector<std::string>& model_names, std::size_t replicates,
                            std::vector<ReplicateRecord> records) {
  ScoreTable t;
  t.title = std::move(title);
  t.replicates = replicates;
  for (const auto& name : model_names) {
    ModelSummary ms;
    ms.model = name;
    std::vector<double> ll, rm, ma, cr;
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> params;
    for (const auto& r : records) {
      if (r.model != name) continue;
      if (!r.ok) {
        ++ms.failed;
        continue;
      }
      ++ms.succeeded;
      ll.push_back(r.loglik);
      rm.push_back(r.rmse);
      ma.push_back(r.mae);
      cr.push_back(r.crps);
      for (const auto& [p, v] : r.parameters) {
        if (!params.count(p)) order.push_back(p);
        params[p].push_back(v);
      }
    }
    for (const auto& p : order) ms.parameters.emplace_back(p, summarize(params[p]));
    ms.loglik = summarize(ll);
    ms.rmse = summarize(rm);
    ms.mae = summarize(ma);
    ms.crps = summarize(cr);
    t.models.push_back(std::move(ms));
  }
  t.records = std::move(records);
  return t;
}

/// One prediction of one model in one replicate.
struct PointRecord {
  std::size_t replicate = 0;
  std::string model;
  std::size_t index = 0;  // prediction slot (S1) or candidate index (grid designs)
  Location location;
  double nearest_distance = 0.0;  // great circle, to the closest estimation point
  double observed = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double abs_error = 0.0;
  double crps = 0.0;
};

struct CurvePoint {
  std::string model;
  std::size_t index = 0;
  Location location;
  Summary abs_error;
  Summary crps;
};

/// Per-model, per-index summaries of absolute error and CRPS.
inline std::vector<CurvePoint> error_curves(std::span<const PointRecord> points, const std::vector<std::string>& models) {
  std::vector<CurvePoint> out;
  for (const auto& m : models) {
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_index;
    std::map<std::size_t, Location> where;
    for (const auto& p : points) {
      if (p.model != m) continue;
      by_index[p.index].first.push_back(p.abs_error);
      by_index[p.index].second.push_back(p.crps);
      where[p.index] = p.location;
    }
    for (const auto& [idx, v] : by_index) out.push_back({m, idx, where[idx], summarize(v.first), summarize(v.second)});
  }
  return out;
}

struct PairedDifference {
  Summary abs_error;  // of a - b
  Summary crps;
};

/// Replicate-paired differences a - b at one prediction index.
inline PairedDifference paired_difference(std::span<const PointRecord> points, const std::string& a,
                                          const std::string& b, std::size_t index) {
  std::map<std::size_t, const PointRecord*> rb;
  for (const auto& p : points)
    if (p.model == b && p.index == index) rb[p.replicate] = &p;
  std::vector<double> dae, dcr;
  for (const auto& p : points) {
    if (p.model != a || p.index != index) continue;
    auto it = rb.find(p.replicate);
    if (it == rb.end()) continue;
    dae.push_back(p.abs_error - it->second->abs_error);
    dcr.push_back(p.crps - it->second->crps);
  }
  return {summarize(dae), summarize(dcr)};
}

struct PairedPoint {
  std::size_t replicate;
  std::size_t index;
  double nearest_distance;
  std::size_t bin;
  double abs_error_diff;  // a - b
  double crps_diff;
};

struct DistanceBin {
  std::size_t bin;
  double lower;
  double upper;
  Summary abs_error_diff;
  Summary crps_diff;
};

struct BinnedDifferences {
  std::string model_a;
  std::string model_b;
  std::vector<PairedPoint> points;
  std::vector<DistanceBin> bins;
};

/// Differences a - b of absolute error and CRPS, paired by (replicate,
/// index), binned into `n_bins` equal-width bins of nearest-sample distance on
/// [0, largest observed distance].
inline BinnedDifferences binned_differences(std::span<const PointRecord> points, const std::string& a,
                                            const std::string& b, std::size_t n_bins = 10) {
  if (n_bins == 0) throw InvalidArgument("binned_differences: need at least one bin");
  std::map<std::pair<std::size_t, std::size_t>, const PointRecord*> rb;
  for (const auto& p : points)
    if (p.model == b) rb[{p.replicate, p.index}] = &p;
  BinnedDifferences out{a, b, {}, {}};
  double dmax = 0.0;
  for (const auto& p : points) {
    if (p.model != a) continue;
    auto it = rb.find({p.replicate, p.index});
    if (it == rb.end()) continue;
    out.points.push_back({p.replicate, p.index, p.nearest_distance, 0, p.abs_error - it->second->abs_error,
                          p.crps - it->second->crps});
    dmax = std::max(dmax, p.nearest_distance);
  }
  const double width = dmax > 0.0 ? dmax / static_cast<double>(n_bins) : 1.0;
  std::vector<std::vector<double>> ae(n_bins), cr(n_bins);
  for (auto& q : out.points) {
    q.bin = std::min(n_bins - 1, static_cast<std::size_t>(q.nearest_distance / width));
    ae[q.bin].push_back(q.abs_error_diff);
    cr[q.bin].push_back(q.crps_diff);
  }
  for (std::size_t k = 0; k < n_bins; ++k)
    out.bins.push_back({k, width * static_cast<double>(k), width * static_cast<double>(k + 1), summarize(ae[k]),
                        summarize(cr[k])});
  return out;
}

// ---------------------------------------------------------------------------
// Candidate models

enum class ExperimentKind { S1, S2, Geo };

inline const Sphere& experiment_sphere(ExperimentKind k) {
  static const Sphere circle = Sphere::unit_circle();
  static const Sphere earth = Sphere::earth();
  return k == ExperimentKind::S1 ? circle : earth;
}

/// Fit setup for a named model:
///   GC, CH  exponential, great circle / chordal
///   MG, MC  Matern, great circle / chordal
///   H       wave, chordal
///   WG, WC  C4-Wendland, great circle / chordal
///   C       convex sum with a cosine term (n = 1) sharing sigma2: sine-power
///           in S2 experiments, C4-Wendland in data experiments
inline FitSpec named_fit_spec(std::string_view name, ExperimentKind kind) {
  const Sphere& s = experiment_sphere(kind);
  const double r = s.radius();
  auto initial = [](FitSpec& spec, const std::string& path, double v) {
    for (auto& p : spec.free)
      if (p.path == path) p.initial = std::clamp(v, p.lower, p.upper);
  };
  if (name == "GC" || name == "CH") {
    const Metric m = name == "GC" ? Metric::GreatCircle : Metric::Chordal;
    CovarianceModel base(Family::Exponential, m, s, {{"sigma2", 1.0}, {"alpha", r}});
    auto spec = default_fit_spec(base, {"sigma2", "alpha"});
    initial(spec, "alpha", 0.1 * s.max_distance(m));
    return spec;
  }
  if (name == "MG" || name == "MC") {
    const Metric m = name == "MG" ? Metric::GreatCircle : Metric::Chordal;
    CovarianceModel base(Family::Matern, m, s, {{"sigma2", 1.0}, {"alpha", r}, {"nu", 0.5}});
    auto spec = default_fit_spec(base, {"sigma2", "alpha", "nu"});
    initial(spec, "alpha", 0.1 * s.max_distance(m));
    initial(spec, "nu", m == Metric::GreatCircle ? 0.25 : 1.0);
    return spec;
  }
  if (name == "H") {
    CovarianceModel base(Family::Wave, Metric::Chordal, s, {{"sigma2", 1.0}, {"alpha", r}});
    auto spec = default_fit_spec(base, {"sigma2", "alpha"});
    initial(spec, "alpha", 0.1 * r);
    return spec;
  }
  if (name == "WG" || name == "WC") {
    const Metric m = name == "WG" ? Metric::GreatCircle : Metric::Chordal;
    CovarianceModel base(Family::WendlandC4, m, s, {{"sigma2", 1.0}, {"c", 2.0}, {"tau", 8.0}});
    auto spec = default_fit_spec(base, {"sigma2", "c", "tau"});
    initial(spec, "c", 2.0);
    initial(spec, "tau", 8.0);
    return spec;
  }
  if (name == "C") {
    if (kind == ExperimentKind::S1) throw InvalidArgument("model 'C' is defined for S2 and data experiments only");
    CovarianceModel cosine(Family::Cosine, Metric::GreatCircle, s, {{"sigma2", 1.0}, {"n", 1.0}});
    std::vector<std::string> free;
    Model first = kind == ExperimentKind::S2
                      ? Model(CovarianceModel(Family::SinePower, Metric::GreatCircle, s, {{"sigma2", 1.0}, {"beta", 1.0}}))
                      : Model(CovarianceModel(Family::WendlandC4, Metric::GreatCircle, s,
                                              {{"sigma2", 1.0}, {"c", 2.0}, {"tau", 8.0}}));
    if (kind == ExperimentKind::S2)
      free = {"c0.sigma2", "lambda", "c0.beta"};
    else
      free = {"c0.sigma2", "lambda", "c0.c", "c0.tau"};
    auto spec = default_fit_spec(Model::convex_sum({first, Model(cosine)}, {0.9, 0.1}), free, {{"c1.sigma2", "c0.sigma2"}});
    initial(spec, "lambda", 0.9);
    initial(spec, "c0.beta", 1.0);
    initial(spec, "c0.c", 2.0);
    initial(spec, "c0.tau", 8.0);
    return spec;
  }
  throw InvalidArgument("unknown model name '" + std::string(name) + "'");
}

/// A candidate model in an experiment: a name and how to fit it.
struct CandidateModel {
  std::string name;
  FitSpec spec;
};

inline std::vector<CandidateModel> named_candidates(const std::vector<std::string>& names, ExperimentKind kind,
                                                    const FitOptions& options) {
  if (names.empty()) throw InvalidArgument("experiment: empty model list");
  std::vector<CandidateModel> out;
  for (const auto& n : names) {
    auto spec = named_fit_spec(n, kind);
    spec.options = options;
    out.push_back({n, std::move(spec)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replicate machinery

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// (by index) is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ReplicateOutput {
  std::vector<ReplicateRecord> records;
  std::vector<PointRecord> points;
};

namespace detail {

inline std::vector<double> nearest_distances(std::span<const Location> targets, std::span<const Location> from,
                                             const Sphere& s) {
  std::vector<double> out;
  for (const auto& t : targets) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : from) best = std::min(best, great_circle_distance(t, f, s));
    out.push_back(best);
  }
  return out;
}

/// Fits every candidate to `est`, predicts `targets`, and scores against
/// `observed`. Failures are recorded, not thrown.
inline ReplicateOutput fit_and_score(std::size_t replicate, const std::vector<CandidateModel>& candidates,
                                     const MeanModel& mean, std::span<const Observation> est,
                                     std::span<const Location> targets, std::span<const double> observed,
                                     std::span<const std::size_t> indices, const Sphere& sphere) {
  ReplicateOutput out;
  std::vector<Location> est_locs;
  for (const auto& o : est) est_locs.push_back(o.location);
  const auto nearest = nearest_distances(targets, est_locs, sphere);
  for (const auto& c : candidates) {
    ReplicateRecord rec;
    rec.replicate = replicate;
    rec.model = c.name;
    try {
      const FittedModel fitted = mle_fit(c.spec, mean, est);
      Kriger kriger(fitted.model, mean, est, fitted.nugget);
      auto preds = kriger.predict(targets);
      for (std::size_t i = 0; i < preds.size(); ++i) preds[i].observed = observed[i];
      rec.parameters = fitted.model.parameters();
      if (c.spec.options.nugget) rec.parameters.emplace_back("nugget", fitted.nugget);
      rec.loglik = fitted.loglik;
      rec.rmse = rmse(preds);
      rec.mae = mae(preds);
      rec.crps = crps_mean(preds);
      rec.converged = fitted.converged;
      rec.evaluations = fitted.evaluations;
      rec.jitter = std::max(fitted.jitter, kriger.jitter());
      rec.at_boundary = fitted.at_boundary;
      rec.ok = std::isfinite(rec.loglik) && std::isfinite(rec.crps);
      if (!rec.ok) rec.error = "non-finite score";
      if (rec.ok) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
          const auto& p = preds[i];
          out.points.push_back({replicate, c.name, indices[i], p.location, nearest[i], observed[i], p.mean, p.sd,
                                std::abs(observed[i] - p.mean), crps_gaussian(p.mean, p.sd, observed[i])});
        }
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline ReplicateOutput merge(std::vector<ReplicateOutput>& parts) {
  ReplicateOutput all;
  for (auto& p : parts) {
    std::move(p.records.begin(), p.records.end(), std::back_inserter(all.records));
    std::move(p.points.begin(), p.points.end(), std::back_inserter(all.points));
  }
  return all;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// S1: exponential truth on the unit circle

struct S1Options {
  std::vector<double> ranges{2.0 * std::numbers::pi, 1.5 * std::numbers::pi, std::numbers::pi,
                             std::numbers::pi / 1.5,  std::numbers::pi / 2.0, std::numbers::pi / 4.0};
  double sigma2 = 1.0;
  bool fix_truth = false;  // both models use the true sigma2 and alpha; nothing is fitted
  std::vector<std::string> models{"GC", "CH"};
  FitOptions fit;
  unsigned jobs = 1;
};

struct S1RangeResult {
  double alpha = 0.0;
  ScoreTable table;
  std::vector<PointRecord> points;
  std::vector<CurvePoint> curves;
};

struct S1Result {
  std::vector<S1RangeResult> ranges;
};

/// Truth: zero-mean exponential great-circle field with variance sigma2 and
/// range alpha. For each range and replicate, the field is drawn jointly at the
/// sampled and prediction angles, each model is fitted to the sampled values,
/// and the prediction angles are kriged and scored.
inline S1Result run_s1(const Design& design, const S1Options& opt) {
  if (design.kind != DesignKind::S1Arc) throw DesignError("run_s1 needs an s1_arc design");
  design.validate();
  if (opt.ranges.empty()) throw InvalidArgument("run_s1: no ranges");
  const Sphere s = Sphere::unit_circle();
  S1Result result;
  for (std::size_t ri = 0; ri < opt.ranges.size(); ++ri) {
    const double alpha = opt.ranges[ri];
    const CovarianceModel truth(Family::Exponential, Metric::GreatCircle, s, {{"sigma2", opt.sigma2}, {"alpha", alpha}});
    auto candidates = named_candidates(opt.models, ExperimentKind::S1, opt.fit);
    if (opt.fix_truth)
      for (auto& c : candidates) {
        for (const auto& p : c.spec.free) {
          const std::string leaf = p.path.substr(p.path.rfind('.') == std::string::npos ? 0 : p.path.rfind('.') + 1);
          if (leaf == "sigma2") c.spec.model = c.spec.model.with_parameter(p.path, opt.sigma2);
          if (leaf == "alpha") c.spec.model = c.spec.model.with_parameter(p.path, alpha);
        }
        c.spec.free.clear();
      }
    std::vector<ReplicateOutput> parts(design.replicates);
    // Streams are keyed by (range index, replicate) so ranges are independent.
    Design d = design;
    d.seed = design.seed + static_cast<std::uint64_t>(ri) * 0x9E3779B97F4A7C15ull;
    parallel_for(design.replicates, opt.jobs, [&](std::size_t rep) {
      const auto sets = sample_design(d, rep);
      std::vector<Location> all = sets.estimation_locations;
      all.insert(all.end(), sets.prediction_locations.begin(), sets.prediction_locations.end());
      FieldSampler sampler(Model(truth), all);
      RandomStream rng = replicate_stream(d.seed, rep, StreamPurpose::Field);
      const Eigen::VectorXd z = sampler.draw(rng);
      std::vector<Observation> est;
      for (std::size_t i = 0; i < sets.estimation_locations.size(); ++i)
        est.push_back({sets.estimation_locations[i], z(static_cast<Eigen::Index>(i))});
      std::vector<double> observed;
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < sets.prediction_locations.size(); ++k) {
        observed.push_back(z(static_cast<Eigen::Index>(est.size() + k)));
        idx.push_back(k);
      }
      parts[rep] = detail::fit_and_score(rep, candidates, MeanModel::zero(), est, sets.prediction_locations, observed,
                                         idx, s);
    });
    auto all = detail::merge(parts);
    S1RangeResult rr;
    rr.alpha = alpha;
    rr.table = aggregate("s1 alpha=" + detail::format_number(alpha), opt.models, design.replicates, std::move(all.records));
    rr.points = std::move(all.points);
    rr.curves = error_curves(rr.points, opt.models);
    result.ranges.push_back(std::move(rr));
  }
  return result;
}

// ---------------------------------------------------------------------------
// S2: negatively correlated fields on a global grid

/// Truth generator for the S2 experiment. The default is the oscillating
/// second-order SPDE spectrum sampled exactly by spherical harmonics; a
/// covariance model can be used instead (sampled by Cholesky on the grid).
struct S2Generator {
  double kappa = 0.5;
  double theta = 0.3;
  double alpha = 2.0;
  double sigma = 1.0;
  int degree = 200;
  std::optional<Model> model;
};

struct S2Options {
  S2Generator generator;
  std::size_t nlat = 64;
  std::size_t nlon = 128;
  std::vector<std::string> models{"MC", "MG", "C", "H"};
  FitOptions fit;
  unsigned jobs = 1;
  /// One field realization shared by all replicates (only the sampled
  /// locations change), or a fresh realization per replicate.
  bool redraw_field = false;
};

struct GridExperimentResult {
  ScoreTable table;
  std::vector<PointRecord> points;
  MeanModel mean;  // the mean used for fitting and kriging
};

namespace detail {

/// Draws grid fields centred by their grid average.
class GridFieldSource {
 public:
  GridFieldSource(const S2Generator& g, const GridDataset& grid, std::span<const Location> cells) {
    if (g.model) {
      if (!(g.model->sphere() == Sphere::earth())) throw InvalidArgument("S2 generator model must live on the Earth sphere");
      cholesky_.emplace(*g.model, std::vector<Location>(cells.begin(), cells.end()));
    } else {
      harmonic_.emplace(oscillating_matern_spectrum(g.kappa, g.theta, g.alpha, g.sigma, g.degree), grid.latitudes,
                        grid.longitudes);
    }
  }

  std::vector<double> draw(RandomStream& rng) const {
    std::vector<double> v;
    if (cholesky_) {
      const Eigen::VectorXd z = cholesky_->draw(rng);
      v.assign(z.data(), z.data() + z.size());
    } else {
      const Eigen::MatrixXd f = harmonic_->draw(rng);
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) v.push_back(f(i, j));
    }
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
    return v;
  }

 private:
  std::optional<FieldSampler> cholesky_;
  std::optional<SphericalHarmonicSampler> harmonic_;
};

}  // namespace detail

/// Cell-centred nlat x nlon grid on the Earth. The field (one shared draw, or
/// one per replicate) is centred by its grid average; each replicate samples
/// by threshold, fits every model with a known zero mean and scores
/// predictions.
inline GridExperimentResult run_s2(const Design& design, const S2Options& opt) {
  if (design.kind != DesignKind::S2Threshold) throw DesignError("run_s2 needs an s2_threshold design");
  design.validate();
  const auto candidates = named_candidates(opt.models, ExperimentKind::S2, opt.fit);
  const GridDataset grid = GridDataset::cell_centred(opt.nlat, opt.nlon);
  std::vector<Location> cells;
  for (const auto& o : grid.observations()) cells.push_back(o.location);
  const detail::GridFieldSource source(opt.generator, grid, cells);
  const Sphere& s = Sphere::earth();

  std::vector<double> shared;
  if (!opt.redraw_field) {
    RandomStream rng = replicate_stream(design.seed, 0, StreamPurpose::Field);
    shared = source.draw(rng);
  }
  std::vector<ReplicateOutput> parts(design.replicates);
  parallel_for(design.replicates, opt.jobs, [&](std::size_t rep) {
    std::vector<double> fresh;
    if (opt.redraw_field) {
      RandomStream rng = replicate_stream(design.seed, rep, StreamPurpose::Field);
      fresh = source.draw(rng);
    }
    const std::vector<double>& values = opt.redraw_field ? fresh : shared;
    const auto sets = sample_design(design, rep, cells, values);
    std::vector<Observation> est;
    for (auto i : sets.estimation) est.push_back({cells[i], values[i]});
    std::vector<double> observed;
    for (auto i : sets.prediction) observed.push_back(values[i]);
    parts[rep] = detail::fit_and_score(rep, candidates, MeanModel::zero(), est, sets.prediction_locations, observed,
                                       sets.prediction, s);
  });
  auto all = detail::merge(parts);
  GridExperimentResult r;
  r.table = aggregate("s2", opt.models, design.replicates, std::move(all.records));
  r.points = std::move(all.points);
  r.mean = MeanModel::zero();
  return r;
}

// ---------------------------------------------------------------------------
// Gridded data

struct GeoOptions {
  MeanKind mean = MeanKind::Constant;
  std::vector<std::string> models{"MC", "MG", "C", "WG", "WC"};
  FitOptions fit;
  unsigned jobs = 1;
};

/// The mean is fitted once by least squares on every grid point; each
/// replicate samples locations per the design, fits the residual covariance
/// of every model and scores predictions of the data values.
inline GridExperimentResult run_geo(const GridDataset& data, const Design& design, const GeoOptions& opt) {
  if (design.kind != DesignKind::GeoRegion && design.kind != DesignKind::GeoHemisphere)
    throw DesignError("run_geo needs a geo_region or geo_hemisphere design");
  design.validate();
  const auto candidates = named_candidates(opt.models, ExperimentKind::Geo, opt.fit);
  const auto obs = data.observations();
  if (obs.empty()) throw InvalidArgument("run_geo: empty dataset");
  const MeanModel mean = fit_mean(opt.mean, obs);
  std::vector<Location> cells;
  std::vector<double> values;
  for (const auto& o : obs) {
    cells.push_back(o.location);
    values.push_back(o.value);
  }
  const Sphere& s = Sphere::earth();

  std::vector<ReplicateOutput> parts(design.replicates);
  parallel_for(design.replicates, opt.jobs, [&](std::size_t rep) {
    const auto sets = sample_design(design, rep, cells);
    std::vector<Observation> est;
    for (auto i : sets.estimation) est.push_back(obs[i]);
    std::vector<double> observed;
    for (auto i : sets.prediction) observed.push_back(values[i]);
    parts[rep] = detail::fit_and_score(rep, candidates, mean, est, sets.prediction_locations, observed, sets.prediction, s);
  });
  auto all = detail::merge(parts);
  GridExperimentResult r;
  r.table = aggregate(std::string("geo ") + std::string(to_string(design.kind)) + " mean=" + std::string(to_string(opt.mean)),
                      opt.models, design.replicates, std::move(all.records));
  r.points = std::move(all.points);
  r.mean = mean;
  return r;
}

/// Draws a synthetic gridded dataset: mean plus a zero-mean field from
/// `model`, sampled by Cholesky on the grid's distinct locations.
inline GridDataset synthetic_grid(const Model& model, const MeanModel& mean, GridDataset grid, std::uint64_t seed) {
  const auto obs = grid.observations();
  std::vector<Location> cells;
  for (const auto& o : obs) cells.push_back(o.location);
  const auto field = simulate(model, cells, mean, seed);
  std::size_t k = 0;
  for (std::size_t i = 0; i < grid.latitudes.size(); ++i) {
    const bool pole = std::abs(grid.latitudes[i]) == 90.0;
    for (std::size_t j = 0; j < grid.longitudes.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      if (pole && j > 0) {
        grid.values(ii, jj) = grid.values(ii, 0);
        continue;
      }
      grid.values(ii, jj) = field.values[k++];
    }
  }
  return grid;
}

}  // namespace sphcov
