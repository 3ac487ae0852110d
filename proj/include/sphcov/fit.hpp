#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "kernels.hpp"
#include "nelder_mead.hpp"

namespace sphcov {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_distinct(const Eigen::MatrixXd& dist) {
  for (Eigen::Index j = 0; j < dist.cols(); ++j)
    for (Eigen::Index i = j + 1; i < dist.rows(); ++i)
      if (dist(i, j) == 0.0) throw InvalidArgument("duplicate locations in data");
}

inline std::vector<Location> locations_of(std::span<const Observation> data) {
  std::vector<Location> locs;
  locs.reserve(data.size());
  for (const auto& o : data) locs.push_back(o.location);
  return locs;
}

}  // namespace detail

/// Gaussian log-likelihood for fixed data, reusable across parameter values.
/// Distances are computed once per metric.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(std::span<const Observation> data, const MeanModel& mean, const Sphere& sphere)
      : locations_(detail::locations_of(data)), sphere_(sphere) {
    if (data.empty()) throw InvalidArgument("log_likelihood: no data");
    residual_.resize(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i)
      residual_(static_cast<Eigen::Index>(i)) = data[i].value - mean(data[i].location);
    detail::require_distinct(distances(Metric::Chordal));
  }

  const Eigen::MatrixXd& distances(Metric metric) {
    auto& slot = metric == Metric::GreatCircle ? gc_ : ch_;
    if (!slot) slot = distance_matrix(locations_, sphere_, metric);
    return *slot;
  }

  const Eigen::VectorXd& residuals() const noexcept { return residual_; }

  /// -inf when the covariance cannot be factorized. `jitter_out` receives the
  /// diagonal jitter used.
  double operator()(const Model& model, double nugget = 0.0, double* jitter_out = nullptr) {
    Eigen::MatrixXd cov = covariance_from_distances(model, distances(model.metric()));
    if (nugget > 0.0) cov.diagonal().array() += nugget;
    CholeskyFactor f;
    if (!try_cholesky(cov, model.variance(), f)) return -std::numeric_limits<double>::infinity();
    if (jitter_out) *jitter_out = f.jitter;
    const Eigen::VectorXd w = f.llt.matrixL().solve(residual_);
    const double n = static_cast<double>(residual_.size());
    const double log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
    const double ll = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * w.squaredNorm();
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  }

 private:
  std::vector<Location> locations_;
  Sphere sphere_;
  Eigen::VectorXd residual_;
  std::optional<Eigen::MatrixXd> gc_;
  std::optional<Eigen::MatrixXd> ch_;
};

/// l = -(n/2) log 2pi - (1/2) log|Sigma| - (1/2) z' Sigma^{-1} z, z = data - mean.
inline double log_likelihood(const Model& model, const MeanModel& mean, std::span<const Observation> data,
                             double nugget = 0.0) {
  LikelihoodEvaluator eval(data, mean, model.sphere());
  return eval(model, nugget);
}

enum class ParamScale { Log, Logit };

/// A parameter optimized within [lower, upper]. Log scale optimizes log(x)
/// clamped to the box; logit scale maps the box through a logistic function.
struct FreeParameter {
  std::string path;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> initial;
  ParamScale scale = ParamScale::Log;
};

/// After each parameter update, `target` is set equal to `source`.
struct Tie {
  std::string target;
  std::string source;
};

struct FitOptions {
  int starts = 5;
  int max_evaluations = 2000;
  double tolerance = 1e-8;
  double tie_loglik = 1e-6;
  bool nugget = false;  // adds a free "nugget" variance on the diagonal
  double nugget_lower = 1e-8;
  double nugget_upper = 1e3;
};

struct FitSpec {
  Model model;  // template; non-free parameters stay at their values here
  std::vector<FreeParameter> free;
  std::vector<Tie> ties;
  FitOptions options;
};

struct StartRecord {
  double initial_loglik;
  double final_loglik;
  int evaluations;
  bool converged;
};

struct FittedModel {
  Model model;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
  double jitter = 0.0;
  double nugget = 0.0;
  std::vector<std::string> at_boundary;
  std::vector<StartRecord> starts;
};

namespace detail {

inline double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

constexpr double kLogitClamp = 25.0;

struct BoxTransform {
  ParamScale scale;
  double lower;
  double upper;

  double lo_u() const { return scale == ParamScale::Log ? std::log(lower) : -kLogitClamp; }
  double hi_u() const { return scale == ParamScale::Log ? std::log(upper) : kLogitClamp; }

  double to_value(double u) const {
    u = std::clamp(u, lo_u(), hi_u());
    if (scale == ParamScale::Log) return std::clamp(std::exp(u), lower, upper);
    return lower + (upper - lower) * logistic(u);
  }

  double to_internal(double x) const {
    x = std::clamp(x, lower, upper);
    if (scale == ParamScale::Log) return std::log(x);
    const double p = std::clamp((x - lower) / (upper - lower), 1e-11, 1.0 - 1e-11);
    return std::clamp(std::log(p / (1.0 - p)), -kLogitClamp, kLogitClamp);
  }

  // Position in [0, 1] of the internal coordinate along its usable range.
  double from_fraction(double frac) const {
    if (scale == ParamScale::Log) return lo_u() + frac * (hi_u() - lo_u());
    return to_internal(lower + frac * (upper - lower));
  }
};

// Radical inverse in base b (Halton sequence component).
inline double halton(std::size_t index, std::size_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

inline constexpr std::array<std::size_t, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace detail

struct BoundedMinimum {
  std::vector<double> x;
  double value;
  int evaluations;
  bool converged;
};

/// Multi-start Nelder-Mead over a box, in transformed coordinates.
/// Start 0 is `initial`; further starts come from a Halton design over the
/// middle 80% of each transformed range.
class BoundedMinimizer {
 public:
  BoundedMinimizer(std::vector<FreeParameter> params, NelderMeadOptions nm) : params_(std::move(params)), nm_(nm) {
    for (const auto& p : params_) {
      if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper))
        throw InvalidArgument("parameter '" + p.path + "': need finite lower < upper");
      if (p.scale == ParamScale::Log && !(p.lower > 0.0))
        throw InvalidArgument("parameter '" + p.path + "': log scale needs a positive lower bound");
      box_.push_back({p.scale, p.lower, p.upper});
    }
  }

  std::vector<double> start_point(std::size_t k) const {
    std::vector<double> u(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (k == 0) {
        u[i] = params_[i].initial ? box_[i].to_internal(*params_[i].initial) : box_[i].from_fraction(0.5);
      } else {
        const double frac = 0.1 + 0.8 * detail::halton(k, detail::kPrimes[i % detail::kPrimes.size()]);
        u[i] = box_[i].from_fraction(frac);
      }
    }
    return u;
  }

  std::vector<double> to_values(std::span<const double> u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = box_[i].to_value(u[i]);
    return x;
  }

  /// Minimizes f(values) from start `k`.
  BoundedMinimum run(const std::function<double(std::span<const double>)>& f, std::size_t k) const {
    auto project = [this](std::vector<double>& u) {
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], box_[i].lo_u(), box_[i].hi_u());
    };
    auto g = [&](std::span<const double> u) { return f(to_values(u)); };
    const auto r = nelder_mead(g, start_point(k), nm_, project);
    return {to_values(r.x), r.value, r.evaluations, r.converged};
  }

  bool at_boundary(std::size_t i, double value) const {
    const auto& b = box_[i];
    if (b.scale == ParamScale::Log) {
      const double span = std::log(b.upper) - std::log(b.lower);
      return std::log(value) - std::log(b.lower) <= 1e-6 * span || std::log(b.upper) - std::log(value) <= 1e-6 * span;
    }
    const double span = b.upper - b.lower;
    return value - b.lower <= 1e-6 * span || b.upper - value <= 1e-6 * span;
  }

 private:
  std::vector<FreeParameter> params_;
  std::vector<detail::BoxTransform> box_;
  NelderMeadOptions nm_;
};

/// Default box for a parameter path, by its leaf name. D is the largest
/// distance under the model's metric.
inline FreeParameter default_free_parameter(const Model& m, const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string leaf = dot == std::string::npos ? path : path.substr(dot + 1);
  const double dmax = m.sphere().max_distance(m.metric());
  const double r = m.sphere().radius();
  const bool gc = m.metric() == Metric::GreatCircle;

  // Family of the component owning this path.
  const Model* owner = &m;
  std::string rest = path;
  while (!owner->is_base() && rest.rfind('c', 0) == 0 && rest.find('.') != std::string::npos) {
    const auto d = rest.find('.');
    owner = &owner->components().at(static_cast<std::size_t>(std::stoul(rest.substr(1, d - 1))));
    rest = rest.substr(d + 1);
  }
  const std::optional<Family> fam = owner->is_base() ? std::optional(owner->base().family()) : std::nullopt;

  FreeParameter p;
  p.path = path;
  if (leaf == "sigma2") {
    p = {path, 1e-8, 1e6, std::nullopt, ParamScale::Log};
  } else if (leaf == "alpha") {
    p = {path, 1e-3 * dmax, 50.0 * dmax, std::nullopt, ParamScale::Log};
  } else if (leaf == "nu") {
    p = {path, 1e-3, gc ? 0.5 : 25.0, std::nullopt, ParamScale::Log};
  } else if (leaf == "lambda") {
    p = {path, 1e-6, 1.0 - 1e-6, std::nullopt, ParamScale::Logit};
  } else if (leaf == "beta") {
    p = {path, 1e-3, 2.0, std::nullopt, ParamScale::Logit};
  } else if (leaf == "tau" && fam == Family::Multiquadric) {
    p = {path, 1e-6, 1.0 - 1e-6, std::nullopt, ParamScale::Logit};
  } else if (leaf == "tau") {
    p = {path, 6.0, 100.0, std::nullopt, ParamScale::Log};
  } else if (leaf == "c" && fam == Family::WendlandC4) {
    p = {path, 1e-3, gc ? std::numbers::pi : 50.0 * dmax / r, std::nullopt, ParamScale::Log};
  } else if (leaf == "c") {
    p = {path, 1e-3, 50.0 * dmax / r, std::nullopt, ParamScale::Log};
  } else if (leaf == "n") {
    p = {path, 1e-3, 100.0, std::nullopt, ParamScale::Log};
  } else {
    throw InvalidArgument("no default bounds for parameter '" + path + "'");
  }
  return p;
}

/// FitSpec with default bounds for `free_paths`.
inline FitSpec default_fit_spec(const Model& model, const std::vector<std::string>& free_paths,
                                std::vector<Tie> ties = {}) {
  FitSpec spec{model, {}, std::move(ties), {}};
  for (const auto& path : free_paths) spec.free.push_back(default_free_parameter(model, path));
  return spec;
}

namespace detail {

inline Model apply_parameters(const FitSpec& spec, std::span<const double> values) {
  Model m = spec.model;
  for (std::size_t i = 0; i < spec.free.size(); ++i) m = m.with_parameter(spec.free[i].path, values[i]);
  for (const auto& t : spec.ties) m = m.with_parameter(t.target, m.parameter(t.source));
  return m;
}

inline std::optional<double> range_parameter(const Model& m) {
  for (const auto& [path, value] : m.parameters())
    if (path == "alpha" || (path.size() > 6 && path.ends_with(".alpha"))) return value;
  return std::nullopt;
}

}  // namespace detail

/// Maximum-likelihood fit of the free parameters in `spec` to `data` after
/// subtracting `mean`.
inline FittedModel mle_fit(const FitSpec& spec, const MeanModel& mean, std::span<const Observation> data) {
  for (const auto& p : spec.free)
    if (!spec.model.has_parameter(p.path)) throw InvalidArgument("fit: template has no parameter '" + p.path + "'");
  for (const auto& t : spec.ties)
    if (!spec.model.has_parameter(t.target) || !spec.model.has_parameter(t.source))
      throw InvalidArgument("fit: bad tie '" + t.target + "' <- '" + t.source + "'");

  LikelihoodEvaluator loglik(data, mean, spec.model.sphere());

  auto params = spec.free;
  if (spec.options.nugget) params.push_back({"nugget", spec.options.nugget_lower, spec.options.nugget_upper, std::nullopt, ParamScale::Log});
  // sigma2 starts at the residual sample variance unless given
  const auto& z = loglik.residuals();
  const double var = z.size() > 1 ? (z.array() - z.mean()).square().sum() / static_cast<double>(z.size() - 1) : 1.0;
  for (auto& p : params) {
    const bool is_var = p.path == "sigma2" || p.path.ends_with(".sigma2");
    if (is_var && !p.initial && var > 0.0) p.initial = std::clamp(var, p.lower, p.upper);
  }
  const std::size_t n_model = spec.free.size();

  auto build = [&](std::span<const double> values) -> std::pair<Model, double> {
    const double nug = spec.options.nugget ? values[n_model] : 0.0;
    return {detail::apply_parameters(spec, values.first(n_model)), nug};
  };
  auto objective = [&](std::span<const double> values) {
    try {
      const auto [m, nug] = build(values);
      return -loglik(m, nug);
    } catch (const InvalidArgument&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  if (params.empty()) {
    FittedModel out{spec.model, 0.0, true, 1, 0.0, 0.0, {}, {}};
    out.loglik = loglik(spec.model, 0.0, &out.jitter);
    if (!std::isfinite(out.loglik)) throw FitError("fit: likelihood is not finite at the fixed parameters");
    out.starts.push_back({out.loglik, out.loglik, 1, true});
    return out;
  }

  NelderMeadOptions nm;
  nm.max_evaluations = spec.options.max_evaluations;
  nm.tolerance = spec.options.tolerance;
  BoundedMinimizer minimizer(params, nm);

  struct Candidate {
    BoundedMinimum result;
    Model model;
    double nugget;
  };
  std::vector<Candidate> candidates;
  FittedModel out{spec.model, -std::numeric_limits<double>::infinity(), false, 0, 0.0, 0.0, {}, {}};
  for (int k = 0; k < std::max(1, spec.options.starts); ++k) {
    const auto u0 = minimizer.start_point(static_cast<std::size_t>(k));
    const double initial = -objective(minimizer.to_values(u0));
    auto r = minimizer.run(objective, static_cast<std::size_t>(k));
    out.evaluations += r.evaluations + 1;
    out.starts.push_back({initial, -r.value, r.evaluations, r.converged});
    if (!std::isfinite(r.value)) continue;
    auto [m, nug] = build(r.x);
    candidates.push_back({std::move(r), std::move(m), nug});
  }
  if (candidates.empty()) throw FitError("fit: no start produced a finite likelihood");

  double best_ll = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best_ll = std::max(best_ll, -c.result.value);
  const Candidate* chosen = nullptr;
  for (const auto& c : candidates) {
    if (-c.result.value < best_ll - spec.options.tie_loglik) continue;
    if (!chosen) {
      chosen = &c;
      continue;
    }
    const auto ra = detail::range_parameter(c.model);
    const auto rb = detail::range_parameter(chosen->model);
    if (ra && rb && *ra < *rb) chosen = &c;
  }

  out.model = chosen->model;
  out.nugget = chosen->nugget;
  out.loglik = -chosen->result.value;
  out.converged = chosen->result.converged;
  (void)loglik(out.model, out.nugget, &out.jitter);
  for (std::size_t i = 0; i < params.size(); ++i)
    if (minimizer.at_boundary(i, chosen->result.x[i])) out.at_boundary.push_back(params[i].path);
  return out;
}

}  // namespace sphcov
