#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace sphcov {

enum class Family { Exponential, Matern, PoweredExponential, Multiquadric, SinePower, WendlandC4, Wave, Cosine };

inline constexpr std::array kAllFamilies = {Family::Exponential, Family::Matern,     Family::PoweredExponential,
                                            Family::Multiquadric, Family::SinePower, Family::WendlandC4,
                                            Family::Wave,         Family::Cosine};

namespace detail {

struct FamilyInfo {
  std::string_view name;
  std::array<std::string_view, 3> params;
  std::size_t n_params;
};

// Parameter order is the storage order. sigma2 is always first.
inline constexpr FamilyInfo family_info(Family f) {
  switch (f) {
    case Family::Exponential: return {"Exponential", {"sigma2", "alpha", ""}, 2};
    case Family::Matern: return {"Matern", {"sigma2", "alpha", "nu"}, 3};
    case Family::PoweredExponential: return {"PoweredExponential", {"sigma2", "c", "beta"}, 3};
    case Family::Multiquadric: return {"Multiquadric", {"sigma2", "tau", "c"}, 3};
    case Family::SinePower: return {"SinePower", {"sigma2", "beta", ""}, 2};
    case Family::WendlandC4: return {"WendlandC4", {"sigma2", "c", "tau"}, 3};
    case Family::Wave: return {"Wave", {"sigma2", "alpha", ""}, 2};
    case Family::Cosine: return {"Cosine", {"sigma2", "n", ""}, 2};
  }
  return {"", {"", "", ""}, 0};
}

}  // namespace detail

inline std::string_view to_string(Family f) { return detail::family_info(f).name; }

inline Family family_from_string(std::string_view s) {
  for (Family f : kAllFamilies) {
    if (detail::family_info(f).name == s) return f;
  }
  throw InvalidArgument("unknown covariance family '" + std::string(s) + "'");
}

inline std::span<const std::string_view> parameter_names(Family f) {
  static const auto table = [] {
    std::array<std::array<std::string_view, 3>, kAllFamilies.size()> t{};
    for (std::size_t i = 0; i < kAllFamilies.size(); ++i) t[i] = detail::family_info(kAllFamilies[i]).params;
    return t;
  }();
  const auto idx = static_cast<std::size_t>(f);
  return {table[idx].data(), detail::family_info(f).n_params};
}

/// One parametric isotropic family evaluated at a distance measured in `metric`.
///
/// The family formula is applied to whatever distance the metric produces: a
/// great-circle model sees theta in [0, pi*r], a chordal model sees the chord
/// t in [0, 2r] (or any t >= 0 when used as a Euclidean function). Parameters
/// are family-scoped; `c` and `tau` mean different things for Multiquadric and
/// WendlandC4.
class CovarianceModel {
 public:
  CovarianceModel(Family family, Metric metric, Sphere sphere, std::vector<double> params)
      : family_(family), metric_(metric), sphere_(sphere), params_(std::move(params)) {
    validate();
    precompute();
  }

  CovarianceModel(Family family, Metric metric, Sphere sphere,
                  std::initializer_list<std::pair<std::string_view, double>> named)
      : family_(family), metric_(metric), sphere_(sphere) {
    const auto names = parameter_names(family);
    params_.assign(names.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [k, v] : named) params_.at(index_of(k)) = v;
    validate();
    precompute();
  }

  Family family() const noexcept { return family_; }
  Metric metric() const noexcept { return metric_; }
  const Sphere& sphere() const noexcept { return sphere_; }
  std::span<const double> params() const noexcept { return params_; }
  double variance() const noexcept { return params_[0]; }

  bool has_param(std::string_view name) const noexcept {
    for (auto n : parameter_names(family_))
      if (n == name) return true;
    return false;
  }

  double param(std::string_view name) const { return params_[index_of(name)]; }

  CovarianceModel with_param(std::string_view name, double value) const {
    auto p = params_;
    p[index_of(name)] = value;
    return {family_, metric_, sphere_, std::move(p)};
  }

  /// Covariance at `distance`; throws if the distance is outside the metric's domain.
  double evaluate(double distance) const {
    if (!(distance >= 0.0)) throw InvalidArgument("covariance evaluated at negative or NaN distance");
    if (metric_ == Metric::GreatCircle) {
      const double dmax = sphere_.max_distance(Metric::GreatCircle);
      if (distance > dmax * (1.0 + 1e-9) + 1e-9)
        throw InvalidArgument("great-circle distance exceeds pi*r");
      distance = std::min(distance, dmax);
    }
    return evaluate_unchecked(distance);
  }

  double operator()(double distance) const { return evaluate(distance); }

  /// No domain checks. Callers guarantee 0 <= distance (<= pi*r for great circle).
  double evaluate_unchecked(double x) const noexcept {
    const double s2 = params_[0];
    const double r = sphere_.radius();
    switch (family_) {
      case Family::Exponential: return s2 * std::exp(-x / params_[1]);
      case Family::Matern: return s2 * matern_correlation(x / params_[1]);
      case Family::PoweredExponential: return s2 * std::exp(-std::pow(x / (params_[1] * r), params_[2]));
      case Family::Multiquadric: {
        const double tau = params_[1];
        const double h = std::sin(x / (2.0 * r));
        const double denom = (1.0 - tau) * (1.0 - tau) + 4.0 * tau * h * h;
        return s2 * std::pow((1.0 - tau) * (1.0 - tau) / denom, params_[2]);
      }
      case Family::SinePower: return s2 * (1.0 - std::pow(std::abs(std::sin(x / (2.0 * r))), params_[1]));
      case Family::WendlandC4: {
        const double c = params_[1];
        const double tau = params_[2];
        const double s = x / (c * r);
        if (s >= 1.0) return 0.0;
        return s2 * (1.0 + tau * s + (tau * tau - 1.0) * s * s / 3.0) * std::pow(1.0 - s, tau);
      }
      case Family::Wave: {
        const double u = x / params_[1];
        if (u < 1e-6) return s2 * (1.0 - u * u / 6.0);
        return s2 * std::sin(u) / u;
      }
      case Family::Cosine: return s2 * std::cos(params_[1] * x / r);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  friend bool operator==(const CovarianceModel& a, const CovarianceModel& b) {
    return a.family_ == b.family_ && a.metric_ == b.metric_ && a.sphere_ == b.sphere_ && a.params_ == b.params_;
  }

 private:
  std::size_t index_of(std::string_view name) const {
    const auto names = parameter_names(family_);
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw InvalidArgument("family " + std::string(to_string(family_)) + " has no parameter '" + std::string(name) +
                          "'");
  }

  void validate() const {
    const auto name = std::string(to_string(family_));
    if (params_.size() != parameter_names(family_).size())
      throw InvalidArgument(name + ": wrong number of parameters");
    for (double v : params_)
      if (!std::isfinite(v)) throw InvalidArgument(name + ": parameters must be finite");
    auto require = [&](bool ok, const char* what) {
      if (!ok) throw InvalidArgument(name + ": " + what);
    };
    require(params_[0] > 0.0, "sigma2 must be positive");
    switch (family_) {
      case Family::Exponential:
      case Family::Wave: require(params_[1] > 0.0, "alpha must be positive"); break;
      case Family::Matern:
        require(params_[1] > 0.0, "alpha must be positive");
        require(params_[2] > 0.0, "nu must be positive");
        break;
      case Family::PoweredExponential:
        require(params_[1] > 0.0, "c must be positive");
        require(params_[2] > 0.0 && params_[2] <= 2.0, "beta must lie in (0, 2]");
        break;
      case Family::Multiquadric:
        require(params_[1] > 0.0 && params_[1] < 1.0, "tau must lie in (0, 1)");
        require(params_[2] > 0.0, "c must be positive");
        break;
      case Family::SinePower: require(params_[1] > 0.0 && params_[1] <= 2.0, "beta must lie in (0, 2]"); break;
      case Family::WendlandC4:
        if (metric_ == Metric::GreatCircle) {
          require(params_[1] > 0.0 && params_[1] <= std::numbers::pi, "c must lie in (0, pi] for great circle");
        } else {
          require(params_[1] > 0.0, "c must be positive");
        }
        require(params_[2] >= 6.0, "tau must be at least 6");
        break;
      case Family::Cosine: require(params_[1] > 0.0, "n must be positive"); break;
    }
  }

  void precompute() {
    if (family_ == Family::Matern) {
      const double nu = params_[2];
      matern_log_norm_ = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu);
    }
  }

  // 2^{1-nu}/Gamma(nu) u^nu K_nu(u), with closed forms at nu = 1/2, 3/2, 5/2.
  double matern_correlation(double u) const noexcept {
    if (u <= 0.0) return 1.0;
    const double nu = params_[2];
    if (nu == 0.5) return std::exp(-u);
    if (nu == 1.5) return (1.0 + u) * std::exp(-u);
    if (nu == 2.5) return (1.0 + u + u * u / 3.0) * std::exp(-u);
    if (u > 700.0) return 0.0;
    const double k = std::cyl_bessel_k(nu, u);
    return std::exp(matern_log_norm_ + nu * std::log(u)) * k;
  }

  Family family_;
  Metric metric_;
  Sphere sphere_;
  std::vector<double> params_;
  double matern_log_norm_ = 0.0;
};

/// A covariance model: one parametric family, a convex sum, or a product.
///
/// Parameters are addressed by path. A base model exposes its family names
/// ("sigma2", "alpha", ...); a composite prefixes component parameters with
/// "c<i>." and a two-component convex sum additionally exposes "lambda",
/// the weight of component 0 (component 1 gets 1 - lambda).
class Model {
 public:
  enum class Kind { Base, ConvexSum, Product };

  Model(CovarianceModel base)  // NOLINT(google-explicit-constructor)
      : kind_(Kind::Base), base_(std::move(base)) {}

  static Model convex_sum(std::vector<Model> components, std::vector<double> weights) {
    if (components.empty()) throw InvalidArgument("convex sum needs at least one component");
    if (weights.size() != components.size()) throw InvalidArgument("convex sum: one weight per component");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("convex sum weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("convex sum weights must sum to 1");
    check_shared(components);
    Model m(Kind::ConvexSum);
    m.base_ = components.front().anchor();
    m.components_ = std::move(components);
    m.weights_ = std::move(weights);
    return m;
  }

  static Model product(std::vector<Model> components) {
    if (components.empty()) throw InvalidArgument("product needs at least one component");
    check_shared(components);
    Model m(Kind::Product);
    m.base_ = components.front().anchor();
    m.components_ = std::move(components);
    return m;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_base() const noexcept { return kind_ == Kind::Base; }
  Metric metric() const noexcept { return base_->metric(); }
  const Sphere& sphere() const noexcept { return base_->sphere(); }

  /// The parametric family of a base model. Throws for composites.
  const CovarianceModel& base() const {
    if (kind_ != Kind::Base) throw InvalidArgument("composite model has no single base family");
    return *base_;
  }
  const std::vector<Model>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double evaluate(double distance) const {
    if (kind_ == Kind::Base) return base_->evaluate(distance);
    if (!(distance >= 0.0)) throw InvalidArgument("covariance evaluated at negative or NaN distance");
    if (metric() == Metric::GreatCircle) {
      const double dmax = sphere().max_distance(Metric::GreatCircle);
      if (distance > dmax * (1.0 + 1e-9) + 1e-9) throw InvalidArgument("great-circle distance exceeds pi*r");
      distance = std::min(distance, dmax);
    }
    return evaluate_unchecked(distance);
  }

  double operator()(double distance) const { return evaluate(distance); }

  double evaluate_unchecked(double distance) const noexcept {
    switch (kind_) {
      case Kind::Base: return base_->evaluate_unchecked(distance);
      case Kind::ConvexSum: {
        double s = 0.0;
        for (std::size_t i = 0; i < components_.size(); ++i)
          if (weights_[i] != 0.0) s += weights_[i] * components_[i].evaluate_unchecked(distance);
        return s;
      }
      case Kind::Product: {
        double p = 1.0;
        for (const auto& c : components_) p *= c.evaluate_unchecked(distance);
        return p;
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// Covariance at distance zero.
  double variance() const noexcept { return evaluate_unchecked(0.0); }

  /// All parameters as (path, value), in a stable order.
  std::vector<std::pair<std::string, double>> parameters() const {
    std::vector<std::pair<std::string, double>> out;
    collect("", out);
    return out;
  }

  double parameter(std::string_view path) const {
    if (kind_ == Kind::Base) return base_->param(path);
    if (path == "lambda") {
      require_lambda();
      return weights_[0];
    }
    const auto [idx, rest] = split_component(path);
    return components_[idx].parameter(rest);
  }

  Model with_parameter(std::string_view path, double value) const {
    if (kind_ == Kind::Base) return Model(base_->with_param(path, value));
    Model m = *this;
    if (path == "lambda") {
      require_lambda();
      if (!(value >= 0.0 && value <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
      m.weights_ = {value, 1.0 - value};
      return m;
    }
    const auto [idx, rest] = split_component(path);
    m.components_[idx] = components_[idx].with_parameter(rest, value);
    m.base_ = m.components_.front().anchor();
    return m;
  }

  bool has_parameter(std::string_view path) const {
    try {
      (void)parameter(path);
      return true;
    } catch (const InvalidArgument&) {
      return false;
    }
  }

  friend bool operator==(const Model& a, const Model& b) {
    return a.kind_ == b.kind_ && a.base_ == b.base_ && a.components_ == b.components_ && a.weights_ == b.weights_;
  }

 private:
  explicit Model(Kind k) : kind_(k) {}

  // A base model that carries the shared metric and sphere.
  const CovarianceModel& anchor() const { return *base_; }

  static void check_shared(const std::vector<Model>& comps) {
    for (const auto& c : comps) {
      if (c.metric() != comps.front().metric()) throw InvalidArgument("composite components must share a metric");
      if (!(c.sphere() == comps.front().sphere())) throw InvalidArgument("composite components must share a sphere");
    }
  }

  void require_lambda() const {
    if (kind_ != Kind::ConvexSum || components_.size() != 2)
      throw InvalidArgument("'lambda' exists only for two-component convex sums");
  }

  std::pair<std::size_t, std::string_view> split_component(std::string_view path) const {
    const auto dot = path.find('.');
    if (path.size() < 3 || path[0] != 'c' || dot == std::string_view::npos)
      throw InvalidArgument("bad composite parameter path '" + std::string(path) + "'");
    std::size_t idx = 0;
    for (std::size_t i = 1; i < dot; ++i) {
      if (path[i] < '0' || path[i] > '9') throw InvalidArgument("bad composite parameter path '" + std::string(path) + "'");
      idx = idx * 10 + static_cast<std::size_t>(path[i] - '0');
    }
    if (idx >= components_.size()) throw InvalidArgument("component index out of range in '" + std::string(path) + "'");
    return {idx, path.substr(dot + 1)};
  }

  void collect(const std::string& prefix, std::vector<std::pair<std::string, double>>& out) const {
    if (kind_ == Kind::Base) {
      const auto names = parameter_names(base_->family());
      for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back(prefix + std::string(names[i]), base_->params()[i]);
      return;
    }
    if (kind_ == Kind::ConvexSum && components_.size() == 2) out.emplace_back(prefix + "lambda", weights_[0]);
    for (std::size_t i = 0; i < components_.size(); ++i)
      components_[i].collect(prefix + "c" + std::to_string(i) + ".", out);
  }

  Kind kind_;
  // For composites this is a copy of the first component's leaf, used only
  // for metric() and sphere().
  std::optional<CovarianceModel> base_;
  std::vector<Model> components_;
  std::vector<double> weights_;
};

inline double evaluate(const Model& m, double distance) { return m.evaluate(distance); }

inline Model convex_sum(std::vector<Model> components, std::vector<double> weights) {
  return Model::convex_sum(std::move(components), std::move(weights));
}

inline Model product(std::vector<Model> components) { return Model::product(std::move(components)); }

/// Membership of a base family (with its current parameters) in Phi_k, the
/// correlation functions of isotropic fields on R^k. Used to certify chordal
/// models: a member of Phi_{d+1} evaluated at the chord is valid on S^d.
inline bool in_euclidean_class(const CovarianceModel& m, int k) {
  switch (m.family()) {
    case Family::Exponential:
    case Family::Matern:
    case Family::PoweredExponential: return true;  // beta in (0, 2] already enforced
    case Family::Multiquadric: return false;       // periodic in t
    case Family::WendlandC4: return k <= 3;  // tau >= 6 enforced
    case Family::Wave: return k <= 3;
    case Family::Cosine: return k <= 1;
    case Family::SinePower: return false;
  }
  return false;
}

inline bool in_euclidean_class(const Model& m, int k) {
  if (m.is_base()) return in_euclidean_class(m.base(), k);
  for (const auto& c : m.components())
    if (!in_euclidean_class(c, k)) return false;
  return true;
}

}  // namespace sphcov
