#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kernels.hpp"

namespace sphcov {

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(std::size_t n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule. Thread-safe.
inline std::shared_ptr<const QuadratureRule> gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const QuadratureRule>> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const QuadratureRule>(detail::compute_gauss_legendre(n));
  std::lock_guard lock(mu);
  return cache.emplace(n, std::move(rule)).first->second;
}

struct QuadratureOptions {
  std::size_t initial_nodes = 2048;
  std::size_t max_nodes = 16384;
  double tolerance = 1e-10;
};

namespace detail {

// Normalized coefficients of theta -> psi(r*theta) on [0, pi] with a fixed rule.
// d = 1: Fourier cosine series; d = 2: Legendre series in cos(theta).
template <class F>
std::vector<double> schoenberg_pass(const F& psi_unit, double psi0, int d, int n_max, const QuadratureRule& rule) {
  std::vector<double> b(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double half_pi = 0.5 * std::numbers::pi;
  std::vector<double> p(b.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = half_pi * (rule.nodes[i] + 1.0);
    const double w = half_pi * rule.weights[i] * psi_unit(x);
    if (d == 1) {
      // cos(n x) by Chebyshev recurrence
      double c0 = 1.0;
      double c1 = std::cos(x);
      const double two_c = 2.0 * c1;
      b[0] += w;
      if (n_max >= 1) b[1] += w * c1;
      for (int n = 2; n <= n_max; ++n) {
        const double c2 = two_c * c1 - c0;
        c0 = c1;
        c1 = c2;
        b[static_cast<std::size_t>(n)] += w * c2;
      }
    } else {
      const double u = std::cos(x);
      const double ws = w * std::sin(x);
      double p0 = 1.0;
      double p1 = u;
      b[0] += ws;
      if (n_max >= 1) b[1] += ws * p1;
      for (int n = 2; n <= n_max; ++n) {
        const double nd = n;
        const double p2 = ((2.0 * nd - 1.0) * u * p1 - (nd - 1.0) * p0) / nd;
        p0 = p1;
        p1 = p2;
        b[static_cast<std::size_t>(n)] += ws * p2;
      }
    }
  }
  for (int n = 0; n <= n_max; ++n) {
    double scale = 0.0;
    if (d == 1) {
      scale = (n == 0 ? 1.0 : 2.0) / std::numbers::pi;
    } else {
      scale = (2.0 * n + 1.0) / 2.0;
    }
    b[static_cast<std::size_t>(n)] *= scale / psi0;
  }
  return b;
}

}  // namespace detail

/// Normalized Schoenberg coefficients b_0..b_{n_max} of psi restricted to the
/// great-circle domain of S^d (d = 1 Fourier cosine, d = 2 Legendre), each
/// divided by psi(0), so that a valid model has b_n >= 0 and sum b_n = 1.
///
/// The model is evaluated as psi(theta) for great-circle models and as
/// phi(2r sin(theta / 2r)) for chordal ones. Quadrature nodes double until two
/// successive coefficient vectors agree to `opts.tolerance` in max norm.
inline std::vector<double> schoenberg_coefficients(const Model& m, int d, int n_max,
                                                   const QuadratureOptions& opts = {}) {
  if (d != 1 && d != 2) throw InvalidArgument("schoenberg_coefficients: d must be 1 or 2");
  if (n_max < 1) throw InvalidArgument("schoenberg_coefficients: n_max must be >= 1");
  const double r = m.sphere().radius();
  const bool chordal = m.metric() == Metric::Chordal;
  auto psi_unit = [&](double x) {
    const double dist = chordal ? 2.0 * r * std::sin(0.5 * x) : r * x;
    return m.evaluate_unchecked(dist);
  };
  const double psi0 = m.variance();
  if (!(psi0 > 0.0)) throw InvalidArgument("schoenberg_coefficients: psi(0) must be positive");

  std::size_t nodes = opts.initial_nodes;
  auto prev = detail::schoenberg_pass(psi_unit, psi0, d, n_max, *gauss_legendre(nodes));
  while (nodes * 2 <= opts.max_nodes) {
    nodes *= 2;
    auto next = detail::schoenberg_pass(psi_unit, psi0, d, n_max, *gauss_legendre(nodes));
    double diff = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) diff = std::max(diff, std::abs(next[i] - prev[i]));
    if (diff < opts.tolerance) return next;
    prev = std::move(next);
  }
  throw QuadratureError("Schoenberg coefficients did not converge with " + std::to_string(opts.max_nodes) +
                        " quadrature nodes");
}

struct Violation {
  int index;
  double value;
};

/// Local behaviour of rho = psi / psi(0) at theta = 0 and theta = pi.
/// With 1 - rho ~ A theta^s at the origin and a nonzero slope at the antipode,
/// b_n is a sum of a positive n^(-1-s) term and a (-1)^n n^(-2) term; for
/// s > 1 the alternating term wins and infinitely many b_n are negative.
struct TailAnalysis {
  double origin_index = std::numeric_limits<double>::quiet_NaN();
  double antipode_slope = 0.0;
  bool alternating = false;
};

inline constexpr double kTailIndexMargin = 1e-3;
inline constexpr double kTailSlopeThreshold = 1e-6;

namespace detail {

template <class Rho>
double origin_index(const Rho& rho) {
  for (double x = 1e-14; x <= 1e-2; x *= 10.0) {
    const double lo = 1.0 - rho(x);
    if (lo > 1e-9) return std::log10((1.0 - rho(10.0 * x)) / lo);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Richardson on D(h) = (rho(pi) - rho(pi - h)) / h = a + c1 h + c2 h^2 + c3 h^3 + ...
template <class Rho>
double antipode_slope(const Rho& rho) {
  const double pi = std::numbers::pi;
  const double h = 0.02;
  double t[4];
  for (int k = 0; k < 4; ++k) {
    const double hk = h / std::pow(2.0, k);
    t[k] = (rho(pi) - rho(pi - hk)) / hk;
  }
  for (int level = 1; level < 4; ++level) {
    const double f = std::pow(2.0, level);
    for (int k = 0; k + level < 4; ++k) t[k] = (f * t[k + 1] - t[k]) / (f - 1.0);
  }
  return t[0];
}

}  // namespace detail

inline TailAnalysis tail_analysis(const Model& m) {
  const double r = m.sphere().radius();
  const bool chordal = m.metric() == Metric::Chordal;
  const double psi0 = m.variance();
  auto rho = [&](double x) {
    const double dist = chordal ? 2.0 * r * std::sin(0.5 * x) : r * x;
    return m.evaluate_unchecked(std::min(dist, m.sphere().max_distance(m.metric()))) / psi0;
  };
  TailAnalysis t;
  t.origin_index = detail::origin_index(rho);
  t.antipode_slope = detail::antipode_slope(rho);
  t.alternating = t.origin_index > 1.0 + kTailIndexMargin && std::abs(t.antipode_slope) > kTailSlopeThreshold;
  return t;
}

struct ValidityVerdict {
  bool valid = false;
  std::optional<Violation> first_violation;
  TailAnalysis tail;
  std::vector<double> coefficients;
  double tolerance = 0.0;
  int dimension = 0;
  int n_max = 0;
  // "numerical": decided by the coefficients. "asymptotic": coefficients up to
  // n_max pass but the tail alternates. "catalog": chordal model whose family
  // is a known member of Phi_{d+1}; coefficients are informational.
  std::string method;
};

/// Positive definiteness of `m` on S^d, certified up to Schoenberg order n_max.
inline ValidityVerdict check_validity(const Model& m, int d, int n_max = 200, double tol = 1e-8,
                                      const QuadratureOptions& opts = {}) {
  ValidityVerdict v;
  v.tolerance = tol;
  v.dimension = d;
  v.n_max = n_max;
  v.coefficients = schoenberg_coefficients(m, d, n_max, opts);
  for (std::size_t n = 0; n < v.coefficients.size(); ++n) {
    if (v.coefficients[n] < -tol) {
      v.first_violation = Violation{static_cast<int>(n), v.coefficients[n]};
      break;
    }
  }
  if (m.metric() == Metric::Chordal && in_euclidean_class(m, d + 1)) {
    v.method = "catalog";
    v.valid = true;
  } else {
    v.tail = tail_analysis(m);
    v.method = !v.first_violation && v.tail.alternating ? "asymptotic" : "numerical";
    v.valid = !v.first_violation && !v.tail.alternating;
  }
  return v;
}

struct MinCorrelation {
  double value;
  double distance;
};

/// Minimum of psi(x)/psi(0) over `grid_size` equally spaced distances covering
/// the model's domain on its sphere ([0, pi*r] or [0, 2r]).
inline MinCorrelation min_correlation(const Model& m, int grid_size = 10000) {
  if (grid_size < 100) throw InvalidArgument("min_correlation: grid_size must be >= 100");
  const double dmax = m.sphere().max_distance(m.metric());
  const double c0 = m.variance();
  MinCorrelation best{1.0, 0.0};
  for (int i = 0; i < grid_size; ++i) {
    const double x = dmax * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    const double rho = m.evaluate_unchecked(x) / c0;
    if (rho < best.value) best = {rho, x};
  }
  return best;
}

}  // namespace sphcov
