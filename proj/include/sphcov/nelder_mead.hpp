#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace sphcov {

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double tolerance = 1e-8;  // simplex diameter (max vertex distance to best, inf-norm)
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Every trial point goes through `project` first, so box constraints can be
/// imposed by clamping. Non-finite objective values rank as +inf.
inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                                    const NelderMeadOptions& opts = {},
                                    const std::function<void(std::vector<double>&)>& project = {}) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  auto eval = [&](std::vector<double>& x) {
    if (project) project(x);
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  if (n == 0) {
    res.value = eval(x0);
    res.x = std::move(x0);
    res.converged = true;
    return res;
  }

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = eval(pts[0]);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i + 1][i] += opts.initial_step;
    fv[i + 1] = eval(pts[i + 1]);
    // clamped onto the start point: step the other way
    if (pts[i + 1] == pts[0]) {
      pts[i + 1][i] -= 2.0 * opts.initial_step;
      fv[i + 1] = eval(pts[i + 1]);
    }
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto point = [&](const std::vector<double>& from, const std::vector<double>& to, double t, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = from[k] + t * (to[k] - from[k]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diam = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[best][k]));
    if (diam < opts.tolerance && std::isfinite(fv[best])) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opts.max_evaluations) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    point(centroid, pts[worst], -1.0, xr);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      point(centroid, pts[worst], -2.0, xe);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    // contraction: outside if the reflection helped at all, inside otherwise
    const bool outside = fr < fv[worst];
    point(centroid, outside ? xr : pts[worst], 0.5, xc);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      point(pts[best], pts[i], 0.5, pts[i]);
      fv[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.value = *it;
  res.x = pts[static_cast<std::size_t>(it - fv.begin())];
  return res;
}

}  // namespace sphcov
