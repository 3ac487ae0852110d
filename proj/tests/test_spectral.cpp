#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sphcov/geometry.hpp"
#include "sphcov/grid.hpp"
#include "sphcov/spectral.hpp"

using namespace sphcov;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Spectrum, OscillatingMaternFormula) {
  const auto s = oscillating_matern_spectrum(0.5, 0.3, 2.0, 1.0, 10);
  ASSERT_EQ(s.b.size(), 11u);
  const double tau = 0.5 / std::sqrt(4 * kPi);
  for (int n = 0; n <= 10; ++n) {
    const double l = n * (n + 1.0);
    const double base = std::pow(0.5, 4) + 2 * std::cos(0.3 * kPi) * 0.25 * l + l * l;
    EXPECT_NEAR(s.b[n], (2 * n + 1) / (4 * kPi * tau * tau) / base, 1e-12 * s.b[n]);
  }
  EXPECT_NEAR(s.evaluate(0.0, 1.0), s.variance(), 1e-12 * s.variance());
}

TEST(Spectrum, InvalidArguments) {
  EXPECT_THROW(oscillating_matern_spectrum(0.0, 0.3, 2, 1, 10), InvalidArgument);
  EXPECT_THROW(oscillating_matern_spectrum(0.5, 1.0, 2, 1, 10), InvalidArgument);
  EXPECT_THROW(oscillating_matern_spectrum(0.5, 0.3, 1.0, 1, 10), InvalidArgument);
  EXPECT_THROW(oscillating_matern_spectrum(0.5, 0.3, 2, 0, 10), InvalidArgument);
  EXPECT_THROW(oscillating_matern_spectrum(0.5, 0.3, 2, 1, -1), InvalidArgument);
}

TEST(Spectrum, LegendreEvaluation) {
  // b = (0, 0, 1): P_2(cos x) = (3 cos^2 x - 1) / 2
  const LegendreSpectrum s{{0.0, 0.0, 1.0}};
  for (double x = 0; x <= kPi; x += 0.1) EXPECT_NEAR(s.evaluate(x * 3.0, 3.0), 0.5 * (3 * std::cos(x) * std::cos(x) - 1), 1e-14);
}

TEST(Spectrum, OscillationGivesNegativeCorrelation) {
  auto min_corr = [](double kappa, double theta) {
    const auto s = oscillating_matern_spectrum(kappa, theta, 2.0, 1.0, 200);
    double lo = 1;
    for (double x = 0; x <= kPi; x += 0.001) lo = std::min(lo, s.evaluate(x, 1.0) / s.variance());
    return lo;
  };
  EXPECT_LT(min_corr(5.0, 0.9), -0.2);
  // stronger oscillation as theta -> 1
  EXPECT_LT(min_corr(5.0, 0.7), min_corr(5.0, 0.3));
  EXPECT_LT(min_corr(5.0, 0.9), min_corr(5.0, 0.7));
  // small kappa: degree 0 dominates, no negative lobe
  EXPECT_GT(min_corr(0.5, 0.3), 0.5);
}

TEST(Harmonics, AdditionTheorem) {
  const auto s = oscillating_matern_spectrum(2.0, 0.3, 2.0, 1.0, 40);
  const auto grid = GridDataset::cell_centred(8, 16);
  const SphericalHarmonicSampler sampler(s, grid.latitudes, grid.longitudes);
  EXPECT_EQ(sampler.coefficient_count(), 41u * 41u);
  const Sphere unit(2, 1.0);
  for (std::size_t i1 = 0; i1 < 8; i1 += 3)
    for (std::size_t j1 = 0; j1 < 16; j1 += 5)
      for (std::size_t i2 = 0; i2 < 8; ++i2)
        for (std::size_t j2 = 0; j2 < 16; j2 += 3) {
          const auto a = Location::latlon(grid.latitudes[i1], grid.longitudes[j1]);
          const auto b = Location::latlon(grid.latitudes[i2], grid.longitudes[j2]);
          const double expected = s.evaluate(great_circle_distance(a, b, unit), 1.0);
          EXPECT_NEAR(sampler.covariance(i1, j1, i2, j2), expected, 1e-10 * s.variance());
        }
}

TEST(Harmonics, EmpiricalVarianceMatchesSpectrum) {
  const auto s = oscillating_matern_spectrum(2.0, 0.3, 2.0, 1.0, 30);
  const std::vector<double> lats{-60, 0, 45}, lons{-120, 0, 90};
  const SphericalHarmonicSampler sampler(s, lats, lons);
  const int reps = 4000;
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(3, 3);
  double cross = 0;  // (45N, 90E) with (0, 0)
  for (int r = 0; r < reps; ++r) {
    RandomStream rng(5, static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd v = sampler.draw(rng);
    ss += v.cwiseProduct(v);
    cross += v(2, 2) * v(1, 1);
  }
  ss /= reps;
  const double var = s.variance();
  const double se = var * std::sqrt(2.0 / reps);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(ss(i, j), var, 4 * se);
  const double gc = great_circle_distance(Location::latlon(45, 90), Location::latlon(0, 0), Sphere(2, 1.0));
  const double c = s.evaluate(gc, 1.0);
  EXPECT_NEAR(cross / reps, c, 4 * std::sqrt((var * var + c * c) / reps));
}

TEST(Harmonics, DeterministicDraws) {
  const auto s = oscillating_matern_spectrum(0.5, 0.3, 2.0, 1.0, 20);
  const auto grid = GridDataset::cell_centred(6, 12);
  const SphericalHarmonicSampler sampler(s, grid.latitudes, grid.longitudes);
  RandomStream a(9), b(9);
  EXPECT_EQ(sampler.draw(a), sampler.draw(b));
  EXPECT_THROW(SphericalHarmonicSampler(LegendreSpectrum{}, grid.latitudes, grid.longitudes), InvalidArgument);
  EXPECT_THROW(SphericalHarmonicSampler(LegendreSpectrum{{1.0, -0.1}}, grid.latitudes, grid.longitudes), InvalidArgument);
}
