#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sphcov/field.hpp"

using namespace sphcov;

namespace {

constexpr double kPi = std::numbers::pi;
const Sphere kEarth = Sphere::earth();

Model exp_gc_earth(double s2, double alpha) {
  return CovarianceModel(Family::Exponential, Metric::GreatCircle, kEarth, {s2, alpha});
}

std::vector<Observation> harmonic_surface(double a0, double a1, double a2) {
  std::vector<Observation> out;
  for (double lat = -80; lat <= 80; lat += 7.5)
    for (double lon = -150; lon <= 180; lon += 45) {
      const auto loc = Location::latlon(lat, lon);
      out.push_back({loc, MeanModel::harmonic(a0, a1, a2)(loc)});
    }
  return out;
}

}  // namespace

TEST(Mean, ConstantEverywhere) {
  const auto m = MeanModel::constant(5.0);
  EXPECT_EQ(m(Location::latlon(12, 34)), 5.0);
  EXPECT_EQ(mean_eval(m, Location::latlon(-90, 0)), 5.0);
  EXPECT_EQ(MeanModel::zero()(Location::latlon(1, 1)), 0.0);
}

TEST(Mean, HarmonicSpecialLatitudes) {
  const auto m = MeanModel::harmonic(3.0, 2.0, 0.5);
  EXPECT_NEAR(m(Location::latlon(90, 0)), 3.0 - 2.0, 1e-14);
  EXPECT_NEAR(m(Location::latlon(45, 10)), 3.0 + 0.5, 1e-14);
  EXPECT_NEAR(m(Location::latlon(0, 10)), 3.0 + 2.0, 1e-14);
}

TEST(Mean, FitRecoversHarmonicSurface) {
  const auto data = harmonic_surface(75.45, 1.25, -0.3);
  const auto fit = fit_mean(MeanKind::HarmonicLatitude, data);
  EXPECT_EQ(fit.kind, MeanKind::HarmonicLatitude);
  // normal-equations oracle
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), 3);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double lat = data[static_cast<std::size_t>(i)].location.lat_deg();
    x(i, 0) = 1;
    x(i, 1) = std::cos(lat * kPi / 90);
    x(i, 2) = std::sin(lat * kPi / 90);
    y(i) = data[static_cast<std::size_t>(i)].value;
  }
  const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(fit.coefficients[k], beta(k), 1e-10);
  EXPECT_NEAR(fit.coefficients[0], 75.45, 1e-10);
  EXPECT_NEAR(fit.coefficients[1], 1.25, 1e-10);
  EXPECT_NEAR(fit.coefficients[2], -0.3, 1e-10);
}

TEST(Mean, ConstantFitIsSampleMean) {
  std::vector<Observation> data{{Location::latlon(0, 0), 1.0}, {Location::latlon(10, 0), 2.0}, {Location::latlon(20, 5), 6.0}};
  const auto fit = fit_mean(MeanKind::Constant, data);
  EXPECT_NEAR(fit.coefficients[0], 3.0, 1e-14);
  EXPECT_EQ(fit.coefficients[1], 0.0);
}

TEST(Mean, TwoLatitudesRankDeficient) {
  std::vector<Observation> data;
  for (double lon : {0.0, 30.0, 60.0, 90.0}) {
    data.push_back({Location::latlon(10, lon), 1.0});
    data.push_back({Location::latlon(-30, lon), 2.0});
  }
  EXPECT_THROW(fit_mean(MeanKind::HarmonicLatitude, data), InvalidArgument);
  EXPECT_NO_THROW(fit_mean(MeanKind::Constant, data));
  EXPECT_THROW(fit_mean(MeanKind::Constant, std::vector<Observation>{}), InvalidArgument);
}

TEST(Mean, KindNames) {
  for (auto k : {MeanKind::Zero, MeanKind::Constant, MeanKind::HarmonicLatitude})
    EXPECT_EQ(mean_kind_from_string(to_string(k)), k);
  EXPECT_THROW(mean_kind_from_string("linear"), InvalidArgument);
}

TEST(Simulate, SingleLocationVariance) {
  const Model m = exp_gc_earth(1.0, 1000.0);
  const std::vector<Location> one{Location::latlon(10, 20)};
  double s = 0, ss = 0;
  const int n = 100000;
  for (int seed = 0; seed < n; ++seed) {
    const double v = simulate(m, one, MeanModel::zero(), static_cast<std::uint64_t>(seed)).values[0];
    s += v;
    ss += v * v;
  }
  const double var = (ss - s * s / n) / (n - 1);
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
}

TEST(Simulate, PerfectCorrelationGivesEqualValues) {
  // cos(2 theta) is 1 at antipodal points of the unit circle
  const Model m = CovarianceModel(Family::Cosine, Metric::GreatCircle, Sphere::unit_circle(), {1.0, 2.0});
  const std::vector<Location> locs{Location::angle(0.0), Location::angle(kPi)};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = simulate(m, locs, MeanModel::zero(), seed);
    // only the smallest jitter level separates the two values
    EXPECT_NEAR(r.values[0], r.values[1], 1e-5);
    EXPECT_GT(r.jitter, 0.0);
  }
}

TEST(Simulate, EmpiricalCovarianceMatchesModel) {
  const Model m = exp_gc_earth(2.0, 1500.0);
  const std::vector<Location> locs{Location::latlon(0, 0), Location::latlon(5, 5), Location::latlon(-10, 20),
                                   Location::latlon(30, -40), Location::latlon(60, 100)};
  const FieldSampler sampler(m, locs);
  const int n = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  for (int rep = 0; rep < n; ++rep) {
    RandomStream rng(77, static_cast<std::uint64_t>(rep));
    const Eigen::VectorXd v = sampler.draw(rng);
    acc += v * v.transpose();
  }
  acc /= n;
  const Eigen::MatrixXd c = covariance_matrix(m, locs);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double se = std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / n);
      EXPECT_LE(std::abs(acc(i, j) - c(i, j)), 3 * se) << i << "," << j;
    }
}

TEST(Simulate, ReproducibleFromSeed) {
  const Model m = exp_gc_earth(1.0, 2000.0);
  std::vector<Location> locs;
  for (double lon = -170; lon <= 180; lon += 10) locs.push_back(Location::latlon(lon / 4, lon));
  const auto a = simulate(m, locs, MeanModel::zero(), 99);
  const auto b = simulate(m, locs, MeanModel::zero(), 99);
  const auto c = simulate(m, locs, MeanModel::zero(), 100);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_EQ(a.seed, 99u);
}

TEST(Simulate, MeanIsAddedExactly) {
  const Model m = exp_gc_earth(1.0, 2000.0);
  std::vector<Location> locs;
  for (double lat = -60; lat <= 60; lat += 15) locs.push_back(Location::latlon(lat, lat * 2));
  const auto mean = MeanModel::harmonic(10.0, -2.0, 0.75);
  const auto zero = simulate(m, locs, MeanModel::zero(), 5);
  const auto with = simulate(m, locs, mean, 5);
  for (std::size_t i = 0; i < locs.size(); ++i) EXPECT_EQ(with.values[i], mean(locs[i]) + zero.values[i]);
}

TEST(Simulate, EmptyLocationsRejected) {
  EXPECT_THROW(simulate(exp_gc_earth(1, 1), std::vector<Location>{}, MeanModel::zero(), 1), InvalidArgument);
}

TEST(Simulate, InvalidModelFailsToFactorOnDenseSet) {
  // cos(2 theta / r) has a negative Legendre coefficient on the sphere
  const Model m = CovarianceModel(Family::Cosine, Metric::GreatCircle, kEarth, {1.0, 2.0});
  std::vector<Location> locs;
  RandomStream rng(3);
  for (int i = 0; i < 200; ++i)
    locs.push_back(Location::latlon(rad2deg(std::asin(rng.uniform(-1, 1))), rng.uniform(-179.9, 180)));
  EXPECT_THROW(simulate(m, locs, MeanModel::zero(), 1), FactorizationError);
}

TEST(Covariance, JitterScheduleEscalates) {
  Eigen::MatrixXd c(2, 2);
  c << 1, 1, 1, 1;
  CholeskyFactor f;
  ASSERT_TRUE(try_cholesky(c, 1.0, f));
  EXPECT_EQ(f.jitter, 1e-12);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  EXPECT_FALSE(try_cholesky(bad, 1.0, f));
  EXPECT_THROW(cholesky_with_jitter(bad, 1.0), FactorizationError);
}
