#include <gtest/gtest.h>

#include <sstream>

#include "sphcov/grid.hpp"
#include "sphcov/rng.hpp"

using namespace sphcov;

namespace {

GridDataset parse(const std::string& text, Transform t = Transform::None) {
  std::istringstream in(text);
  return load_grid(in, t, "toy.csv");
}

std::string dump(const GridDataset& g) {
  std::ostringstream out;
  save_grid(out, g);
  return out.str();
}

}  // namespace

TEST(Grid, TwoByTwoToy) {
  const auto g = parse("lat\\lon,0,90\n-10,1,2\n10,3,4\n");
  EXPECT_EQ(g.size(), 4u);
  EXPECT_EQ(g.latitudes, (std::vector<double>{-10, 10}));
  EXPECT_EQ(g.longitudes, (std::vector<double>{0, 90}));
  EXPECT_EQ(g.values(1, 0), 3.0);
  EXPECT_EQ(g.transform, Transform::None);
  const auto obs = g.observations();
  ASSERT_EQ(obs.size(), 4u);
  EXPECT_EQ(obs[1].location, Location::latlon(-10, 90));
  EXPECT_EQ(obs[1].value, 2.0);
}

TEST(Grid, SqrtTransform) {
  const auto g = parse("lat\\lon,0\n0,4\n", Transform::Sqrt);
  EXPECT_EQ(g.values(0, 0), 2.0);
  EXPECT_EQ(g.transform, Transform::Sqrt);
}

TEST(Grid, NegativeUnderSqrtRejected) {
  EXPECT_THROW(parse("lat\\lon,0,1\n0,4,-1\n", Transform::Sqrt), ConfigError);
  EXPECT_NO_THROW(parse("lat\\lon,0,1\n0,4,-1\n"));
}

TEST(Grid, DoubleSqrtRejected) {
  EXPECT_THROW(parse("# transform: sqrt\nlat\\lon,0\n0,4\n", Transform::Sqrt), ConfigError);
  EXPECT_EQ(parse("# transform: sqrt\nlat\\lon,0\n0,4\n").transform, Transform::Sqrt);
}

TEST(Grid, MalformedInputs) {
  EXPECT_THROW(parse(""), ConfigError);
  EXPECT_THROW(parse("lat\\lon\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,a,b\n0,1,2\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n0,1\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n0,1,2,3\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n0,1,nan\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n0,1,\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n10,1,2\n0,1,2\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,90\n95,1,2\n"), ConfigError);
  EXPECT_THROW(parse("lat\\lon,0,400\n0,1,2\n"), ConfigError);
  EXPECT_THROW(parse("# transform: log\nlat\\lon,0\n0,1\n"), ConfigError);
  EXPECT_THROW(load_grid(std::string("/nonexistent/grid.csv")), ConfigError);
}

TEST(Grid, ErrorsCarryLineNumbers) {
  try {
    parse("lat\\lon,0,90\n0,1,2\n5,1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "toy.csv:3");
  }
}

TEST(Grid, LongitudesWrap) {
  const auto g = parse("lat\\lon,0,180,270,357.5\n0,1,2,3,4\n");
  const auto obs = g.observations();
  EXPECT_DOUBLE_EQ(obs[1].location.lon_deg(), 180.0);
  EXPECT_DOUBLE_EQ(obs[2].location.lon_deg(), -90.0);
  EXPECT_DOUBLE_EQ(obs[3].location.lon_deg(), -2.5);
}

TEST(Grid, PoleRowsCollapse) {
  const auto g = GridDataset::regular(30.0);
  EXPECT_EQ(g.latitudes.size(), 7u);
  EXPECT_EQ(g.longitudes.size(), 12u);
  EXPECT_EQ(g.longitudes.back(), 180.0);
  EXPECT_EQ(g.observations().size(), 5u * 12u + 2u);
}

TEST(Grid, CellCentredAxes) {
  const auto g = GridDataset::cell_centred(64, 128);
  EXPECT_DOUBLE_EQ(g.latitudes.front(), -90 + 180.0 / 128);
  EXPECT_DOUBLE_EQ(g.longitudes.back(), 180 - 360.0 / 256);
  EXPECT_EQ(g.observations().size(), 8192u);
}

TEST(GridProperty, SaveLoadRoundTrip) {
  RandomStream rng(61);
  GridDataset g = GridDataset::regular(2.5);
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) g.values(i, j) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  g.provenance = "synthetic, seed 61";
  g.transform = Transform::Sqrt;
  const auto text = dump(g);
  const auto back = parse(text);
  EXPECT_TRUE(back == g);
  EXPECT_EQ(dump(back), text);
}
