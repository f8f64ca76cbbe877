#include <gtest/gtest.h>

#include "tomo/error.hpp"
#include "tomo/layers.hpp"

using namespace tomo;

TEST(LayerGrid, EightyLayerSpacing) {
  LayerGrid g;
  EXPECT_DOUBLE_EQ(g.spacing(), 0.06875);
  const auto d = g.depths();
  ASSERT_EQ(d.size(), 80u);
  EXPECT_DOUBLE_EQ(d.front(), 0.06875);
  EXPECT_DOUBLE_EQ(d.back(), 5.5);
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_NEAR(d[k] - d[k - 1], 0.06875, 1e-12);
}

TEST(LayerGrid, RejectsBadGrids) {
  EXPECT_THROW((LayerGrid{0, 0.0, 5.5}.validate()), ConfigurationError);
  EXPECT_THROW((LayerGrid{10, 5.5, 0.0}.validate()), ConfigurationError);
}

TEST(AccommodationPlanes, CoincideWithLayersPlusOrigin) {
  LayerGrid g{10, 0.0, 5.5};
  const auto planes = accommodation_planes(0.0, 5.5, 11);
  const auto layers = g.depths();
  EXPECT_DOUBLE_EQ(planes.front(), 0.0);
  for (std::size_t k = 0; k < layers.size(); ++k) EXPECT_NEAR(planes[k + 1], layers[k], 1e-12);
}

TEST(NearestLayer, TiesAndClamping) {
  const std::vector<double> d = {1.0, 2.0, 3.0};
  EXPECT_EQ(nearest_layer(2.0, d), 1u);
  EXPECT_EQ(nearest_layer(1.5, d), 0u);  // midpoint goes to the lower index
  EXPECT_EQ(nearest_layer(2.5, d), 1u);
  EXPECT_EQ(nearest_layer(2.51, d), 2u);
  EXPECT_EQ(nearest_layer(-4.0, d), 0u);
  EXPECT_EQ(nearest_layer(9.9, d), 2u);
}

TEST(NearestLayer, OnGridRoundTrip) {
  const auto d = LayerGrid{}.depths();
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_EQ(nearest_layer(d[k], d), k);
}
