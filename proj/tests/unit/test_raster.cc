#include <gtest/gtest.h>

#include "tlapse/raster.h"

namespace tlapse {
namespace {

GrayImage ramp(int w, int h) {
  GrayImage g(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g(x, y) = 10.0 * y + x;
  return g;
}

TEST(Raster, IndexIsRowMajor) {
  Raster<int> r(4, 3, 7);
  EXPECT_EQ(r.size(), 12u);
  EXPECT_EQ(r.index(1, 2), 9u);
  r(1, 2) = 5;
  EXPECT_EQ(r[9], 5);
  EXPECT_TRUE(r.contains(3, 2));
  EXPECT_FALSE(r.contains(4, 0));
  EXPECT_FALSE(r.contains(0, -1));
}

TEST(Bilinear, ReproducesLinearFunction) {
  const GrayImage g = ramp(5, 4);
  EXPECT_DOUBLE_EQ(*sample_bilinear(g, 2.0, 1.0), 12.0);
  EXPECT_NEAR(*sample_bilinear(g, 1.25, 2.5), 26.25, 1e-12);
  EXPECT_NEAR(*sample_bilinear(g, 4.0, 3.0), 34.0, 1e-12);
}

TEST(Bilinear, HandCell) {
  GrayImage g(2, 2);
  g(0, 0) = 0.0;
  g(1, 0) = 1.0;
  g(0, 1) = 2.0;
  g(1, 1) = 7.0;
  // (1-.3)(1-.6)*0 + .3*.4*1 + .7*.6*2 + .3*.6*7
  EXPECT_NEAR(*sample_bilinear(g, 0.3, 0.6), 0.12 + 0.84 + 1.26, 1e-12);
}

TEST(Bilinear, OutsideIsNullopt) {
  const GrayImage g = ramp(5, 4);
  EXPECT_FALSE(sample_bilinear(g, -0.01, 1.0));
  EXPECT_FALSE(sample_bilinear(g, 4.01, 1.0));
  EXPECT_FALSE(sample_bilinear(g, 1.0, 3.5));
}

TEST(Bilinear, ClampedVariant) {
  const GrayImage g = ramp(5, 4);
  EXPECT_DOUBLE_EQ(sample_bilinear_clamped(g, -3.0, -1.0), 0.0);
  EXPECT_DOUBLE_EQ(sample_bilinear_clamped(g, 9.0, 9.0), 34.0);
  EXPECT_NEAR(sample_bilinear_clamped(g, 2.5, -2.0), 2.5, 1e-12);
}

TEST(Bilinear, RgbMatchesPerChannel) {
  RgbImage im(3, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) im(x, y) = Rgb(x, y, x * y);
  const Rgb c = *sample_bilinear(im, 1.5, 0.5);
  EXPECT_NEAR(c.x(), 1.5, 1e-12);
  EXPECT_NEAR(c.y(), 0.5, 1e-12);
  EXPECT_NEAR(c.z(), 0.75, 1e-12);
  EXPECT_FALSE(sample_bilinear(im, 2.5, 0.0));
}

TEST(ToGray, LumaWeights) {
  RgbImage im(2, 1);
  im(0, 0) = Rgb(1, 1, 1);
  im(1, 0) = Rgb(1, 0, 0);
  const GrayImage g = to_gray(im);
  EXPECT_NEAR(g(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(g(1, 0), 0.299, 1e-12);
}

TEST(Downsample, AveragesBlocksAndDropsRemainder) {
  RgbImage im(5, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) im(x, y) = Rgb::Constant(10.0 * y + x);
  const RgbImage d = downsample(im, 2);
  ASSERT_EQ(d.width(), 2);
  ASSERT_EQ(d.height(), 2);
  EXPECT_NEAR(d(0, 0).x(), 5.5, 1e-12);
  EXPECT_NEAR(d(1, 1).x(), 27.5, 1e-12);
  EXPECT_EQ(downsample(im, 1), im);
}

}  // namespace
}  // namespace tlapse
