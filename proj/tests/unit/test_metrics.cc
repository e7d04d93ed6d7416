#include <cmath>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tlapse/metrics.h"

namespace tlapse {
namespace {

using test::expect_error;

TEST(Psnr, IdenticalIsCapped) {
  RgbImage a(4, 3, Rgb(0.2, 0.5, 0.7));
  EXPECT_DOUBLE_EQ(psnr(a, a), 99.0);
}

TEST(Psnr, UniformOffset) {
  RgbImage a(4, 3, Rgb(0.2, 0.5, 0.7));
  RgbImage b(4, 3, Rgb(0.3, 0.6, 0.8));
  EXPECT_NEAR(mse(a, b), 0.01, 1e-12);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Psnr, SinglePixelBrute) {
  RgbImage a(2, 2, Rgb::Zero());
  RgbImage b = a;
  b(1, 0) = Rgb(0.5, 0.0, 0.0);
  const double e = 0.25 / 12.0;
  EXPECT_NEAR(mse(a, b), e, 1e-15);
  EXPECT_NEAR(psnr(a, b), -10.0 * std::log10(e), 1e-9);
}

TEST(Psnr, DimensionMismatch) {
  expect_error(ErrorCode::kDimensionMismatch,
               [] { mse(RgbImage(2, 2), RgbImage(2, 3)); });
  expect_error(ErrorCode::kDimensionMismatch,
               [] { psnr(RgbImage(2, 2), RgbImage(3, 2)); });
}

TEST(DepthError, ConstantOffset) {
  Raster<double> a(5, 4, 3.0), b(5, 4, 4.0);
  const DepthError e = depth_error(a, b);
  EXPECT_NEAR(e.rmse, 1.0, 1e-12);
  EXPECT_NEAR(e.trimmed_rmse, 1.0, 1e-12);
  EXPECT_EQ(e.count, 20u);
}

TEST(DepthError, TrimDropsWorst) {
  Raster<double> a(10, 2, 0.0), b(10, 2, 0.0);
  a(3, 1) = 10.0;  // one outlier of 20
  const DepthError e = depth_error(a, b, {}, 0.95);
  EXPECT_NEAR(e.rmse, std::sqrt(100.0 / 20.0), 1e-12);
  EXPECT_NEAR(e.trimmed_rmse, 0.0, 1e-12);
}

TEST(DepthError, MaskRestrictsPixels) {
  Raster<double> a(3, 1, 0.0), b(3, 1, 0.0);
  a(0, 0) = 2.0;
  a(2, 0) = 100.0;
  Raster<std::uint8_t> mask(3, 1, 1);
  mask(2, 0) = 0;
  const DepthError e = depth_error(a, b, mask, 1.0);
  EXPECT_EQ(e.count, 2u);
  EXPECT_NEAR(e.rmse, std::sqrt(2.0), 1e-12);
}

TEST(DepthError, DimensionMismatch) {
  expect_error(ErrorCode::kDimensionMismatch,
               [] { depth_error(Raster<double>(2, 2), Raster<double>(2, 1)); });
  expect_error(ErrorCode::kDimensionMismatch, [] {
    depth_error(Raster<double>(2, 2), Raster<double>(2, 2), Raster<std::uint8_t>(1, 1));
  });
}

}  // namespace
}  // namespace tlapse
