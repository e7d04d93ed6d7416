#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "test_util.h"
#include "tlapse/camera.h"
#include "tlapse/depthmap.h"

namespace tlapse {
namespace {

using test::expect_error;

Camera grid_camera(int w, int h, double f) {
  Camera c;
  c.focal = {f, f};
  c.principal_point = {(w - 1) / 2.0, (h - 1) / 2.0};
  c.width = w;
  c.height = h;
  return c;
}

// World-to-camera rotation whose optical axis is `forward`.
Eigen::Matrix3d looking_along(const Eigen::Vector3d& forward) {
  const Eigen::Vector3d z = forward.normalized();
  Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z);
  if (x.norm() < 1e-6) x = Eigen::Vector3d::UnitX();
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

TEST(PlaneSet, InverseDepthSpacing) {
  const PlaneSet p(1.0, 10.0, 10);
  EXPECT_DOUBLE_EQ(p.depth(0), 10.0);
  EXPECT_NEAR(p.depth(9), 1.0, 1e-12);
  const auto d = p.depths();
  for (int k = 1; k < 10; ++k) {
    EXPECT_LT(d[k], d[k - 1]);
    EXPECT_NEAR(1.0 / d[k] - 1.0 / d[k - 1], (1.0 - 0.1) / 9.0, 1e-12);
  }
  for (double depth : {1.5, 3.0, 7.25}) EXPECT_NEAR(p.depth(p.disparity(depth)), depth, 1e-12);
}

TEST(PlaneSet, Degenerate) {
  expect_error(ErrorCode::kDegenerateRange, [] { PlaneSet(2.0, 2.0, 8); });
  expect_error(ErrorCode::kDegenerateRange, [] { PlaneSet(3.0, 2.0, 8); });
  expect_error(ErrorCode::kDegenerateRange, [] { PlaneSet(0.0, 2.0, 8); });
  expect_error(ErrorCode::kDegenerateRange, [] { PlaneSet(1.0, 2.0, 1); });
}

TEST(Depthmap, BilinearDisparityClamped) {
  Depthmap d{Raster<double>(2, 2), PlaneSet(1.0, 2.0, 4)};
  d.values(0, 0) = 0.0;
  d.values(1, 0) = 1.0;
  d.values(0, 1) = 2.0;
  d.values(1, 1) = 3.0;
  EXPECT_DOUBLE_EQ(d.disparity_at({0.5, 0.5}), 1.5);
  EXPECT_DOUBLE_EQ(d.disparity_at({0.25, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(d.disparity_at({-3.0, 5.0}), 2.0);
}

TEST(Reproject, IdentityIsIdentity) {
  const Camera cam = grid_camera(12, 9, 10.0);
  Depthmap d{Raster<double>(12, 9), PlaneSet(2.0, 20.0, 16)};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 15.0);
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = u(rng);
  const ReprojectedDepthmap r = reproject_depthmap(d, cam, cam, d.planes);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    ASSERT_TRUE(r.valid[i]);
    EXPECT_NEAR(r.values[i], d.values[i], 1e-9);
    EXPECT_EQ(r.source[i], static_cast<std::int32_t>(i));
  }
}

TEST(Reproject, ZBufferKeepsNearest) {
  const Camera src = grid_camera(2, 1, 10.0);
  const PlaneSet planes(1.0, 20.0, 32);
  Depthmap d{Raster<double>(2, 1), planes};
  d.values(0, 0) = planes.disparity(5.0);
  d.values(1, 0) = planes.disparity(8.0);
  const Eigen::Vector3d p1 = backproject(src, {0.0, 0.0}, 5.0);
  const Eigen::Vector3d p2 = backproject(src, {1.0, 0.0}, 8.0);
  // Target looks down the line through both points from the p1 side.
  Camera tgt = grid_camera(3, 3, 10.0);
  tgt.center = p1 - 2.0 * (p2 - p1).normalized();
  tgt.rotation = looking_along(p2 - p1);
  const PlaneSet tgt_planes(0.5, 20.0, 32);
  const ReprojectedDepthmap r = reproject_depthmap(d, src, tgt, tgt_planes);
  int valid = 0;
  for (std::size_t i = 0; i < r.valid.size(); ++i) valid += r.valid[i];
  EXPECT_EQ(valid, 1);
  ASSERT_TRUE(r.valid(1, 1));
  EXPECT_EQ(r.source(1, 1), 0);
  EXPECT_NEAR(tgt_planes.depth(r.values(1, 1)), 2.0, 1e-9);
}

TEST(Reproject, NoOverlapAllInvalid) {
  const Camera src = grid_camera(8, 8, 10.0);
  Depthmap d{Raster<double>(8, 8, 4.0), PlaneSet(1.0, 10.0, 8)};
  Camera away = src;
  away.rotation = axis_angle({0.0, 1.0, 0.0}, M_PI);
  const ReprojectedDepthmap r = reproject_depthmap(d, src, away, d.planes);
  for (std::size_t i = 0; i < r.valid.size(); ++i) {
    EXPECT_FALSE(r.valid[i]);
    EXPECT_EQ(r.source[i], -1);
  }
}

TEST(Reproject, DimensionMismatch) {
  const Camera src = grid_camera(8, 8, 10.0);
  Depthmap d{Raster<double>(4, 4, 1.0), PlaneSet(1.0, 10.0, 8)};
  expect_error(ErrorCode::kDimensionMismatch, [&] { reproject_depthmap(d, src, src, d.planes); });
}

// Brute force: every colliding group keeps the minimum target depth.
TEST(Reproject, ZBufferDominanceRandom) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Camera src = grid_camera(10, 8, 8.0);
    const PlaneSet planes(1.0, 6.0, 16);
    Depthmap d{Raster<double>(10, 8), planes};
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = 15.0 * u(rng);
    Camera tgt = grid_camera(6, 5, 4.0);
    tgt.center = {0.8 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5), -0.5 * u(rng)};
    tgt.rotation = axis_angle({0.0, 1.0, 0.0}, 0.2 * (u(rng) - 0.5));
    const ZBuffer zb = render_zbuffer(d, src, tgt);
    Raster<double> best(6, 5, std::numeric_limits<double>::infinity());
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 10; ++x) {
        const auto p = try_project(tgt, backproject(src, {double(x), double(y)}, d.depth(x, y)));
        if (!p) continue;
        const long a = std::lround(p->pixel.x()), b = std::lround(p->pixel.y());
        if (a < 0 || b < 0 || a >= 6 || b >= 5) continue;
        best(a, b) = std::min(best(a, b), p->depth);
      }
    }
    for (std::size_t i = 0; i < best.size(); ++i) {
      if (std::isinf(best[i])) {
        EXPECT_EQ(zb.source[i], -1);
      } else {
        EXPECT_DOUBLE_EQ(zb.depth[i], best[i]);
      }
    }
  }
}

}  // namespace
}  // namespace tlapse
