#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "test_util.h"
#include "tlapse/camera.h"

namespace tlapse {
namespace {

using test::expect_error;

Camera simple_camera() {
  Camera c;
  c.focal = {100.0, 100.0};
  c.principal_point = {50.0, 50.0};
  c.width = 101;
  c.height = 101;
  return c;
}

TEST(Camera, ProjectOffAxisPoint) {
  const Projection p = project(simple_camera(), {1.0, 0.0, 10.0});
  EXPECT_DOUBLE_EQ(p.pixel.x(), 60.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 50.0);
  EXPECT_DOUBLE_EQ(p.depth, 10.0);
}

TEST(Camera, ProjectOnAxis) {
  const Projection p = project(simple_camera(), {0.0, 0.0, 5.0});
  EXPECT_DOUBLE_EQ(p.pixel.x(), 50.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 50.0);
  EXPECT_DOUBLE_EQ(p.depth, 5.0);
}

TEST(Camera, ProjectBehind) {
  expect_error(ErrorCode::kBehindCamera, [] { project(simple_camera(), {0.0, 0.0, -1.0}); });
  expect_error(ErrorCode::kBehindCamera, [] { project(simple_camera(), {1.0, 1.0, 0.0}); });
  EXPECT_FALSE(try_project(simple_camera(), {0.0, 0.0, -1.0}).has_value());
}

TEST(Camera, BackprojectInvertsExample) {
  const Eigen::Vector3d q = backproject(simple_camera(), {60.0, 50.0}, 10.0);
  EXPECT_NEAR((q - Eigen::Vector3d(1.0, 0.0, 10.0)).norm(), 0.0, 1e-12);
}

TEST(Camera, BackprojectNonPositiveDepth) {
  expect_error(ErrorCode::kNonPositiveDepth, [] { backproject(simple_camera(), {1.0, 1.0}, 0.0); });
  expect_error(ErrorCode::kNonPositiveDepth, [] { backproject(simple_camera(), {1.0, 1.0}, -2.0); });
}

TEST(Camera, RoundTripRandomPoses) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Camera c = simple_camera();
    c.focal = {80.0 + 40.0 * std::abs(u(rng)), 80.0 + 40.0 * std::abs(u(rng))};
    c.rotation = axis_angle(Eigen::Vector3d(u(rng), u(rng), u(rng)), u(rng) * M_PI);
    c.center = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 5.0;
    const Eigen::Vector2d pixel(50.0 + 50.0 * u(rng), 50.0 + 50.0 * u(rng));
    const double depth = 0.5 + 20.0 * std::abs(u(rng));
    const Projection p = project(c, backproject(c, pixel, depth));
    EXPECT_LT((p.pixel - pixel).norm() / pixel.norm(), 1e-9);
    EXPECT_LT(std::abs(p.depth - depth) / depth, 1e-9);
  }
}

TEST(Camera, ScaledKeepsPixelCenterGeometry) {
  Camera c = simple_camera();
  c.width = 160;
  c.height = 120;
  c.principal_point = {79.5, 59.5};
  const Camera h = c.scaled(0.5);
  EXPECT_EQ(h.width, 80);
  EXPECT_EQ(h.height, 60);
  EXPECT_DOUBLE_EQ(h.focal.x(), 50.0);
  // Full-res pixel u maps to (u + 0.5) / 2 - 0.5.
  const Eigen::Vector3d q(0.3, -0.2, 4.0);
  const Eigen::Vector2d full = project(c, q).pixel;
  const Eigen::Vector2d half = project(h, q).pixel;
  EXPECT_NEAR(half.x(), (full.x() + 0.5) / 2 - 0.5, 1e-12);
  EXPECT_NEAR(half.y(), (full.y() + 0.5) / 2 - 0.5, 1e-12);
}

TEST(Camera, ValidateRejectsBadRotation) {
  Camera c = simple_camera();
  c.rotation(0, 0) = 2.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { c.validate(); });
  Camera m = simple_camera();
  m.rotation = -Eigen::Matrix3d::Identity();  // det -1
  expect_error(ErrorCode::kInvalidArgument, [&] { m.validate(); });
  Camera f = simple_camera();
  f.focal.x() = 0.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { f.validate(); });
  EXPECT_NO_THROW(simple_camera().validate());
}

TEST(CameraPath, StaticThreeViews) {
  const ViewSequence s = generate_camera_path(simple_camera(), {}, 3, {10.0, 20.0});
  ASSERT_EQ(s.size(), 3u);
  for (const Camera& v : s.views) {
    EXPECT_EQ(v.center, simple_camera().center);
    EXPECT_EQ(v.rotation, simple_camera().rotation);
  }
  EXPECT_DOUBLE_EQ(s.times[0], 10.0);
  EXPECT_DOUBLE_EQ(s.times[1], 15.0);
  EXPECT_DOUBLE_EQ(s.times[2], 20.0);
}

TEST(CameraPath, OrbitDegreePerView) {
  Camera ref = simple_camera();
  ref.rotation = axis_angle({0.2, 1.0, 0.1}, 0.3);
  ref.center = {0.5, -0.2, 0.1};
  PathSpec spec;
  spec.type = PathType::kOrbit;
  spec.pivot = ref.center + 3.0 * ref.optical_axis();
  spec.angle_deg = 10.0;
  const ViewSequence s = generate_camera_path(ref, spec, 11, {0.0, 1.0});
  for (int k = 0; k < 11; ++k) {
    const Camera& v = s.views[k];
    const Eigen::Matrix3d r = v.rotation;
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    const double angle = std::atan2(v.optical_axis().cross(ref.optical_axis()).norm(),
                                   v.optical_axis().dot(ref.optical_axis()));
    EXPECT_NEAR(angle * 180.0 / M_PI, static_cast<double>(k), 1e-7);
    // optical axis passes through the pivot, distance preserved
    const Eigen::Vector3d to_pivot = spec.pivot - v.center;
    EXPECT_NEAR(to_pivot.norm(), 3.0, 1e-9);
    EXPECT_LT(v.optical_axis().cross(to_pivot.normalized()).norm(), 1e-9);
    EXPECT_GT(v.optical_axis().dot(to_pivot), 0.0);
  }
  EXPECT_EQ(s.views[0].rotation, ref.rotation);
}

TEST(CameraPath, PushAndPull) {
  Camera ref = simple_camera();
  ref.rotation = axis_angle({1.0, 0.0, 0.0}, 0.2);
  PathSpec push;
  push.type = PathType::kPush;
  push.distance = 2.0;
  const ViewSequence s = generate_camera_path(ref, push, 2, {0.0, 1.0});
  EXPECT_LT((s.views[1].center - (ref.center + 2.0 * ref.optical_axis())).norm(), 1e-12);
  EXPECT_EQ(s.views[1].rotation, ref.rotation);
  PathSpec pull = push;
  pull.type = PathType::kPull;
  const ViewSequence p = generate_camera_path(ref, pull, 2, {0.0, 1.0});
  EXPECT_LT((p.views[1].center - (ref.center - 2.0 * ref.optical_axis())).norm(), 1e-12);
}

TEST(CameraPath, TimesLinearlySpaced) {
  const ViewSequence s = generate_camera_path(simple_camera(), {}, 20, {3.0, 1003.0});
  for (int j = 0; j < 20; ++j) {
    EXPECT_DOUBLE_EQ(s.times[j], 3.0 + j * 1000.0 / 19);
  }
}

TEST(CameraPath, ParseTypes) {
  EXPECT_EQ(parse_path_type("orbit"), PathType::kOrbit);
  EXPECT_EQ(parse_path_type("push"), PathType::kPush);
  EXPECT_EQ(parse_path_type("pull"), PathType::kPull);
  EXPECT_EQ(parse_path_type("static"), PathType::kStatic);
  EXPECT_EQ(to_string(PathType::kOrbit), "orbit");
  expect_error(ErrorCode::kUnknownPathType, [] { parse_path_type("spiral"); });
  expect_error(ErrorCode::kInvalidArgument,
               [] { generate_camera_path(simple_camera(), {}, 1, {0.0, 1.0}); });
}

TEST(Selection, IdenticalSelectedRotatedRejected) {
  const Camera ref = simple_camera();
  Camera flipped = ref;
  flipped.rotation = axis_angle({0.0, 1.0, 0.0}, M_PI);
  Camera far = ref;
  far.center = {5.0, 0.0, 0.0};
  const std::vector<Camera> cams{ref, flipped, far};
  const std::vector<double> times{0.0, 1.0, 2.0};
  const auto kept = select_image_indices(cams, times, ref, 10.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], 0u);
}

TEST(Selection, SortsChronologically) {
  const Camera ref = simple_camera();
  std::vector<PosedImage> photos(3);
  const double t[3] = {30.0, 10.0, 20.0};
  for (int i = 0; i < 3; ++i) {
    photos[i].camera = ref;
    photos[i].camera.center.x() = 0.01 * i;
    photos[i].timestamp = t[i];
  }
  const auto out = select_images(photos, ref, 10.0);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_DOUBLE_EQ(out[0].timestamp, 10.0);
  EXPECT_DOUBLE_EQ(out[1].timestamp, 20.0);
  EXPECT_DOUBLE_EQ(out[2].timestamp, 30.0);
}

TEST(Selection, ThresholdBoundaries) {
  const Camera ref = simple_camera();
  Camera tilted = ref;
  tilted.rotation = axis_angle({0.0, 1.0, 0.0}, 14.9 * M_PI / 180.0);
  Camera too_tilted = ref;
  too_tilted.rotation = axis_angle({0.0, 1.0, 0.0}, 15.1 * M_PI / 180.0);
  Camera near = ref;
  near.center = {0.99, 0.0, 0.0};
  Camera away = ref;
  away.center = {1.01, 0.0, 0.0};
  const std::vector<Camera> cams{tilted, too_tilted, near, away};
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
  const auto kept = select_image_indices(cams, times, ref, 10.0);  // rho = 1.0
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 2}));
}

TEST(Selection, EmptySelection) {
  Camera flipped = simple_camera();
  flipped.rotation = axis_angle({0.0, 1.0, 0.0}, M_PI);
  const std::vector<Camera> cams{flipped};
  const std::vector<double> times{0.0};
  expect_error(ErrorCode::kEmptySelection,
               [&] { select_image_indices(cams, times, simple_camera(), 10.0); });
}

}  // namespace
}  // namespace tlapse
