#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tlapse/io.h"

namespace tlapse {
namespace {

using test::expect_error;

TEST(Png, RoundTripOfQuantizedValues) {
  const auto dir = test::temp_dir("png");
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> byte(0, 255);
  RgbImage im(7, 5);
  for (std::size_t i = 0; i < im.size(); ++i) {
    im[i] = Rgb(byte(rng), byte(rng), byte(rng)) / 255.0;
  }
  write_png(dir / "a.png", im);
  const RgbImage back = read_png(dir / "a.png");
  ASSERT_EQ(back.width(), 7);
  ASSERT_EQ(back.height(), 5);
  for (std::size_t i = 0; i < im.size(); ++i) {
    EXPECT_NEAR((back[i] - im[i]).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(Png, RoundsHalfUpAndClamps) {
  const auto dir = test::temp_dir("png_round");
  RgbImage im(4, 1);
  im(0, 0) = Rgb::Constant(0.5 / 255.0);          // -> 1
  im(1, 0) = Rgb::Constant(0.49 / 255.0);         // -> 0
  im(2, 0) = Rgb::Constant(2.0);                  // -> 255
  im(3, 0) = Rgb::Constant(-1.0);                 // -> 0
  write_png(dir / "r.png", im);
  const RgbImage back = read_png(dir / "r.png");
  EXPECT_DOUBLE_EQ(back(0, 0).x(), 1.0 / 255.0);
  EXPECT_DOUBLE_EQ(back(1, 0).x(), 0.0);
  EXPECT_DOUBLE_EQ(back(2, 0).x(), 1.0);
  EXPECT_DOUBLE_EQ(back(3, 0).x(), 0.0);
}

TEST(Png, MissingFileIsIo) {
  expect_error(ErrorCode::kIo, [] { read_png("/nonexistent/x.png"); });
}

TEST(Pfm, RoundTripAndRowOrder) {
  const auto dir = test::temp_dir("pfm");
  Raster<double> r(3, 2);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.25 * i - 0.5;
  write_pfm(dir / "d.pfm", r);
  const Raster<double> back = read_pfm(dir / "d.pfm");
  EXPECT_EQ(back, r);

  // bottom row first, little-endian float32
  const std::string bytes = read_text(dir / "d.pfm");
  const std::string header = "Pf\n3 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + header.size(), 4);
  EXPECT_FLOAT_EQ(first, static_cast<float>(r(0, 1)));
  EXPECT_EQ(bytes.size(), header.size() + 6 * 4);
}

TEST(Pfm, GarbageIsIo) {
  const auto dir = test::temp_dir("pfm_bad");
  write_text(dir / "bad.pfm", "P6\n1 1\n255\nabc");
  expect_error(ErrorCode::kIo, [&] { read_pfm(dir / "bad.pfm"); });
}

Manifest sample_manifest() {
  Manifest m;
  for (int i = 0; i < 3; ++i) {
    ManifestPhoto p;
    p.image = "images/photo_000" + std::to_string(i) + ".png";
    p.camera.focal = {180.0 + i, 180.5};
    p.camera.principal_point = {79.5, 59.5};
    p.camera.center = {0.1 * i, -0.3, 1.0 / 3.0};
    p.camera.width = 160;
    p.camera.height = 120;
    p.timestamp = 12.5 * i + 0.1;
    m.photos.push_back(p);
  }
  m.points.push_back({Eigen::Vector3d(1.0, 2.0, 1e-17), {0, 2}});
  m.points.push_back({Eigen::Vector3d(-0.7, 0.0, 12.000000001), {1}});
  m.reference = m.photos[1].camera;
  return m;
}

TEST(Manifest, WriteReadWriteIsByteIdentical) {
  const std::string a = manifest_to_string(sample_manifest());
  const Manifest back = manifest_from_string(a);
  EXPECT_EQ(manifest_to_string(back), a);
  ASSERT_EQ(back.photos.size(), 3u);
  EXPECT_EQ(back.photos[2].image, "images/photo_0002.png");
  EXPECT_DOUBLE_EQ(back.photos[2].camera.center.z(), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(back.points[1].position.z(), 12.000000001);
  EXPECT_EQ(back.points[0].observers, (std::vector<int>{0, 2}));
  ASSERT_TRUE(back.reference);
  EXPECT_DOUBLE_EQ(back.reference->focal.x(), 181.0);
}

TEST(Manifest, FileRoundTripAndLoadPhotos) {
  const auto dir = test::temp_dir("manifest");
  Manifest m = sample_manifest();
  std::filesystem::create_directories(dir / "images");
  for (std::size_t i = 0; i < m.photos.size(); ++i) {
    m.photos[i].camera.width = 4;
    m.photos[i].camera.height = 2;
    write_png(dir / m.photos[i].image, RgbImage(4, 2, Rgb::Constant(i / 255.0)));
  }
  write_manifest(dir / "manifest.json", m);
  const Manifest back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(manifest_to_string(back), manifest_to_string(m));
  const auto photos = load_photos(back, dir);
  ASSERT_EQ(photos.size(), 3u);
  EXPECT_DOUBLE_EQ(photos[2].image(3, 1).y(), 2.0 / 255.0);
  EXPECT_DOUBLE_EQ(photos[1].timestamp, m.photos[1].timestamp);
}

TEST(Manifest, MalformedIsIo) {
  expect_error(ErrorCode::kIo, [] { manifest_from_string("{not json"); });
}

}  // namespace
}  // namespace tlapse
