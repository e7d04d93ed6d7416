#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tlapse/camera.h"
#include "tlapse/cost_volume.h"
#include "tlapse/raster.h"

namespace tlapse {

// Textured background plane z = background_depth + background_slope * x plus
// an optional axis-aligned box that exists for normalized time >= appear_time.
struct SyntheticSceneSpec {
  double background_depth = 12.0;
  double background_slope = 0.2;
  double background_frequency = 8.0;  // noise lattice cells per world unit

  bool has_box = true;
  Eigen::Vector3d box_center{0.0, 0.1, 3.0};
  Eigen::Vector3d box_size{1.0, 0.8, 0.6};
  double appear_time = 0.0;  // tau, normalized to the timestamp span
  double box_frequency = 36.0;
  double box_yaw_deg = 0.0;
  double texture_contrast = 0.1;

  std::uint64_t seed = 1;  // texture, poses, noise
  int photo_count = 60;
  int width = 160;
  int height = 120;
  double focal = 200.0;        // reference (output) camera
  double photo_focal = 180.0;  // input photos
  Eigen::Vector3d look_at{0.0, 0.0, 5.0};

  double position_jitter = 1.0;   // world units
  double rotation_jitter = 0.01;  // radians
  std::pair<double, double> gain_range{0.9, 1.1};
  std::pair<double, double> bias_range{-0.03, 0.03};
  double outlier_probability = 0.2;
  std::pair<double, double> time_span{0.0, 1000.0};
  int point_count = 1000;

  // Throws InvalidSpec.
  void validate() const;
};

std::string spec_to_string(const SyntheticSceneSpec& spec);
SyntheticSceneSpec spec_from_string(const std::string& text);

struct SurfaceHit {
  double depth;  // camera-frame z
  Eigen::Vector3d point;
  Rgb albedo;
  bool on_box;
};

class SyntheticScene {
 public:
  explicit SyntheticScene(SyntheticSceneSpec spec);

  const SyntheticSceneSpec& spec() const { return spec_; }
  bool box_present(double timestamp) const;
  Camera reference_camera() const;

  std::optional<SurfaceHit> trace(const Camera& camera, const Eigen::Vector2d& pixel,
                                  double timestamp) const;
  // Noise-free render and camera-frame depth (+inf where nothing is hit).
  RgbImage render(const Camera& camera, double timestamp) const;
  Raster<double> depth(const Camera& camera, double timestamp) const;

 private:
  Rgb texture(const Eigen::Vector2d& uv, double frequency, std::uint64_t salt,
              const Rgb& base) const;

  SyntheticSceneSpec spec_;
};

struct SyntheticDataset {
  SyntheticSceneSpec spec;
  Camera reference;
  std::vector<PosedImage> photos;
  std::vector<SparsePoint> points;
};

SyntheticDataset generate_synthetic_scene(const SyntheticSceneSpec& spec);

// Writes images/photo_%04d.png, gt_depth/depth_%04d.pfm, manifest.json and
// scene.json into `dir`.
void write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);

}  // namespace tlapse
