#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tlapse/raster.h"

namespace tlapse {

// Pinhole camera. `rotation` maps world to camera coordinates:
// x_cam = rotation * (x_world - center). Camera looks along +z, image x to
// the right and image y down; pixel centers sit at integer coordinates.
struct Camera {
  Eigen::Vector2d focal{1.0, 1.0};
  Eigen::Vector2d principal_point{0.0, 0.0};
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int width = 1;
  int height = 1;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * (world - center);
  }
  Eigen::Vector3d optical_axis() const { return rotation.row(2).transpose(); }

  bool in_bounds(const Eigen::Vector2d& pixel) const {
    return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() <= width - 1 &&
           pixel.y() <= height - 1;
  }

  // Same pose, raster resampled by `factor` (0.5 halves the resolution).
  Camera scaled(double factor) const;

  // Throws InvalidArgument when the rotation is not a proper rotation or the
  // intrinsics are non-positive.
  void validate() const;
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};

// Throws BehindCamera when the camera-frame z is <= 0.
Projection project(const Camera& camera, const Eigen::Vector3d& point);
std::optional<Projection> try_project(const Camera& camera,
                                      const Eigen::Vector3d& point);

// Throws NonPositiveDepth for depth <= 0.
Eigen::Vector3d backproject(const Camera& camera, const Eigen::Vector2d& pixel,
                            double depth);

struct PosedImage {
  Camera camera;
  RgbImage image;
  double timestamp = 0.0;
};

struct ViewSequence {
  std::vector<Camera> views;
  std::vector<double> times;

  std::size_t size() const { return views.size(); }
};

enum class PathType { kStatic, kOrbit, kPush, kPull };

// Throws UnknownPathType.
PathType parse_path_type(std::string_view name);
std::string_view to_string(PathType type);

struct PathSpec {
  PathType type = PathType::kStatic;
  Eigen::Vector3d pivot = Eigen::Vector3d::Zero();  // orbit
  double angle_deg = 0.0;                           // orbit, total sweep
  double distance = 0.0;                            // push / pull
};

// The orbit rotates about the reference camera's vertical (image y) axis
// passing through the pivot.
ViewSequence generate_camera_path(const Camera& reference, const PathSpec& spec,
                                  int count, std::pair<double, double> t_range);

struct SelectionThresholds {
  double max_angle_deg = 15.0;
  double max_center_distance = 0.1;  // fraction of scene_scale
};

// Indices of the cameras passing both tests, ordered by timestamp (ties by
// index). Throws EmptySelection.
std::vector<std::size_t> select_image_indices(
    std::span<const Camera> cameras, std::span<const double> timestamps,
    const Camera& reference, double scene_scale,
    const SelectionThresholds& thresholds = {});

std::vector<PosedImage> select_images(std::span<const PosedImage> photos,
                                      const Camera& reference, double scene_scale,
                                      const SelectionThresholds& thresholds = {});

// Rotation of `angle` radians about the unit `axis`.
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle);

}  // namespace tlapse
