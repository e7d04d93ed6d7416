#include "tlapse/camera.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "tlapse/errors.h"

namespace tlapse {

Camera Camera::scaled(double factor) const {
  Camera c = *this;
  c.focal = focal * factor;
  c.principal_point = (principal_point.array() + 0.5) * factor - 0.5;
  c.width = static_cast<int>(std::lround(width * factor));
  c.height = static_cast<int>(std::lround(height * factor));
  return c;
}

void Camera::validate() const {
  const double ortho = (rotation.transpose() * rotation -
                        Eigen::Matrix3d::Identity()).norm();
  if (ortho >= 1e-9 || rotation.determinant() <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "camera rotation is not a rotation");
  }
  if (focal.x() <= 0.0 || focal.y() <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "camera focal must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "camera size must be positive");
  }
}

std::optional<Projection> try_project(const Camera& camera,
                                      const Eigen::Vector3d& point) {
  const Eigen::Vector3d x = camera.to_camera(point);
  if (!(x.z() > 0.0)) return std::nullopt;
  const Eigen::Vector2d pixel =
      camera.principal_point + camera.focal.cwiseProduct(x.head<2>() / x.z());
  return Projection{pixel, x.z()};
}

Projection project(const Camera& camera, const Eigen::Vector3d& point) {
  auto p = try_project(camera, point);
  if (!p) throw Error(ErrorCode::kBehindCamera, "point is behind the camera");
  return *p;
}

Eigen::Vector3d backproject(const Camera& camera, const Eigen::Vector2d& pixel,
                            double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "backprojection depth must be > 0");
  }
  const Eigen::Vector2d xy =
      (pixel - camera.principal_point).cwiseQuotient(camera.focal);
  const Eigen::Vector3d ray(xy.x() * depth, xy.y() * depth, depth);
  return camera.rotation.transpose() * ray + camera.center;
}

PathType parse_path_type(std::string_view name) {
  if (name == "static") return PathType::kStatic;
  if (name == "orbit") return PathType::kOrbit;
  if (name == "push") return PathType::kPush;
  if (name == "pull") return PathType::kPull;
  throw Error(ErrorCode::kUnknownPathType, "unknown camera path '" +
                                               std::string(name) + "'");
}

std::string_view to_string(PathType type) {
  switch (type) {
    case PathType::kStatic: return "static";
    case PathType::kOrbit: return "orbit";
    case PathType::kPush: return "push";
    case PathType::kPull: return "pull";
  }
  return "static";
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

ViewSequence generate_camera_path(const Camera& reference, const PathSpec& spec,
                                  int count, std::pair<double, double> t_range) {
  if (count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "camera path needs at least 2 views");
  }
  const auto [t_min, t_max] = t_range;
  ViewSequence seq;
  seq.views.reserve(count);
  seq.times.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) / (count - 1);
    Camera cam = reference;
    switch (spec.type) {
      case PathType::kStatic:
        break;
      case PathType::kOrbit: {
        const Eigen::Vector3d up = reference.rotation.row(1).transpose();
        const double angle = s * spec.angle_deg * M_PI / 180.0;
        const Eigen::Matrix3d q = axis_angle(up, angle);
        cam.center = spec.pivot + q * (reference.center - spec.pivot);
        cam.rotation = reference.rotation * q.transpose();
        break;
      }
      case PathType::kPush:
        cam.center = reference.center + s * spec.distance * reference.optical_axis();
        break;
      case PathType::kPull:
        cam.center = reference.center - s * spec.distance * reference.optical_axis();
        break;
    }
    seq.views.push_back(cam);
    seq.times.push_back(t_min + k * (t_max - t_min) / (count - 1));
  }
  return seq;
}

std::vector<std::size_t> select_image_indices(std::span<const Camera> cameras,
                                              std::span<const double> timestamps,
                                              const Camera& reference,
                                              double scene_scale,
                                              const SelectionThresholds& thresholds) {
  if (!(scene_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scene_scale must be positive");
  }
  if (cameras.size() != timestamps.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cameras and timestamps differ in length");
  }
  const double cos_max = std::cos(thresholds.max_angle_deg * M_PI / 180.0);
  const double max_dist = thresholds.max_center_distance * scene_scale;
  const Eigen::Vector3d ref_axis = reference.optical_axis();

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const double cos_angle = cameras[i].optical_axis().dot(ref_axis);
    const double dist = (cameras[i].center - reference.center).norm();
    if (cos_angle >= cos_max - 1e-12 && dist <= max_dist) kept.push_back(i);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptySelection, "no photo is close to the reference camera");
  }
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return timestamps[a] < timestamps[b];
  });
  return kept;
}

std::vector<PosedImage> select_images(std::span<const PosedImage> photos,
                                      const Camera& reference, double scene_scale,
                                      const SelectionThresholds& thresholds) {
  std::vector<Camera> cams;
  std::vector<double> times;
  for (const auto& p : photos) {
    cams.push_back(p.camera);
    times.push_back(p.timestamp);
  }
  std::vector<PosedImage> out;
  for (std::size_t i : select_image_indices(cams, times, reference, scene_scale,
                                            thresholds)) {
    out.push_back(photos[i]);
  }
  return out;
}

}  // namespace tlapse
