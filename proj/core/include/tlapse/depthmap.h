#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "tlapse/camera.h"
#include "tlapse/raster.h"

namespace tlapse {

// Fronto-parallel sweep planes, uniformly spaced in inverse depth. Plane 0 is
// the farthest; disparities are continuous plane indices.
class PlaneSet {
 public:
  PlaneSet() = default;
  // Throws DegenerateRange unless 0 < near < far and count >= 2.
  PlaneSet(double near_depth, double far_depth, int count);

  int count() const { return count_; }
  double near_depth() const { return near_; }
  double far_depth() const { return far_; }

  double depth(double disparity) const {
    return 1.0 / (inverse_far_ + disparity * inverse_step_);
  }
  double disparity(double depth) const {
    return (1.0 / depth - inverse_far_) / inverse_step_;
  }
  // d(disparity)/d(depth) = -1 / (depth^2 * step)
  double inverse_step() const { return inverse_step_; }
  double inverse_far() const { return inverse_far_; }

  std::vector<double> depths() const;

  bool operator==(const PlaneSet&) const = default;

 private:
  double near_ = 1.0;
  double far_ = 2.0;
  int count_ = 2;
  double inverse_far_ = 0.5;
  double inverse_step_ = 0.5;
};

struct Depthmap {
  Raster<double> values;  // disparity in plane-index units
  PlaneSet planes;

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  double depth(int x, int y) const { return planes.depth(values(x, y)); }
  // Bilinear disparity lookup with coordinates clamped into the grid.
  double disparity_at(const Eigen::Vector2d& pixel) const;
};

struct ReprojectedDepthmap {
  Raster<double> values;        // disparity in the target's plane units
  Raster<std::uint8_t> valid;
  Raster<std::int32_t> source;  // winning source pixel index, -1 if none
};

// Nearest-pixel z-buffer of a depthmap rendered into another camera.
struct ZBuffer {
  Raster<double> depth;         // target-frame depth, +inf where empty
  Raster<std::int32_t> source;  // winning source pixel index, -1 if empty
};

ZBuffer render_zbuffer(const Depthmap& source, const Camera& source_view,
                       const Camera& target_view);

// Throws DimensionMismatch if source does not match source_view.
ReprojectedDepthmap reproject_depthmap(const Depthmap& source,
                                       const Camera& source_view,
                                       const Camera& target_view,
                                       const PlaneSet& target_planes);

}  // namespace tlapse
