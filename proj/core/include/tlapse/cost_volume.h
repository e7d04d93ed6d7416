#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlapse/camera.h"
#include "tlapse/depthmap.h"
#include "tlapse/raster.h"

namespace tlapse {

struct SparsePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::vector<int> observers;  // indices into the manifest's camera list
};

// Largest angle (radians) subtended at the point by any observer pair.
double max_triangulation_angle(const SparsePoint& point,
                               std::span<const Camera> cameras);

struct DepthPlaneOptions {
  double min_triangulation_deg = 2.0;
  double trim_fraction = 0.005;
};

// Throws DegenerateRange when fewer than two points survive or the surviving
// depths collapse to one value.
PlaneSet compute_depth_planes(std::span<const SparsePoint> points,
                              std::span<const Camera> cameras, const Camera& view,
                              int count, const DepthPlaneOptions& options = {});

struct SupportSet {
  std::vector<int> indices;  // positions in the chronological sequence
  int window_length = 0;     // l before subsampling
};

inline constexpr int kMaxSupportImages = 100;

// `timestamps` is the chronologically sorted input sequence.
SupportSet support_set(int view_index, std::span<const double> timestamps,
                       const ViewSequence& views);

// Grayscale image and the camera it was captured with, at matching resolution.
struct MatchingImage {
  Camera camera;
  GrayImage gray;
};

// 1 - NCC over the 3x3 window around `pixel` in `view`, after warping both
// images through the plane at `depth`. Window taps outside the view are
// clamped to its border. nullopt (missing data) when any tap falls outside
// either source image. Windows with variance < 1e-8 score 1.
std::optional<double> pairwise_cost(const MatchingImage& a, const MatchingImage& b,
                                    const Camera& view, double depth,
                                    const Eigen::Vector2i& pixel);

// Costs for one window given the two 9-sample patches.
double ncc_cost(std::span<const double, 9> a, std::span<const double, 9> b);

// Lower-middle order statistic; the input is reordered.
double lower_median(std::span<double> values);

struct CostVolume {
  int width = 0;
  int height = 0;
  int planes = 0;
  std::vector<double> costs;           // (y * width + x) * planes + k
  std::vector<std::int32_t> valid_count;  // unordered contributing pairs per (pixel, plane)

  double& at(int x, int y, int k) {
    return costs[(static_cast<std::size_t>(y) * width + x) * planes + k];
  }
  double at(int x, int y, int k) const {
    return costs[(static_cast<std::size_t>(y) * width + x) * planes + k];
  }
};

// Median-of-medians aggregation over the support images. Throws TooFewImages
// for fewer than two images.
CostVolume aggregate(const Camera& view, std::span<const MatchingImage> support,
                     const PlaneSet& planes);

// Writes the debug dump: "CVOL", then W, H, L as little-endian u32, then
// W*H*L float32 values with x fastest, then y, then plane.
void write_cost_volume(std::ostream& out, const CostVolume& volume);
CostVolume read_cost_volume(std::istream& in);

struct SplineSample {
  double value;
  double derivative;
  double second_derivative;
};

// Natural cubic spline through each pixel's cost column.
class SplineCost {
 public:
  SplineCost() = default;
  explicit SplineCost(const CostVolume& volume);

  int width() const { return width_; }
  int height() const { return height_; }
  int planes() const { return planes_; }
  double knot(int x, int y, int k) const { return costs_[offset(x, y) + k]; }

  // Throws OutOfRange unless 0 <= disparity <= planes - 1.
  SplineSample eval(int x, int y, double disparity) const;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * planes_;
  }

  int width_ = 0;
  int height_ = 0;
  int planes_ = 0;
  std::vector<double> costs_;
  std::vector<double> moments_;  // second derivatives at the knots
};

struct CostEval {
  double value;
  double derivative;
};

CostEval eval_cost(const SplineCost& spline, const Eigen::Vector2i& pixel,
                   double disparity);

}  // namespace tlapse
