#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlapse/camera.h"
#include "tlapse/depthmap.h"

namespace tlapse {

// Depthmaps paired with the output views they describe. A depthmap may have a
// lower resolution than its view; lookups convert view pixels to depthmap
// pixels and interpolate disparity bilinearly.
class DepthStack {
 public:
  DepthStack(std::vector<Depthmap> depthmaps, std::vector<Camera> views);

  std::size_t size() const { return views_.size(); }
  const Camera& view(std::size_t j) const { return views_[j]; }
  const Depthmap& depthmap(std::size_t j) const { return depthmaps_[j]; }
  std::span<const Camera> views() const { return views_; }
  std::span<const Depthmap> depthmaps() const { return depthmaps_; }
  // The view's camera at the depthmap's resolution.
  Camera depth_camera(std::size_t j) const;

  // World-unit depth of the surface seen at a (real-valued) view pixel.
  double depth_at(std::size_t j, const Eigen::Vector2d& view_pixel) const;
  Eigen::Vector3d surface_point(std::size_t j, const Eigen::Vector2d& view_pixel) const;

 private:
  std::vector<Depthmap> depthmaps_;
  std::vector<Camera> views_;
};

struct Track {
  int start_view = 0;
  std::vector<Eigen::Vector3d> points;       // one per covered view
  std::vector<Eigen::Vector2d> projections;  // pixel position in that view

  int length() const { return static_cast<int>(points.size()); }
  int end_view() const { return start_view + length(); }  // exclusive
};

struct TrackGenParams {
  double epsilon = 0.4;  // pixels
};

// Chains project/backproject forward and backward from the seed until a
// projection leaves the view (or falls behind it).
Track chain_track(int seed_view, const Eigen::Vector2d& seed_pixel,
                  const DepthStack& stack);

struct TrackSetStats {
  int seeded_middle = 0;
  int seeded_first = 0;
  int seeded_last = 0;
  int seeded_gap_fill = 0;
};

// Seeds every pixel of the middle, first and last views, then fills gaps so
// every pixel center of every view has a track projection within epsilon.
std::vector<Track> generate_tracks(const DepthStack& stack,
                                   const TrackGenParams& params,
                                   TrackSetStats* stats = nullptr);

// Binary record stream: start_view u32, length u32, then per view 3 x f64
// point and 2 x f64 projection; little-endian.
void write_tracks(std::ostream& out, std::span<const Track> tracks);
std::vector<Track> read_tracks(std::istream& in);

}  // namespace tlapse
