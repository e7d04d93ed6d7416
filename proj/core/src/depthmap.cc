#include "tlapse/depthmap.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tlapse/errors.h"

namespace tlapse {

PlaneSet::PlaneSet(double near_depth, double far_depth, int count)
    : near_(near_depth), far_(far_depth), count_(count) {
  if (count < 2 || !(near_depth > 0.0) || !(far_depth > near_depth) ||
      !std::isfinite(far_depth)) {
    throw Error(ErrorCode::kDegenerateRange, "invalid depth plane range");
  }
  inverse_far_ = 1.0 / far_depth;
  inverse_step_ = (1.0 / near_depth - 1.0 / far_depth) / (count - 1);
}

std::vector<double> PlaneSet::depths() const {
  std::vector<double> out(count_);
  for (int k = 0; k < count_; ++k) out[k] = depth(k);
  return out;
}

double Depthmap::disparity_at(const Eigen::Vector2d& pixel) const {
  return sample_bilinear_clamped(values, pixel.x(), pixel.y());
}

ZBuffer render_zbuffer(const Depthmap& source, const Camera& source_view,
                       const Camera& target_view) {
  if (source.width() != source_view.width || source.height() != source_view.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "depthmap size differs from its camera");
  }
  ZBuffer zb{Raster<double>(target_view.width, target_view.height,
                            std::numeric_limits<double>::infinity()),
             Raster<std::int32_t>(target_view.width, target_view.height, -1)};
  for (int y = 0; y < source.height(); ++y) {
    for (int x = 0; x < source.width(); ++x) {
      const Eigen::Vector3d q =
          backproject(source_view, Eigen::Vector2d(x, y), source.depth(x, y));
      const auto proj = try_project(target_view, q);
      if (!proj) continue;
      const long u = std::lround(proj->pixel.x());
      const long v = std::lround(proj->pixel.y());
      if (u < 0 || v < 0 || u >= target_view.width || v >= target_view.height) {
        continue;
      }
      double& z = zb.depth(static_cast<int>(u), static_cast<int>(v));
      if (proj->depth < z) {
        z = proj->depth;
        zb.source(static_cast<int>(u), static_cast<int>(v)) =
            static_cast<std::int32_t>(source.values.index(x, y));
      }
    }
  }
  return zb;
}

ReprojectedDepthmap reproject_depthmap(const Depthmap& source,
                                       const Camera& source_view,
                                       const Camera& target_view,
                                       const PlaneSet& target_planes) {
  ZBuffer zb = render_zbuffer(source, source_view, target_view);
  ReprojectedDepthmap out{Raster<double>(target_view.width, target_view.height, 0.0),
                          Raster<std::uint8_t>(target_view.width, target_view.height, 0),
                          std::move(zb.source)};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.source[i] < 0) continue;
    out.values[i] = target_planes.disparity(zb.depth[i]);
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace tlapse
