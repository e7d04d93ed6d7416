#include "tlapse/tracks.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "tlapse/errors.h"

namespace tlapse {

DepthStack::DepthStack(std::vector<Depthmap> depthmaps, std::vector<Camera> views)
    : depthmaps_(std::move(depthmaps)), views_(std::move(views)) {
  if (depthmaps_.size() != views_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "depthmap and view counts differ");
  }
}

Camera DepthStack::depth_camera(std::size_t j) const {
  Camera c = views_[j].scaled(static_cast<double>(depthmaps_[j].width()) /
                              views_[j].width);
  c.width = depthmaps_[j].width();
  c.height = depthmaps_[j].height();
  return c;
}

double DepthStack::depth_at(std::size_t j, const Eigen::Vector2d& view_pixel) const {
  const Depthmap& dm = depthmaps_[j];
  const Camera& v = views_[j];
  const double sx = static_cast<double>(dm.width()) / v.width;
  const double sy = static_cast<double>(dm.height()) / v.height;
  const Eigen::Vector2d p((view_pixel.x() + 0.5) * sx - 0.5,
                          (view_pixel.y() + 0.5) * sy - 0.5);
  return dm.planes.depth(dm.disparity_at(p));
}

Eigen::Vector3d DepthStack::surface_point(std::size_t j,
                                          const Eigen::Vector2d& view_pixel) const {
  return backproject(views_[j], view_pixel, depth_at(j, view_pixel));
}

Track chain_track(int seed_view, const Eigen::Vector2d& seed_pixel,
                  const DepthStack& stack) {
  const int m = static_cast<int>(stack.size());
  std::vector<Eigen::Vector3d> back_points;
  std::vector<Eigen::Vector2d> back_proj;

  const Eigen::Vector3d seed = stack.surface_point(seed_view, seed_pixel);

  Eigen::Vector3d q = seed;
  for (int j = seed_view - 1; j >= 0; --j) {
    const auto p = try_project(stack.view(j), q);
    if (!p || !stack.view(j).in_bounds(p->pixel)) break;
    q = stack.surface_point(j, p->pixel);
    back_points.push_back(q);
    back_proj.push_back(p->pixel);
  }

  Track t;
  t.start_view = seed_view - static_cast<int>(back_points.size());
  t.points.assign(back_points.rbegin(), back_points.rend());
  t.projections.assign(back_proj.rbegin(), back_proj.rend());
  t.points.push_back(seed);
  t.projections.push_back(seed_pixel);

  q = seed;
  for (int j = seed_view + 1; j < m; ++j) {
    const auto p = try_project(stack.view(j), q);
    if (!p || !stack.view(j).in_bounds(p->pixel)) break;
    q = stack.surface_point(j, p->pixel);
    t.points.push_back(q);
    t.projections.push_back(p->pixel);
  }
  return t;
}

namespace {

class Coverage {
 public:
  Coverage(std::span<const Camera> views, double epsilon) : epsilon_(epsilon) {
    for (const auto& v : views) {
      grids_.emplace_back(v.width, v.height, std::numeric_limits<double>::infinity());
    }
  }

  void add(const Track& t) {
    for (int k = 0; k < t.length(); ++k) add(t.start_view + k, t.projections[k]);
  }

  void add(int view, const Eigen::Vector2d& p) {
    Raster<double>& g = grids_[view];
    const int x0 = static_cast<int>(std::floor(p.x() - epsilon_));
    const int x1 = static_cast<int>(std::ceil(p.x() + epsilon_));
    const int y0 = static_cast<int>(std::floor(p.y() - epsilon_));
    const int y1 = static_cast<int>(std::ceil(p.y() + epsilon_));
    for (int y = std::max(y0, 0); y <= std::min(y1, g.height() - 1); ++y) {
      for (int x = std::max(x0, 0); x <= std::min(x1, g.width() - 1); ++x) {
        const double d = std::hypot(p.x() - x, p.y() - y);
        g(x, y) = std::min(g(x, y), d);
      }
    }
  }

  bool covered(int view, int x, int y) const { return grids_[view](x, y) <= epsilon_; }

 private:
  double epsilon_;
  std::vector<Raster<double>> grids_;
};

std::vector<Track> chain_all(int view, const std::vector<Eigen::Vector2d>& seeds,
                             const DepthStack& stack) {
  std::vector<Track> out(seeds.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    out[i] = chain_track(view, seeds[i], stack);
  }
  return out;
}

std::vector<Eigen::Vector2d> all_pixels(const Camera& v) {
  std::vector<Eigen::Vector2d> seeds;
  seeds.reserve(static_cast<std::size_t>(v.width) * v.height);
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) seeds.emplace_back(x, y);
  }
  return seeds;
}

}  // namespace

std::vector<Track> generate_tracks(const DepthStack& stack, const TrackGenParams& params,
                                   TrackSetStats* stats) {
  if (!(params.epsilon > 0.0 && params.epsilon <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be in (0, 1]");
  }
  const int m = static_cast<int>(stack.size());
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "no views");
  TrackSetStats local;
  std::vector<Track> tracks;
  Coverage coverage(stack.views(), params.epsilon);

  auto seed_whole_view = [&](int view, int& counter) {
    auto batch = chain_all(view, all_pixels(stack.view(view)), stack);
    counter += static_cast<int>(batch.size());
    for (auto& t : batch) {
      coverage.add(t);
      tracks.push_back(std::move(t));
    }
  };

  const int middle = (m - 1) / 2;
  seed_whole_view(middle, local.seeded_middle);
  if (m > 1) {
    if (middle != 0) seed_whole_view(0, local.seeded_first);
    if (m - 1 != middle) seed_whole_view(m - 1, local.seeded_last);
  }

  for (int j = 0; j < m; ++j) {
    const Camera& v = stack.view(j);
    std::vector<Eigen::Vector2d> seeds;
    for (int y = 0; y < v.height; ++y) {
      for (int x = 0; x < v.width; ++x) {
        if (coverage.covered(j, x, y)) continue;
        seeds.emplace_back(x, y);
        coverage.add(j, seeds.back());
      }
    }
    auto batch = chain_all(j, seeds, stack);
    local.seeded_gap_fill += static_cast<int>(batch.size());
    for (auto& t : batch) {
      coverage.add(t);
      tracks.push_back(std::move(t));
    }
  }
  if (stats) *stats = local;
  return tracks;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::kIo, "truncated track stream");
  return v;
}

}  // namespace

void write_tracks(std::ostream& out, std::span<const Track> tracks) {
  for (const auto& t : tracks) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.start_view));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.length()));
    for (int k = 0; k < t.length(); ++k) {
      for (int c = 0; c < 3; ++c) put<double>(out, t.points[k][c]);
      for (int c = 0; c < 2; ++c) put<double>(out, t.projections[k][c]);
    }
  }
}

std::vector<Track> read_tracks(std::istream& in) {
  std::vector<Track> tracks;
  while (in.peek() != std::char_traits<char>::eof()) {
    Track t;
    t.start_view = static_cast<int>(get<std::uint32_t>(in));
    const auto n = get<std::uint32_t>(in);
    t.points.resize(n);
    t.projections.resize(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      for (int c = 0; c < 3; ++c) t.points[k][c] = get<double>(in);
      for (int c = 0; c < 2; ++c) t.projections[k][c] = get<double>(in);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace tlapse
