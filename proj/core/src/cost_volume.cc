#include "tlapse/cost_volume.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "tlapse/errors.h"

namespace tlapse {
namespace {

constexpr double kMinWindowVariance = 1e-8;

struct Patch {
  std::array<double, 9> centered;
  double sum_sq = 0.0;
  bool flat = false;
};

Patch make_patch(std::span<const double, 9> values) {
  Patch p;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= 9.0;
  for (int i = 0; i < 9; ++i) {
    p.centered[i] = values[i] - mean;
    p.sum_sq += p.centered[i] * p.centered[i];
  }
  p.flat = p.sum_sq / 9.0 < kMinWindowVariance;
  return p;
}

double patch_cost(const Patch& a, const Patch& b) {
  if (a.flat || b.flat) return 1.0;
  double dot = 0.0;
  for (int i = 0; i < 9; ++i) dot += a.centered[i] * b.centered[i];
  const double ncc = dot / std::sqrt(a.sum_sq * b.sum_sq);
  return std::clamp(1.0 - ncc, 0.0, 2.0);
}

// Window taps around (x, y), clamped to the grid.
std::array<std::size_t, 9> window_taps(int x, int y, int width, int height) {
  std::array<std::size_t, 9> taps;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = std::clamp(y + dy, 0, height - 1);
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, 0, width - 1);
      taps[n++] = static_cast<std::size_t>(yy) * width + xx;
    }
  }
  return taps;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::kIo, "truncated cost volume stream");
  return value;
}

}  // namespace

double max_triangulation_angle(const SparsePoint& point,
                               std::span<const Camera> cameras) {
  std::vector<Eigen::Vector3d> rays;
  for (int idx : point.observers) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cameras.size()) continue;
    const Eigen::Vector3d r = cameras[idx].center - point.position;
    if (r.norm() > 0.0) rays.push_back(r.normalized());
  }
  double best = 0.0;
  for (std::size_t a = 0; a < rays.size(); ++a) {
    for (std::size_t b = a + 1; b < rays.size(); ++b) {
      const double c = std::clamp(rays[a].dot(rays[b]), -1.0, 1.0);
      best = std::max(best, std::acos(c));
    }
  }
  return best;
}

PlaneSet compute_depth_planes(std::span<const SparsePoint> points,
                              std::span<const Camera> cameras, const Camera& view,
                              int count, const DepthPlaneOptions& options) {
  if (points.empty()) {
    throw Error(ErrorCode::kDegenerateRange, "no sparse points");
  }
  const double min_angle = options.min_triangulation_deg * M_PI / 180.0;
  std::vector<double> depths;
  for (const auto& pt : points) {
    if (max_triangulation_angle(pt, cameras) < min_angle) continue;
    const double z = view.to_camera(pt.position).z();
    if (z > 0.0) depths.push_back(z);
  }
  std::sort(depths.begin(), depths.end());
  const auto n = static_cast<long>(depths.size());
  const long trim = std::lround(options.trim_fraction * static_cast<double>(n));
  if (n - 2 * trim < 2) {
    throw Error(ErrorCode::kDegenerateRange,
                "fewer than two well-triangulated points in front of the view");
  }
  const double near = depths[trim];
  const double far = depths[n - 1 - trim];
  if (!(far > near)) {
    throw Error(ErrorCode::kDegenerateRange, "sparse points span a single depth");
  }
  return PlaneSet(near, far, count);
}

SupportSet support_set(int view_index, std::span<const double> timestamps,
                       const ViewSequence& views) {
  const int n = static_cast<int>(timestamps.size());
  if (n < 1) throw Error(ErrorCode::kTooFewImages, "empty input sequence");
  const double t = views.times.at(view_index);

  int center = 0;
  double best = std::abs(timestamps[0] - t);
  for (int i = 1; i < n; ++i) {
    const double d = std::abs(timestamps[i] - t);
    if (d < best) {
      best = d;
      center = i;
    }
  }

  SupportSet s;
  s.window_length = std::max(1, static_cast<int>(std::lround(0.15 * n)));
  const int l = std::min(s.window_length, n);
  const int start = std::clamp(center - l / 2, 0, n - l);
  if (l <= kMaxSupportImages) {
    for (int i = 0; i < l; ++i) s.indices.push_back(start + i);
  } else {
    for (int k = 0; k < kMaxSupportImages; ++k) {
      const double pos = static_cast<double>(k) * (l - 1) / (kMaxSupportImages - 1);
      s.indices.push_back(start + static_cast<int>(std::lround(pos)));
    }
  }
  return s;
}

double ncc_cost(std::span<const double, 9> a, std::span<const double, 9> b) {
  return patch_cost(make_patch(a), make_patch(b));
}

double lower_median(std::span<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "median of an empty set");
  }
  const auto mid = values.begin() + (values.size() - 1) / 2;
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::optional<double> pairwise_cost(const MatchingImage& a, const MatchingImage& b,
                                    const Camera& view, double depth,
                                    const Eigen::Vector2i& pixel) {
  const auto taps = window_taps(pixel.x(), pixel.y(), view.width, view.height);
  std::array<double, 9> va, vb;
  for (int i = 0; i < 9; ++i) {
    const int x = static_cast<int>(taps[i] % view.width);
    const int y = static_cast<int>(taps[i] / view.width);
    const Eigen::Vector3d q = backproject(view, Eigen::Vector2d(x, y), depth);
    const auto pa = try_project(a.camera, q);
    const auto pb = try_project(b.camera, q);
    if (!pa || !pb) return std::nullopt;
    const auto sa = sample_bilinear(a.gray, pa->pixel.x(), pa->pixel.y());
    const auto sb = sample_bilinear(b.gray, pb->pixel.x(), pb->pixel.y());
    if (!sa || !sb) return std::nullopt;
    va[i] = *sa;
    vb[i] = *sb;
  }
  return ncc_cost(va, vb);
}

CostVolume aggregate(const Camera& view, std::span<const MatchingImage> support,
                     const PlaneSet& planes) {
  if (support.size() < 2) {
    throw Error(ErrorCode::kTooFewImages, "cost aggregation needs >= 2 images");
  }
  const int w = view.width;
  const int h = view.height;
  const int num_planes = planes.count();
  const int s = static_cast<int>(support.size());
  const std::size_t num_pixels = static_cast<std::size_t>(w) * h;

  CostVolume vol;
  vol.width = w;
  vol.height = h;
  vol.planes = num_planes;
  vol.costs.assign(num_pixels * num_planes, 1.0);
  vol.valid_count.assign(num_pixels * num_planes, 0);

#pragma omp parallel
  {
    std::vector<double> warped(num_pixels * s);
    std::vector<std::uint8_t> inside(num_pixels * s);
    std::vector<Patch> patches(s);
    std::vector<std::uint8_t> patch_ok(s);
    std::vector<double> pair(static_cast<std::size_t>(s) * s);
    std::vector<std::uint8_t> pair_ok(static_cast<std::size_t>(s) * s);
    std::vector<double> scratch;
    std::vector<double> inner;

#pragma omp for schedule(dynamic)
    for (int k = 0; k < num_planes; ++k) {
      const double depth = planes.depth(k);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const Eigen::Vector3d q = backproject(view, Eigen::Vector2d(x, y), depth);
          for (int a = 0; a < s; ++a) {
            const auto proj = try_project(support[a].camera, q);
            std::optional<double> v;
            if (proj) {
              v = sample_bilinear(support[a].gray, proj->pixel.x(), proj->pixel.y());
            }
            warped[p * s + a] = v.value_or(0.0);
            inside[p * s + a] = v.has_value();
          }
        }
      }

      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const auto taps = window_taps(x, y, w, h);
          for (int a = 0; a < s; ++a) {
            std::array<double, 9> vals;
            bool ok = true;
            for (int i = 0; i < 9; ++i) {
              ok = ok && inside[taps[i] * s + a];
              vals[i] = warped[taps[i] * s + a];
            }
            patch_ok[a] = ok;
            if (ok) patches[a] = make_patch(vals);
          }
          int pairs = 0;
          for (int a = 0; a < s; ++a) {
            for (int b = a + 1; b < s; ++b) {
              const bool ok = patch_ok[a] && patch_ok[b];
              pair_ok[a * s + b] = pair_ok[b * s + a] = ok;
              if (ok) {
                pair[a * s + b] = pair[b * s + a] = patch_cost(patches[a], patches[b]);
                ++pairs;
              }
            }
          }
          if (pairs == 0) continue;
          inner.clear();
          for (int a = 0; a < s; ++a) {
            scratch.clear();
            for (int b = 0; b < s; ++b) {
              if (b != a && pair_ok[a * s + b]) scratch.push_back(pair[a * s + b]);
            }
            if (!scratch.empty()) inner.push_back(lower_median(scratch));
          }
          const std::size_t slot = p * num_planes + k;
          vol.costs[slot] = lower_median(inner);
          vol.valid_count[slot] = pairs;
        }
      }
    }
  }
  return vol;
}

void write_cost_volume(std::ostream& out, const CostVolume& volume) {
  out.write("CVOL", 4);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(volume.width));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(volume.height));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(volume.planes));
  for (int k = 0; k < volume.planes; ++k) {
    for (int y = 0; y < volume.height; ++y) {
      for (int x = 0; x < volume.width; ++x) {
        write_pod<float>(out, static_cast<float>(volume.at(x, y, k)));
      }
    }
  }
}

CostVolume read_cost_volume(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CVOL", 4) != 0) {
    throw Error(ErrorCode::kIo, "not a cost volume dump");
  }
  CostVolume v;
  v.width = static_cast<int>(read_pod<std::uint32_t>(in));
  v.height = static_cast<int>(read_pod<std::uint32_t>(in));
  v.planes = static_cast<int>(read_pod<std::uint32_t>(in));
  v.costs.resize(static_cast<std::size_t>(v.width) * v.height * v.planes);
  v.valid_count.assign(v.costs.size(), 0);
  for (int k = 0; k < v.planes; ++k) {
    for (int y = 0; y < v.height; ++y) {
      for (int x = 0; x < v.width; ++x) v.at(x, y, k) = read_pod<float>(in);
    }
  }
  return v;
}

SplineCost::SplineCost(const CostVolume& volume)
    : width_(volume.width), height_(volume.height), planes_(volume.planes),
      costs_(volume.costs), moments_(volume.costs.size(), 0.0) {
  const int n = planes_;
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "spline needs >= 2 planes");
  if (n == 2) return;
  // Tridiagonal system M[k-1] + 4 M[k] + M[k+1] = rhs[k], natural ends.
  std::vector<double> diag(n), rhs(n);
  for (std::size_t base = 0; base < costs_.size(); base += n) {
    const double* c = &costs_[base];
    double* m = &moments_[base];
    for (int k = 1; k < n - 1; ++k) {
      diag[k] = 4.0;
      rhs[k] = 6.0 * (c[k + 1] - 2.0 * c[k] + c[k - 1]);
    }
    for (int k = 2; k < n - 1; ++k) {
      const double f = 1.0 / diag[k - 1];
      diag[k] -= f;
      rhs[k] -= f * rhs[k - 1];
    }
    m[n - 2] = rhs[n - 2] / diag[n - 2];
    for (int k = n - 3; k >= 1; --k) m[k] = (rhs[k] - m[k + 1]) / diag[k];
  }
}

SplineSample SplineCost::eval(int x, int y, double disparity) const {
  if (!(disparity >= 0.0 && disparity <= planes_ - 1)) {
    throw Error(ErrorCode::kOutOfRange, "disparity outside the plane range");
  }
  const int k = std::min(static_cast<int>(disparity), planes_ - 2);
  const double t = disparity - k;
  const double u = 1.0 - t;
  const std::size_t o = offset(x, y) + k;
  const double c0 = costs_[o], c1 = costs_[o + 1];
  const double m0 = moments_[o], m1 = moments_[o + 1];
  SplineSample s;
  s.value = u * c0 + t * c1 + ((u * u * u - u) * m0 + (t * t * t - t) * m1) / 6.0;
  s.derivative = c1 - c0 + ((1.0 - 3.0 * u * u) * m0 + (3.0 * t * t - 1.0) * m1) / 6.0;
  s.second_derivative = u * m0 + t * m1;
  return s;
}

CostEval eval_cost(const SplineCost& spline, const Eigen::Vector2i& pixel,
                   double disparity) {
  const SplineSample s = spline.eval(pixel.x(), pixel.y(), disparity);
  return {s.value, s.derivative};
}

}  // namespace tlapse
