#include "tlapse/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/Geometry>
#include "json.hpp"

#include "json_codec.h"
#include "tlapse/errors.h"
#include "tlapse/io.h"

namespace tlapse {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t salt) {
  const std::uint64_t h =
      mix(mix(static_cast<std::uint64_t>(ix) ^ salt) ^ static_cast<std::uint64_t>(iy) * 0x632be59bd9b4e019ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double u, double v, std::uint64_t salt) {
  const double fu = std::floor(u), fv = std::floor(v);
  const auto iu = static_cast<std::int64_t>(fu), iv = static_cast<std::int64_t>(fv);
  const double a = fade(u - fu), b = fade(v - fv);
  const double n00 = lattice(iu, iv, salt), n10 = lattice(iu + 1, iv, salt);
  const double n01 = lattice(iu, iv + 1, salt), n11 = lattice(iu + 1, iv + 1, salt);
  return (n00 * (1 - a) + n10 * a) * (1 - b) + (n01 * (1 - a) + n11 * a) * b;
}

// Bit-exact uniform doubles independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

 private:
  std::mt19937_64 engine_;
};

Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidSpec, what);
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  check(appear_time >= 0.0 && appear_time <= 1.0, "appearance time must lie in [0, 1]");
  check(photo_count >= 4, "need at least 4 photos");
  check(gain_range.first > 0.0 && gain_range.second < 2.0 &&
            gain_range.first <= gain_range.second,
        "gain range must lie inside (0, 2)");
  check(bias_range.first <= bias_range.second, "bias range is reversed");
  check(outlier_probability >= 0.0 && outlier_probability <= 1.0,
        "outlier probability must lie in [0, 1]");
  check(time_span.second > time_span.first, "empty timestamp span");
  check(width >= 2 && height >= 2 && focal > 0.0 && photo_focal > 0.0,
        "bad image geometry");
  check(background_depth > 0.0, "background must be in front of the camera");
  check(box_size.minCoeff() > 0.0, "box size must be positive");
  check(position_jitter >= 0.0 && rotation_jitter >= 0.0, "negative jitter");
  check(point_count >= 0, "negative point count");
  check(background_frequency > 0.0 && box_frequency > 0.0, "bad texture frequency");
  check(texture_contrast >= 0.0 && texture_contrast <= 0.5, "texture contrast must lie in [0, 0.5]");
}

std::string spec_to_string(const SyntheticSceneSpec& s) {
  nlohmann::json j;
  j["background_depth"] = s.background_depth;
  j["background_slope"] = s.background_slope;
  j["background_frequency"] = s.background_frequency;
  j["has_box"] = s.has_box;
  j["box_center"] = vec_to_json(s.box_center);
  j["box_size"] = vec_to_json(s.box_size);
  j["appear_time"] = s.appear_time;
  j["box_frequency"] = s.box_frequency;
  j["box_yaw_deg"] = s.box_yaw_deg;
  j["texture_contrast"] = s.texture_contrast;
  j["seed"] = s.seed;
  j["photo_count"] = s.photo_count;
  j["width"] = s.width;
  j["height"] = s.height;
  j["focal"] = s.focal;
  j["photo_focal"] = s.photo_focal;
  j["look_at"] = vec_to_json(s.look_at);
  j["position_jitter"] = s.position_jitter;
  j["rotation_jitter"] = s.rotation_jitter;
  j["gain_range"] = {s.gain_range.first, s.gain_range.second};
  j["bias_range"] = {s.bias_range.first, s.bias_range.second};
  j["outlier_probability"] = s.outlier_probability;
  j["time_span"] = {s.time_span.first, s.time_span.second};
  j["point_count"] = s.point_count;
  return j.dump(2) + "\n";
}

SyntheticSceneSpec spec_from_string(const std::string& text) {
  SyntheticSceneSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    auto get_vec = [&](const char* key, Eigen::Vector3d& field) {
      if (j.contains(key)) field = vec_from_json(j.at(key));
    };
    auto get_pair = [&](const char* key, std::pair<double, double>& field) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw Error(ErrorCode::kInvalidSpec, std::string(key) + " needs 2 values");
      field = {v[0], v[1]};
    };
    get("background_depth", s.background_depth);
    get("background_slope", s.background_slope);
    get("background_frequency", s.background_frequency);
    get("has_box", s.has_box);
    get_vec("box_center", s.box_center);
    get_vec("box_size", s.box_size);
    get("appear_time", s.appear_time);
    get("box_frequency", s.box_frequency);
    get("box_yaw_deg", s.box_yaw_deg);
    get("texture_contrast", s.texture_contrast);
    get("seed", s.seed);
    get("photo_count", s.photo_count);
    get("width", s.width);
    get("height", s.height);
    get("focal", s.focal);
    get("photo_focal", s.photo_focal);
    get_vec("look_at", s.look_at);
    get("position_jitter", s.position_jitter);
    get("rotation_jitter", s.rotation_jitter);
    get_pair("gain_range", s.gain_range);
    get_pair("bias_range", s.bias_range);
    get("outlier_probability", s.outlier_probability);
    get_pair("time_span", s.time_span);
    get("point_count", s.point_count);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("malformed scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticScene::SyntheticScene(SyntheticSceneSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

bool SyntheticScene::box_present(double timestamp) const {
  if (!spec_.has_box) return false;
  const auto [t0, t1] = spec_.time_span;
  return (timestamp - t0) / (t1 - t0) >= spec_.appear_time;
}

Camera SyntheticScene::reference_camera() const {
  Camera c;
  c.focal = {spec_.focal, spec_.focal};
  c.principal_point = {(spec_.width - 1) / 2.0, (spec_.height - 1) / 2.0};
  c.center = Eigen::Vector3d::Zero();
  c.rotation = look_at_rotation(c.center, spec_.look_at);
  c.width = spec_.width;
  c.height = spec_.height;
  return c;
}

Rgb SyntheticScene::texture(const Eigen::Vector2d& uv, double frequency,
                            std::uint64_t salt, const Rgb& base) const {
  const std::uint64_t s = mix(spec_.seed ^ salt);
  auto octaves = [&](std::uint64_t k) {
    const double u = uv.x() * frequency, v = uv.y() * frequency;
    return 0.65 * value_noise(u, v, mix(s + k)) +
           0.35 * value_noise(2.0 * u + 17.0, 2.0 * v + 31.0, mix(s + k + 100));
  };
  const double shade = octaves(0) - 0.5;
  Rgb c;
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] = base[ch] + spec_.texture_contrast * (2.0 * shade + 0.5 * (octaves(1 + ch) - 0.5));
  }
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<SurfaceHit> SyntheticScene::trace(const Camera& camera,
                                                const Eigen::Vector2d& pixel,
                                                double timestamp) const {
  const Eigen::Vector3d dir_cam((pixel.x() - camera.principal_point.x()) / camera.focal.x(),
                                (pixel.y() - camera.principal_point.y()) / camera.focal.y(),
                                1.0);
  // With camera-z of the direction equal to 1, the ray parameter is the depth.
  const Eigen::Vector3d dir = camera.rotation.transpose() * dir_cam;
  const Eigen::Vector3d& o = camera.center;

  std::optional<SurfaceHit> best;
  const Eigen::Vector3d n(-spec_.background_slope, 0.0, 1.0);
  const double denom = n.dot(dir);
  if (std::abs(denom) > 1e-12) {
    const double t = (spec_.background_depth - n.dot(o)) / denom;
    if (t > 0.0) {
      const Eigen::Vector3d p = o + t * dir;
      const Eigen::Vector2d uv(p.x() * std::sqrt(1.0 + spec_.background_slope * spec_.background_slope), p.y());
      best = SurfaceHit{t, p, texture(uv, spec_.background_frequency, 0x51, Rgb(0.5, 0.48, 0.42)), false};
    }
  }

  if (box_present(timestamp)) {
    // slab test in the box frame (yawed about the vertical axis)
    const Eigen::Matrix3d yaw =
        Eigen::AngleAxisd(spec_.box_yaw_deg * M_PI / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Vector3d lo = -spec_.box_size / 2.0;
    const Eigen::Vector3d hi = spec_.box_size / 2.0;
    const Eigen::Vector3d o_box = yaw.transpose() * (o - spec_.box_center);
    const Eigen::Vector3d d_box = yaw.transpose() * dir;
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d_box[a]) < 1e-15) {
        if (o_box[a] < lo[a] || o_box[a] > hi[a]) { t_enter = 1.0; t_exit = 0.0; break; }
        continue;
      }
      double t1 = (lo[a] - o_box[a]) / d_box[a];
      double t2 = (hi[a] - o_box[a]) / d_box[a];
      if (t1 > t2) std::swap(t1, t2);
      if (t1 > t_enter) { t_enter = t1; axis = a; }
      t_exit = std::min(t_exit, t2);
    }
    if (axis >= 0 && t_enter <= t_exit && t_enter > 0.0 && (!best || t_enter < best->depth)) {
      const Eigen::Vector3d p = o + t_enter * dir;
      const Eigen::Vector3d q = o_box + t_enter * d_box - lo;
      const Eigen::Vector2d uv = axis == 0 ? Eigen::Vector2d(q.z(), q.y())
                                 : axis == 1 ? Eigen::Vector2d(q.x(), q.z())
                                             : Eigen::Vector2d(q.x(), q.y());
      best = SurfaceHit{t_enter, p,
                        texture(uv, spec_.box_frequency, 0xb0 + axis, Rgb(0.55, 0.4, 0.35)), true};
    }
  }
  return best;
}

RgbImage SyntheticScene::render(const Camera& camera, double timestamp) const {
  RgbImage out(camera.width, camera.height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      // 3x3 box-filtered supersampling
      Rgb sum = Rgb::Zero();
      for (int sy = -1; sy <= 1; ++sy) {
        for (int sx = -1; sx <= 1; ++sx) {
          const auto hit = trace(camera, Eigen::Vector2d(x + sx / 3.0, y + sy / 3.0), timestamp);
          if (hit) sum += hit->albedo;
        }
      }
      out(x, y) = sum / 9.0;
    }
  }
  return out;
}

Raster<double> SyntheticScene::depth(const Camera& camera, double timestamp) const {
  Raster<double> out(camera.width, camera.height, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      if (const auto hit = trace(camera, Eigen::Vector2d(x, y), timestamp)) out(x, y) = hit->depth;
    }
  }
  return out;
}

SyntheticDataset generate_synthetic_scene(const SyntheticSceneSpec& spec) {
  const SyntheticScene scene(spec);
  SyntheticDataset data;
  data.spec = spec;
  data.reference = scene.reference_camera();
  Rng rng(mix(spec.seed ^ 0x70686f746fULL));

  const int n = spec.photo_count;
  const auto [t0, t1] = spec.time_span;
  const double r = spec.position_jitter;
  data.photos.resize(n);
  struct Noise {
    double gain, bias;
    bool outlier;
    int x0, y0, x1, y1;
    Rgb color;
  };
  std::vector<Noise> noise(n);
  const double phase = rng.uniform();
  for (int i = 0; i < n; ++i) {
    auto& photo = data.photos[i];
    photo.timestamp = t0 + (t1 - t0) * (i + rng.uniform()) / n;
    Camera c = data.reference;
    c.focal = {spec.photo_focal, spec.photo_focal};
    // Horizontal offsets follow a golden-ratio sequence so every run of
    // consecutive photos spreads across the baseline.
    const double sweep = std::fmod(phase + 0.6180339887498949 * i, 1.0);
    c.center += Eigen::Vector3d(r * (2.0 * sweep - 1.0), rng.uniform(-0.25 * r, 0.25 * r),
                                rng.uniform(-0.15 * r, 0.15 * r));
    Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double angle = rng.uniform(0.0, spec.rotation_jitter);
    c.rotation = look_at_rotation(c.center, spec.look_at);
    if (angle > 0.0 && axis.norm() > 1e-9) {
      c.rotation = axis_angle(axis.normalized(), angle) * c.rotation;
    }
    photo.camera = c;

    Noise& nz = noise[i];
    nz.gain = rng.uniform(spec.gain_range.first, spec.gain_range.second);
    nz.bias = rng.uniform(spec.bias_range.first, spec.bias_range.second);
    nz.outlier = rng.uniform() < spec.outlier_probability;
    const double area = rng.uniform(0.05, 0.15) * spec.width * spec.height;
    const double aspect = rng.uniform(0.5, 2.0);
    const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, spec.width);
    const int h = std::clamp(static_cast<int>(std::lround(area / w)), 1, spec.height);
    nz.x0 = rng.index(spec.width - w + 1);
    nz.y0 = rng.index(spec.height - h + 1);
    nz.x1 = nz.x0 + w;
    nz.y1 = nz.y0 + h;
    nz.color = Rgb(rng.uniform(), rng.uniform(), rng.uniform());
  }

  for (int i = 0; i < n; ++i) {
    auto& photo = data.photos[i];
    photo.image = scene.render(photo.camera, photo.timestamp);
    const Noise& nz = noise[i];
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        Rgb& v = photo.image(x, y);
        if (nz.outlier && x >= nz.x0 && x < nz.x1 && y >= nz.y0 && y < nz.y1) {
          v = nz.color;
        } else {
          v = (nz.gain * v.array() + nz.bias).cwiseMax(0.0).cwiseMin(1.0);
        }
      }
    }
  }

  // Sparse points: random pixels of random photos, observed wherever the
  // same surface point is the first hit.
  for (int k = 0; k < spec.point_count; ++k) {
    const int i = rng.index(n);
    const Eigen::Vector2d px(rng.uniform(0.0, spec.width - 1.0), rng.uniform(0.0, spec.height - 1.0));
    const auto& src = data.photos[i];
    const auto hit = scene.trace(src.camera, px, src.timestamp);
    if (!hit) continue;
    SparsePoint pt;
    pt.position = hit->point;
    for (int o = 0; o < n; ++o) {
      const auto& obs = data.photos[o];
      const auto proj = try_project(obs.camera, pt.position);
      if (!proj || !obs.camera.in_bounds(proj->pixel)) continue;
      const auto h2 = scene.trace(obs.camera, proj->pixel, obs.timestamp);
      if (h2 && (h2->point - pt.position).norm() <= 1e-6 * proj->depth) {
        pt.observers.push_back(o);
      }
    }
    if (pt.observers.size() >= 2) data.points.push_back(std::move(pt));
  }
  return data;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "gt_depth");
  const SyntheticScene scene(data.spec);
  Manifest manifest;
  manifest.points = data.points;
  manifest.reference = data.reference;
  char name[64];
  for (std::size_t i = 0; i < data.photos.size(); ++i) {
    const auto& p = data.photos[i];
    std::snprintf(name, sizeof(name), "depth_%04zu.pfm", i);
    write_pfm(dir / "gt_depth" / name, scene.depth(p.camera, p.timestamp));
    std::snprintf(name, sizeof(name), "images/photo_%04zu.png", i);
    write_png(dir / name, p.image);
    manifest.photos.push_back({name, p.camera, p.timestamp});
  }
  write_manifest(dir / "manifest.json", manifest);
  write_text(dir / "scene.json", spec_to_string(data.spec));
}

}  // namespace tlapse
