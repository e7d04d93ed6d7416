#include "tlapse/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>

#include "json.hpp"

#include "json_codec.h"
#include "tlapse/errors.h"
#include "tlapse/metrics.h"
#include "tlapse/synthetic.h"

namespace tlapse {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string numbered(const char* pattern, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, i);
  return buf;
}

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(ErrorCode::kIo, e.what()));
  }
}

double median_point_depth(const Manifest& m, const Camera& reference) {
  std::vector<double> depths;
  for (const auto& p : m.points) {
    const double z = reference.to_camera(p.position).z();
    if (z > 0.0) depths.push_back(z);
  }
  if (depths.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no sparse points in front of the reference");
  }
  auto mid = depths.begin() + (depths.size() - 1) / 2;
  std::nth_element(depths.begin(), mid, depths.end());
  return *mid;
}

json plane_json(const PlaneSet& p) {
  return {{"near", p.near_depth()}, {"far", p.far_depth()}, {"count", p.count()}};
}

}  // namespace

void PipelineConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  need(num_views >= 2, "num_views must be at least 2");
  need(depth_scale > 0.0 && depth_scale <= 1.0, "depth_scale must lie in (0, 1]");
  const double inv = 1.0 / depth_scale;
  need(std::abs(inv - std::round(inv)) < 1e-9, "1 / depth_scale must be an integer");
  need(planes >= 2, "need at least 2 planes");
  need(sigma > 0.0, "sigma must be positive");
  need(tracks.epsilon > 0.0 && tracks.epsilon <= 1.0, "epsilon must lie in (0, 1]");
  need(profiles.lambda >= 0.0, "lambda must be non-negative");
  need(profiles.huber_data > 0.0 && profiles.huber_temporal > 0.0,
       "Huber scales must be positive");
  need(depth.huber_scale > 0.0 && depth.k2 > 0.0, "depth Huber scale and k2 must be positive");
  need(!manifest.empty(), "manifest path is required");
  need(fs::exists(manifest), "manifest not found: " + manifest.string());
  if (ground_truth) need(fs::exists(*ground_truth), "ground truth not found: " + ground_truth->string());
}

std::string config_to_string(const PipelineConfig& c) {
  json j;
  j["manifest"] = c.manifest.string();
  j["output_dir"] = c.output_dir.string();
  if (c.reference) j["reference"] = camera_to_json(*c.reference);
  j["path"] = {{"type", std::string(to_string(c.path.type))},
               {"pivot", vec_to_json(c.path.pivot)},
               {"angle_deg", c.path.angle_deg},
               {"distance", c.path.distance}};
  j["num_views"] = c.num_views;
  j["depth_scale"] = c.depth_scale;
  j["planes"] = c.planes;
  j["selection"] = {{"max_angle_deg", c.selection.max_angle_deg},
                    {"max_center_distance", c.selection.max_center_distance}};
  j["plane_options"] = {{"min_triangulation_deg", c.plane_options.min_triangulation_deg},
                        {"trim_fraction", c.plane_options.trim_fraction}};
  j["depth"] = {{"alpha", c.depth.alpha},
                {"k1", c.depth.k1},
                {"k2", c.depth.k2},
                {"huber_scale", c.depth.huber_scale},
                {"outer_iters", c.depth.max_outer_iters},
                {"inner_iters", c.depth.max_inner_iters},
                {"tolerance", c.depth.tolerance}};
  j["tracks"] = {{"epsilon", c.tracks.epsilon}};
  j["profiles"] = {{"lambda", c.profiles.lambda},
                   {"huber_data", c.profiles.huber_data},
                   {"huber_temporal", c.profiles.huber_temporal},
                   {"occlusion_tolerance", c.profiles.occlusion_tolerance},
                   {"max_iters", c.profiles.max_iters},
                   {"gradient_tolerance", c.profiles.gradient_tolerance}};
  j["render"] = {{"baseline", c.baseline}, {"sigma", c.sigma}};
  if (c.ground_truth) j["ground_truth"] = c.ground_truth->string();
  j["dump_cost_volume"] = c.dump_cost_volume;
  j["dump_tracks"] = c.dump_tracks;
  j["seed"] = c.seed;
  j["stages"] = {{"depth", c.stages.depth},
                 {"tracks", c.stages.tracks},
                 {"profiles", c.stages.profiles},
                 {"render", c.stages.render},
                 {"metrics", c.stages.metrics}};
  return j.dump(2) + "\n";
}

PipelineConfig config_from_string(const std::string& text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("reference")) c.reference = camera_from_json(j.at("reference"));
    if (j.contains("path")) {
      const auto& p = j.at("path");
      if (p.contains("type")) c.path.type = parse_path_type(p.at("type").get<std::string>());
      if (p.contains("pivot")) c.path.pivot = vec_from_json(p.at("pivot"));
      read_opt(p, "angle_deg", c.path.angle_deg);
      read_opt(p, "distance", c.path.distance);
    }
    read_opt(j, "num_views", c.num_views);
    read_opt(j, "depth_scale", c.depth_scale);
    read_opt(j, "planes", c.planes);
    if (j.contains("selection")) {
      read_opt(j["selection"], "max_angle_deg", c.selection.max_angle_deg);
      read_opt(j["selection"], "max_center_distance", c.selection.max_center_distance);
    }
    if (j.contains("plane_options")) {
      read_opt(j["plane_options"], "min_triangulation_deg", c.plane_options.min_triangulation_deg);
      read_opt(j["plane_options"], "trim_fraction", c.plane_options.trim_fraction);
    }
    if (j.contains("depth")) {
      const auto& d = j.at("depth");
      read_opt(d, "alpha", c.depth.alpha);
      read_opt(d, "k1", c.depth.k1);
      read_opt(d, "k2", c.depth.k2);
      read_opt(d, "huber_scale", c.depth.huber_scale);
      read_opt(d, "outer_iters", c.depth.max_outer_iters);
      read_opt(d, "inner_iters", c.depth.max_inner_iters);
      read_opt(d, "tolerance", c.depth.tolerance);
    }
    if (j.contains("tracks")) read_opt(j["tracks"], "epsilon", c.tracks.epsilon);
    if (j.contains("profiles")) {
      const auto& p = j.at("profiles");
      read_opt(p, "lambda", c.profiles.lambda);
      read_opt(p, "huber_data", c.profiles.huber_data);
      read_opt(p, "huber_temporal", c.profiles.huber_temporal);
      read_opt(p, "occlusion_tolerance", c.profiles.occlusion_tolerance);
      read_opt(p, "max_iters", c.profiles.max_iters);
      read_opt(p, "gradient_tolerance", c.profiles.gradient_tolerance);
    }
    if (j.contains("render")) {
      read_opt(j["render"], "baseline", c.baseline);
      read_opt(j["render"], "sigma", c.sigma);
    }
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
      c.ground_truth = fs::path(j.at("ground_truth").get<std::string>());
    }
    read_opt(j, "dump_cost_volume", c.dump_cost_volume);
    read_opt(j, "dump_tracks", c.dump_tracks);
    read_opt(j, "seed", c.seed);
    if (j.contains("stages")) {
      const auto& s = j.at("stages");
      read_opt(s, "depth", c.stages.depth);
      read_opt(s, "tracks", c.stages.tracks);
      read_opt(s, "profiles", c.stages.profiles);
      read_opt(s, "render", c.stages.render);
      read_opt(s, "metrics", c.stages.metrics);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed config: ") + e.what());
  }
  return c;
}

PreparedInput prepare_input(const PipelineConfig& config) {
  config.validate();
  PreparedInput in;
  in.manifest = read_manifest(config.manifest);
  if (config.reference) {
    in.reference = *config.reference;
  } else if (in.manifest.reference) {
    in.reference = *in.manifest.reference;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "no reference camera in config or manifest");
  }
  in.reference.validate();
  in.scene_scale = median_point_depth(in.manifest, in.reference);

  std::vector<Camera> cameras;
  std::vector<double> stamps;
  for (const auto& p : in.manifest.photos) {
    cameras.push_back(p.camera);
    stamps.push_back(p.timestamp);
  }
  in.selected = select_image_indices(cameras, stamps, in.reference, in.scene_scale,
                                     config.selection);
  const fs::path base = config.manifest.parent_path();
  for (std::size_t idx : in.selected) {
    const auto& p = in.manifest.photos[idx];
    PosedImage img;
    img.camera = p.camera;
    img.timestamp = p.timestamp;
    img.image = read_png(base / p.image);
    if (img.image.width() != p.camera.width || img.image.height() != p.camera.height) {
      throw Error(ErrorCode::kDimensionMismatch, p.image + " does not match its camera size");
    }
    in.times.push_back(p.timestamp);
    in.sequence.push_back(std::move(img));
  }
  in.views = generate_camera_path(in.reference, config.path, config.num_views,
                                  {in.times.front(), in.times.back()});
  for (const auto& v : in.views.views) in.depth_views.push_back(v.scaled(config.depth_scale));
  return in;
}

DepthStageResult solve_depth(const PreparedInput& in, const PipelineConfig& config,
                             std::vector<CostVolume>* volumes) {
  const int m = static_cast<int>(in.views.size());
  const int factor = static_cast<int>(std::lround(1.0 / config.depth_scale));
  std::vector<MatchingImage> matching(in.sequence.size());
  for (std::size_t i = 0; i < in.sequence.size(); ++i) {
    matching[i].camera = in.sequence[i].camera.scaled(config.depth_scale);
    matching[i].gray = to_gray(downsample(in.sequence[i].image, factor));
  }
  std::vector<Camera> all_cameras;
  for (const auto& p : in.manifest.photos) all_cameras.push_back(p.camera);

  DepthStageResult out;
  std::vector<SplineCost> splines;
  splines.reserve(m);
  for (int j = 0; j < m; ++j) {
    out.planes.push_back(compute_depth_planes(in.manifest.points, all_cameras,
                                              in.depth_views[j], config.planes,
                                              config.plane_options));
    const SupportSet support = support_set(j, in.times, in.views);
    std::vector<MatchingImage> images;
    for (int idx : support.indices) images.push_back(matching[idx]);
    CostVolume volume = aggregate(in.depth_views[j], images, out.planes[j]);
    splines.emplace_back(volume);
    out.initial.push_back(init_depthmap(splines.back(), out.planes[j], config.depth));
    if (volumes) volumes->push_back(std::move(volume));
  }
  out.optimized = out.initial;
  out.report = optimize_joint(out.optimized, splines, in.depth_views, config.depth);
  // Persisted as float32; keep the in-memory copy identical to what a resumed
  // run would read back.
  for (auto& d : out.optimized) {
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = to_float(d.values[i]);
  }
  return out;
}

ProfileStageResult solve_profiles(const PreparedInput& in, const DepthStack& stack,
                                  std::span<const Track> tracks,
                                  const ProfileParams& params) {
  const ViewAssignment assignment = assign_support(in.times, in.views);
  const auto buffers = build_occlusion_buffers(in.sequence, assignment, stack);
  std::vector<std::optional<ColorProfile>> solved(tracks.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const Track& track = tracks[t];
    std::vector<std::vector<Rgb>> grouped(track.length());
    std::size_t visible = 0;
    auto collect = [&](const std::vector<Observation>& obs) {
      for (const auto& o : obs) {
        if (!o.visible) continue;
        grouped[o.view - track.start_view].push_back(o.color);
        ++visible;
      }
    };
    collect(sample_observations(track, assignment, in.sequence, buffers, params));
    if (visible == 0) {
      collect(sample_observations_all(track, assignment, in.sequence, buffers, params));
    }
    if (visible == 0) {
      ProfileParams loose = params;
      loose.occlusion_tolerance = std::numeric_limits<double>::infinity();
      collect(sample_observations_all(track, assignment, in.sequence, buffers, loose));
    }
    if (visible == 0) {
      // Nothing sees the point: borrow the closest pixel of the photo nearest
      // in time to the middle of the track.
      const int k = track.length() / 2;
      const double t = in.views.times[track.start_view + k];
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < in.sequence.size(); ++i) {
        if (!try_project(in.sequence[i].camera, track.points[k])) continue;
        if (!best || std::abs(in.sequence[i].timestamp - t) < std::abs(in.sequence[*best].timestamp - t)) best = i;
      }
      if (best) {
        const PosedImage& photo = in.sequence[*best];
        const auto pr = project(photo.camera, track.points[k]);
        grouped[k].push_back(sample_bilinear_clamped(photo.image, pr.pixel.x(), pr.pixel.y()));
        ++visible;
      }
    }
    if (visible == 0) continue;
    ColorProfile p;
    p.start_view = track.start_view;
    p.colors = solve_profile(grouped, params);
    for (auto& c : p.colors) c = c.unaryExpr([](double v) { return to_float(v); });
    p.projections = track.projections;
    for (const auto& g : grouped) p.observation_counts.push_back(static_cast<std::uint32_t>(g.size()));
    solved[t] = std::move(p);
  }
  ProfileStageResult out;
  for (auto& s : solved) {
    if (s) {
      out.profiles.push_back(std::move(*s));
    } else {
      ++out.dropped_tracks;
    }
  }
  return out;
}

std::vector<ProjectedSample> view_samples(std::span<const ColorProfile> profiles, int view,
                                          int width, int height) {
  std::vector<ProjectedSample> samples;
  for (const auto& p : profiles) {
    const int k = view - p.start_view;
    if (k < 0 || k >= static_cast<int>(p.colors.size())) continue;
    samples.push_back(make_sample(p.projections[k], p.colors[k], width, height));
  }
  return samples;
}

std::string report_to_string(const PipelineReport& r) {
  json j;
  j["frames"] = json::array();
  double psnr_sum = 0.0, psnr_min = std::numeric_limits<double>::infinity();
  int psnr_count = 0;
  for (const auto& f : r.frames) {
    json e = {{"view", f.view}, {"time", f.time}};
    if (f.density) {
      e["coverage"] = {{"max_nearest_distance", f.density->max_nearest_distance},
                       {"min_best_weight", f.density->min_best_weight},
                       {"min_normal_diagonal", f.density->min_normal_diagonal},
                       {"violations", f.density->violations}};
    }
    if (f.psnr) {
      e["psnr"] = *f.psnr;
      psnr_sum += *f.psnr;
      psnr_min = std::min(psnr_min, *f.psnr);
      ++psnr_count;
    }
    if (f.splat_psnr) e["splat_psnr"] = *f.splat_psnr;
    j["frames"].push_back(std::move(e));
  }
  j["depth"] = json::array();
  double rmse_sum = 0.0;
  for (const auto& d : r.depth) {
    j["depth"].push_back({{"view", d.view},
                          {"rmse", d.rmse},
                          {"trimmed_rmse", d.trimmed_rmse},
                          {"pixels", d.pixels}});
    rmse_sum += d.rmse;
  }
  j["energy"] = {{"initial", r.initial_energy}, {"sweeps", r.sweep_energies}};
  j["tracks"] = {{"count", r.track_count}, {"dropped", r.dropped_tracks}};
  json summary = json::object();
  if (psnr_count > 0) {
    summary["mean_psnr"] = psnr_sum / psnr_count;
    summary["min_psnr"] = psnr_min;
  }
  if (!r.depth.empty()) summary["mean_depth_rmse"] = rmse_sum / r.depth.size();
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

PipelineReport run_pipeline(const PipelineConfig& config) {
  const fs::path out = config.output_dir;
  const PreparedInput in = run_stage("input", [&] { return prepare_input(config); });
  const int m = static_cast<int>(in.views.size());
  const int width = in.reference.width, height = in.reference.height;
  PipelineReport report;

  // depth
  std::vector<Depthmap> maps;
  run_stage("depth", [&] {
    const fs::path dir = out / "depth";
    if (config.stages.depth) {
      fs::create_directories(dir);
      std::vector<CostVolume> volumes;
      DepthStageResult r = solve_depth(in, config, config.dump_cost_volume ? &volumes : nullptr);
      json meta;
      meta["views"] = m;
      meta["selected"] = in.selected;
      meta["planes"] = json::array();
      for (const auto& p : r.planes) meta["planes"].push_back(plane_json(p));
      meta["energy"] = {{"initial", r.report.initial_energy}, {"sweeps", r.report.sweep_energies}};
      for (int j = 0; j < m; ++j) {
        write_pfm(dir / numbered("depth_%04d.pfm", j), r.optimized[j].values);
        if (config.dump_cost_volume) {
          std::ofstream f(dir / numbered("cost_%04d.cvol", j), std::ios::binary);
          write_cost_volume(f, volumes[j]);
        }
      }
      write_text(dir / "depth.json", meta.dump(2) + "\n");
      maps = std::move(r.optimized);
    } else {
      const json meta = json::parse(read_text(dir / "depth.json"));
      if (meta.at("views").get<int>() != m) {
        throw Error(ErrorCode::kDimensionMismatch, "stored depthmaps do not match num_views");
      }
      for (int j = 0; j < m; ++j) {
        const auto& p = meta.at("planes").at(j);
        Depthmap d;
        d.planes = PlaneSet(p.at("near").get<double>(), p.at("far").get<double>(),
                            p.at("count").get<int>());
        d.values = read_pfm(dir / numbered("depth_%04d.pfm", j));
        maps.push_back(std::move(d));
      }
    }
    const json meta = json::parse(read_text(dir / "depth.json"));
    report.initial_energy = meta.at("energy").at("initial").get<double>();
    report.sweep_energies = meta.at("energy").at("sweeps").get<std::vector<double>>();
  });
  const bool later = config.stages.tracks || config.stages.profiles || config.stages.render ||
                     config.stages.metrics;
  if (!later) return report;

  const DepthStack stack(std::move(maps), in.views.views);

  // tracks
  std::vector<Track> tracks;
  const bool need_tracks = config.stages.tracks || config.stages.profiles;
  if (need_tracks) {
    run_stage("tracks", [&] {
      const fs::path dir = out / "tracks";
      if (config.stages.tracks) {
        fs::create_directories(dir);
        tracks = generate_tracks(stack, config.tracks);
        std::ofstream f(dir / "tracks.bin", std::ios::binary);
        write_tracks(f, tracks);
        if (!f) throw Error(ErrorCode::kIo, "cannot write tracks.bin");
        if (config.dump_tracks) {
          std::ofstream csv(dir / "tracks.csv");
          csv << "track,view,x,y,X,Y,Z\n";
          csv.precision(17);
          for (std::size_t t = 0; t < tracks.size(); ++t) {
            for (int k = 0; k < tracks[t].length(); ++k) {
              const auto& p = tracks[t].projections[k];
              const auto& X = tracks[t].points[k];
              csv << t << ',' << tracks[t].start_view + k << ',' << p.x() << ',' << p.y()
                  << ',' << X.x() << ',' << X.y() << ',' << X.z() << '\n';
            }
          }
        }
      } else {
        std::ifstream f(dir / "tracks.bin", std::ios::binary);
        if (!f) throw Error(ErrorCode::kIo, "missing tracks artifact");
        tracks = read_tracks(f);
      }
    });
  }

  // profiles
  std::vector<ColorProfile> profiles;
  run_stage("profiles", [&] {
    const fs::path dir = out / "profiles";
    if (config.stages.profiles) {
      fs::create_directories(dir);
      ProfileStageResult r = solve_profiles(in, stack, tracks, config.profiles);
      std::ofstream f(dir / "profiles.bin", std::ios::binary);
      write_profiles(f, r.profiles);
      if (!f) throw Error(ErrorCode::kIo, "cannot write profiles.bin");
      write_text(dir / "profiles.json",
                 json({{"tracks", tracks.size()}, {"dropped", r.dropped_tracks}}).dump(2) + "\n");
      profiles = std::move(r.profiles);
    } else if (config.stages.render ||
               (config.stages.metrics && fs::exists(dir / "profiles.bin"))) {
      std::ifstream f(dir / "profiles.bin", std::ios::binary);
      if (!f) throw Error(ErrorCode::kIo, "missing profiles artifact");
      profiles = read_profiles(f);
    }
    if (!profiles.empty() || config.stages.profiles) {
      const json meta = json::parse(read_text(dir / "profiles.json"));
      report.track_count = meta.at("tracks").get<std::size_t>();
      report.dropped_tracks = meta.at("dropped").get<int>();
    }
  });

  // render
  if (config.stages.render) {
    run_stage("render", [&] {
      const fs::path dir = out / "frames";
      fs::create_directories(dir);
      for (int j = 0; j < m; ++j) {
        const auto samples = view_samples(profiles, j, width, height);
        write_png(dir / numbered("frame_%04d.png", j), reconstruct_frame(samples, width, height));
        if (config.baseline) {
          write_png(dir / numbered("splat_%04d.png", j),
                    splat_baseline(samples, width, height, config.sigma));
        }
      }
    });
  }

  // metrics
  if (config.stages.metrics) {
    run_stage("metrics", [&] {
      std::optional<SyntheticScene> scene;
      if (config.ground_truth) scene.emplace(spec_from_string(read_text(*config.ground_truth)));
      const fs::path frames = out / "frames";
      for (int j = 0; j < m; ++j) {
        FrameMetrics fm;
        fm.view = j;
        fm.time = in.views.times[j];
        // frame metrics only when the later artifacts exist (depth-only runs still get depth rmse)
        if (!profiles.empty()) {
          fm.density = density_audit(view_samples(profiles, j, width, height), width, height,
                                     config.tracks.epsilon);
        }
        if (scene) {
          const fs::path frame = frames / numbered("frame_%04d.png", j);
          if (fs::exists(frame)) {
            const RgbImage truth = scene->render(in.views.views[j], in.views.times[j]);
            fm.psnr = psnr(read_png(frame), truth);
            const fs::path splat = frames / numbered("splat_%04d.png", j);
            if (config.baseline && fs::exists(splat)) fm.splat_psnr = psnr(read_png(splat), truth);
          }

          const Depthmap& est = stack.depthmap(j);
          const Raster<double> gt_depth = scene->depth(stack.depth_camera(j), in.views.times[j]);
          Raster<double> gt(est.width(), est.height());
          Raster<std::uint8_t> mask(est.width(), est.height());
          const double hi = est.planes.count() - 1.0;
          for (std::size_t i = 0; i < gt.size(); ++i) {
            if (!std::isfinite(gt_depth[i])) continue;
            gt[i] = std::clamp(est.planes.disparity(gt_depth[i]), 0.0, hi);
            mask[i] = 1;
          }
          const DepthError e = depth_error(est.values, gt, mask);
          report.depth.push_back({j, e.rmse, e.trimmed_rmse, e.count});
        }
        report.frames.push_back(std::move(fm));
      }
      write_text(out / "metrics.json", report_to_string(report));
    });
  }
  return report;
}

}  // namespace tlapse
