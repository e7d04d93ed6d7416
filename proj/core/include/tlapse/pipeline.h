#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tlapse/camera.h"
#include "tlapse/cost_volume.h"
#include "tlapse/depth_solver.h"
#include "tlapse/depthmap.h"
#include "tlapse/io.h"
#include "tlapse/profiles.h"
#include "tlapse/reconstruct.h"
#include "tlapse/tracks.h"

namespace tlapse {

struct StageToggles {
  bool depth = true;
  bool tracks = true;
  bool profiles = true;
  bool render = true;
  bool metrics = true;
};

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "out";
  std::optional<Camera> reference;  // defaults to the manifest's reference
  PathSpec path;
  int num_views = 20;
  double depth_scale = 0.5;
  int planes = 64;
  SelectionThresholds selection;
  DepthPlaneOptions plane_options;
  DepthSolverParams depth;
  TrackGenParams tracks;
  ProfileParams profiles;
  bool baseline = false;
  double sigma = 1.0;
  // scene.json of a synthetic dataset; enables PSNR and depth RMSE metrics.
  std::optional<std::filesystem::path> ground_truth;
  bool dump_cost_volume = false;
  bool dump_tracks = false;
  std::uint64_t seed = 0;
  StageToggles stages;

  // Throws InvalidArgument.
  void validate() const;
};

std::string config_to_string(const PipelineConfig& config);
// Missing keys keep their defaults.
PipelineConfig config_from_string(const std::string& text);

// Everything derived from the manifest before any stage runs.
struct PreparedInput {
  Manifest manifest;
  Camera reference;
  double scene_scale = 0.0;
  std::vector<std::size_t> selected;  // manifest indices, chronological
  std::vector<PosedImage> sequence;   // selected photos
  std::vector<double> times;
  ViewSequence views;                 // output resolution
  std::vector<Camera> depth_views;    // depthmap resolution
};

PreparedInput prepare_input(const PipelineConfig& config);

struct DepthStageResult {
  std::vector<PlaneSet> planes;
  std::vector<Depthmap> initial;
  std::vector<Depthmap> optimized;
  JointReport report;
};

// Cost volumes, initialization and joint optimization. Optional sink for the
// raw cost volumes.
DepthStageResult solve_depth(const PreparedInput& input, const PipelineConfig& config,
                             std::vector<CostVolume>* volumes = nullptr);

struct ProfileStageResult {
  std::vector<ColorProfile> profiles;
  int dropped_tracks = 0;
};

ProfileStageResult solve_profiles(const PreparedInput& input, const DepthStack& stack,
                                  std::span<const Track> tracks,
                                  const ProfileParams& params);

// Samples contributed to view j by every profile covering it.
std::vector<ProjectedSample> view_samples(std::span<const ColorProfile> profiles, int view,
                                          int width, int height);

struct FrameMetrics {
  int view = 0;
  double time = 0.0;
  std::optional<double> psnr;
  std::optional<double> splat_psnr;
  std::optional<DensityReport> density;
};

struct DepthMetrics {
  int view = 0;
  double rmse = 0.0;
  double trimmed_rmse = 0.0;
  std::size_t pixels = 0;
};

struct PipelineReport {
  std::vector<FrameMetrics> frames;
  std::vector<DepthMetrics> depth;
  double initial_energy = 0.0;
  std::vector<double> sweep_energies;
  std::size_t track_count = 0;
  int dropped_tracks = 0;
};

std::string report_to_string(const PipelineReport& report);

// Runs the enabled stages; disabled stages are loaded from the artifacts in
// the output directory. Errors are rethrown as StageError.
PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace tlapse
