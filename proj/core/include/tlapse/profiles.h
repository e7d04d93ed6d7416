#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlapse/camera.h"
#include "tlapse/raster.h"
#include "tlapse/tracks.h"

namespace tlapse {

// Disjoint partition of the input sequence: each photo belongs to the view
// nearest in time (ties to the lower view index).
struct ViewAssignment {
  std::vector<std::vector<int>> per_view;  // photo positions in the sequence
  std::vector<int> view_of;                // inverse map
};

ViewAssignment assign_support(std::span<const double> timestamps,
                              const ViewSequence& views);

struct Observation {
  int photo = 0;
  int view = 0;
  Rgb color = Rgb::Zero();
  bool visible = false;
};

struct ProfileParams {
  double lambda = 25.0;
  double huber_data = 1e-4;
  double huber_temporal = 1e-4;
  double occlusion_tolerance = 0.01;  // fraction of the sample's depth
  int max_iters = 200;
  double gradient_tolerance = 1e-8;
};

// Depthmap of a photo's assigned view rendered into the photo (at the
// depthmap's resolution), used as an occlusion test.
struct OcclusionBuffer {
  Camera camera;
  Raster<double> depth;  // +inf where nothing projected
};

std::vector<OcclusionBuffer> build_occlusion_buffers(std::span<const PosedImage> photos,
                                                     const ViewAssignment& assignment,
                                                     const DepthStack& stack);

std::vector<Observation> sample_observations(const Track& track,
                                             const ViewAssignment& assignment,
                                             std::span<const PosedImage> photos,
                                             std::span<const OcclusionBuffer> occlusion,
                                             const ProfileParams& params = {});

// Every photo of the sequence, each attached to the covered view nearest its
// assigned view. Fallback for tracks that no assigned photo sees.
std::vector<Observation> sample_observations_all(const Track& track,
                                                 const ViewAssignment& assignment,
                                                 std::span<const PosedImage> photos,
                                                 std::span<const OcclusionBuffer> occlusion,
                                                 const ProfileParams& params = {});

// Convenience overload that renders the occlusion buffers itself.
std::vector<Observation> sample_observations(const Track& track,
                                             const ViewAssignment& assignment,
                                             std::span<const PosedImage> photos,
                                             const DepthStack& stack,
                                             const ProfileParams& params = {});

// One scalar channel of the profile objective: sum of Huber data residuals
// per view plus lambda times Huber temporal differences.
struct ChainProblem {
  std::vector<std::vector<double>> observations;  // per covered view
  double lambda = 25.0;
  double huber_data = 1e-4;
  double huber_temporal = 1e-4;
};

double chain_objective(const ChainProblem& problem, std::span<const double> y);
std::vector<double> chain_gradient(const ChainProblem& problem,
                                   std::span<const double> y);

struct ChainReport {
  std::vector<double> energies;  // objective after each accepted iterate
  double gradient_norm = 0.0;    // infinity norm at the returned point
  int iterations = 0;
};

// Unclamped minimizer. Throws NoObservations when every view is empty.
std::vector<double> solve_chain(const ChainProblem& problem, int max_iters = 200,
                                double gradient_tolerance = 1e-8,
                                ChainReport* report = nullptr);

// Per-channel solve of the visible observations grouped by covered view;
// output clamped to [0, 1].
std::vector<Rgb> solve_profile(const std::vector<std::vector<Rgb>>& observations,
                               const ProfileParams& params = {});

struct ColorProfile {
  int start_view = 0;
  std::vector<Rgb> colors;
  std::vector<Eigen::Vector2d> projections;
  std::vector<std::uint32_t> observation_counts;
};

// Per profile: u32 record count, then records of (view u32, p 2 x f64,
// y 3 x f32, visible observation count u32); little-endian.
void write_profiles(std::ostream& out, std::span<const ColorProfile> profiles);
std::vector<ColorProfile> read_profiles(std::istream& in);

}  // namespace tlapse
