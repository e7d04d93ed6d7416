#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlapse/raster.h"

namespace tlapse {

// A color sample at a real-valued position, with the bilinear weights tying
// it to its enclosing 2x2 pixel cell.
struct ProjectedSample {
  Eigen::Vector2d position;  // clamped into [0, W-1] x [0, H-1]
  Rgb color = Rgb::Zero();
  std::array<Eigen::Vector2i, 4> pixels;
  std::array<double, 4> weights{};
};

ProjectedSample make_sample(const Eigen::Vector2d& position, const Rgb& color,
                            int width, int height);

using Frame = RgbImage;

struct ReconstructOptions {
  double tolerance = 1e-8;  // CG relative residual
  int max_iterations = 10000;
};

// Least-squares frame whose bilinear interpolation best matches the samples,
// solved per channel by conjugate gradient on the normal equations and
// clamped to [0, 1] afterwards. Throws UnderConstrained when a pixel's summed
// squared weight is below 1e-6.
Frame reconstruct_frame(std::span<const ProjectedSample> samples, int width,
                        int height, const ReconstructOptions& options = {});

// Gaussian-weighted average of the samples (kernel truncated at 3 sigma);
// pixels out of reach of every sample are black.
Frame splat_baseline(std::span<const ProjectedSample> samples, int width, int height,
                     double sigma = 1.0);

// Diagonal of the normal matrix: per pixel, sum of squared sample weights.
Raster<double> normal_diagonal(std::span<const ProjectedSample> samples, int width,
                               int height);

struct DensityReport {
  double max_nearest_distance = 0.0;
  double min_best_weight = 1.0;
  double min_normal_diagonal = 1.0;
  // Pixels with no sample within epsilon, best weight <= 0.5, or normal
  // diagonal < 0.25.
  std::vector<Eigen::Vector2i> violations;
  int distance_violations = 0;
  int weight_violations = 0;
  int diagonal_violations = 0;
};

DensityReport density_audit(std::span<const ProjectedSample> samples, int width,
                            int height, double epsilon);

}  // namespace tlapse
