#pragma once

#include <span>
#include <vector>

#include "tlapse/camera.h"
#include "tlapse/cost_volume.h"
#include "tlapse/depthmap.h"

namespace tlapse {

struct HuberLoss {
  double scale = 0.1;
};

struct LossEval {
  double value;
  double derivative;
};

// x^2 / (2s) inside |x| <= s, |x| - s/2 outside.
LossEval huber(const HuberLoss& loss, double x);

// rho'(x) / x, the reweighting factor used by IRLS: min(1/s, 1/|x|).
double huber_weight(const HuberLoss& loss, double x);

struct DepthSolverParams {
  double alpha = 0.4;
  double k1 = 30.0;
  double k2 = 8.0;
  double huber_scale = 0.1;
  int max_outer_iters = 2;
  // Inner descent stops once an accepted step lowers the frame energy by less
  // than this fraction.
  double tolerance = 1e-6;
  int max_inner_iters = 30;
};

// k1 * max(1 - |j' - j| / k2, 0)
double temporal_weight(int j, int j_other, const DepthSolverParams& params);

// Full joint energy: data + alpha * spatial per frame, plus beta-weighted
// temporal terms over ordered frame pairs, each summed over the valid
// z-buffered projections. `views` are the depth-resolution cameras.
// Throws DimensionMismatch.
double energy(std::span<const Depthmap> depthmaps, std::span<const SplineCost> volumes,
              std::span<const Camera> views, const DepthSolverParams& params);

// Analytic gradient of energy() with respect to depthmaps[frame], holding the
// z-buffer winner assignment fixed.
Raster<double> energy_gradient(std::span<const Depthmap> depthmaps,
                               std::span<const SplineCost> volumes,
                               std::span<const Camera> views,
                               const DepthSolverParams& params, int frame);

// Winner-take-all over the knots, then continuous descent on data + spatial.
Depthmap init_depthmap(const SplineCost& volume, const PlaneSet& planes,
                       const DepthSolverParams& params);

struct JointReport {
  double initial_energy = 0.0;
  std::vector<double> sweep_energies;  // after each full coordinate sweep
};

// Coordinate descent over frames (Gauss-Seidel); depthmaps are updated in
// place.
JointReport optimize_joint(std::vector<Depthmap>& depthmaps,
                           std::span<const SplineCost> volumes,
                           std::span<const Camera> views,
                           const DepthSolverParams& params);

}  // namespace tlapse
