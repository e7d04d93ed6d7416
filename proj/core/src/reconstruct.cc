#include "tlapse/reconstruct.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "tlapse/errors.h"

namespace tlapse {

ProjectedSample make_sample(const Eigen::Vector2d& position, const Rgb& color,
                            int width, int height) {
  ProjectedSample s;
  s.position = Eigen::Vector2d(std::clamp(position.x(), 0.0, width - 1.0),
                               std::clamp(position.y(), 0.0, height - 1.0));
  s.color = color;
  const int u0 = std::min(static_cast<int>(s.position.x()), std::max(width - 2, 0));
  const int v0 = std::min(static_cast<int>(s.position.y()), std::max(height - 2, 0));
  const int u1 = std::min(u0 + 1, width - 1);
  const int v1 = std::min(v0 + 1, height - 1);
  const double fx = s.position.x() - u0;
  const double fy = s.position.y() - v0;
  s.pixels = {Eigen::Vector2i(u0, v0), Eigen::Vector2i(u1, v0), Eigen::Vector2i(u0, v1),
              Eigen::Vector2i(u1, v1)};
  s.weights = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  return s;
}

Raster<double> normal_diagonal(std::span<const ProjectedSample> samples, int width,
                               int height) {
  Raster<double> diag(width, height, 0.0);
  for (const auto& s : samples) {
    // Degenerate cells (W or H == 1) repeat a pixel; the matrix entry is the
    // square of the summed weight.
    std::array<double, 4> merged = s.weights;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < a; ++b) {
        if (s.pixels[a] == s.pixels[b]) {
          merged[b] += merged[a];
          merged[a] = 0.0;
        }
      }
    }
    for (int a = 0; a < 4; ++a) {
      diag(s.pixels[a].x(), s.pixels[a].y()) += merged[a] * merged[a];
    }
  }
  return diag;
}

Frame reconstruct_frame(std::span<const ProjectedSample> samples, int width,
                        int height, const ReconstructOptions& options) {
  const int n = width * height;
  const Raster<double> diag = normal_diagonal(samples, width, height);
  for (int i = 0; i < n; ++i) {
    if (diag[i] < 1e-6) {
      throw Error(ErrorCode::kUnderConstrained,
                  "pixel (" + std::to_string(i % width) + ", " +
                      std::to_string(i / width) + ") has no supporting sample");
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(samples.size() * 16);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
  for (const auto& s : samples) {
    for (int a = 0; a < 4; ++a) {
      if (s.weights[a] == 0.0) continue;
      const int ia = s.pixels[a].y() * width + s.pixels[a].x();
      rhs.row(ia) += s.weights[a] * s.color.transpose();
      for (int b = 0; b < 4; ++b) {
        if (s.weights[b] == 0.0) continue;
        const int ib = s.pixels[b].y() * width + s.pixels[b].x();
        triplets.emplace_back(ia, ib, s.weights[a] * s.weights[b]);
      }
    }
  }
  Eigen::SparseMatrix<double> normal(n, n);
  normal.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>
      cg;
  cg.setTolerance(options.tolerance);
  cg.setMaxIterations(options.max_iterations);
  cg.compute(normal);

  Frame frame(width, height, Rgb::Zero());
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd b = rhs.col(c);
    const Eigen::VectorXd y = cg.solveWithGuess(b, Eigen::VectorXd::Zero(n));
    for (int i = 0; i < n; ++i) frame[i][c] = std::clamp(y[i], 0.0, 1.0);
  }
  return frame;
}

Frame splat_baseline(std::span<const ProjectedSample> samples, int width, int height,
                     double sigma) {
  Raster<double> weight(width, height, 0.0);
  Frame acc(width, height, Rgb::Zero());
  const double reach = 3.0 * sigma;
  for (const auto& s : samples) {
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.position.x() - reach)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(s.position.x() + reach)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(s.position.y() - reach)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(s.position.y() + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (s.position - Eigen::Vector2d(x, y)).squaredNorm();
        if (d2 > reach * reach) continue;
        const double g = std::exp(-d2 / (2.0 * sigma * sigma));
        weight(x, y) += g;
        acc(x, y) += g * s.color;
      }
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i] = weight[i] > 0.0 ? Rgb(acc[i] / weight[i]) : Rgb::Zero();
  }
  return acc;
}

DensityReport density_audit(std::span<const ProjectedSample> samples, int width,
                            int height, double epsilon) {
  Raster<double> nearest(width, height, std::numeric_limits<double>::infinity());
  Raster<double> best(width, height, 0.0);
  for (const auto& s : samples) {
    for (int a = 0; a < 4; ++a) {
      const Eigen::Vector2i& px = s.pixels[a];
      best(px.x(), px.y()) = std::max(best(px.x(), px.y()), s.weights[a]);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(s.position.x() - 1.0)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(s.position.x() + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.position.y() - 1.0)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(s.position.y() + 1.0)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = (s.position - Eigen::Vector2d(x, y)).norm();
        nearest(x, y) = std::min(nearest(x, y), d);
      }
    }
  }
  const Raster<double> diag = normal_diagonal(samples, width, height);

  DensityReport r;
  r.max_nearest_distance = 0.0;
  r.min_best_weight = std::numeric_limits<double>::infinity();
  r.min_normal_diagonal = std::numeric_limits<double>::infinity();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      r.max_nearest_distance = std::max(r.max_nearest_distance, nearest(x, y));
      r.min_best_weight = std::min(r.min_best_weight, best(x, y));
      r.min_normal_diagonal = std::min(r.min_normal_diagonal, diag(x, y));
      const bool far = nearest(x, y) > epsilon;
      const bool weak = best(x, y) <= 0.5;
      const bool thin = diag(x, y) < 0.25 - 1e-9;
      r.distance_violations += far;
      r.weight_violations += weak;
      r.diagonal_violations += thin;
      if (far || weak || thin) r.violations.emplace_back(x, y);
    }
  }
  return r;
}

}  // namespace tlapse
