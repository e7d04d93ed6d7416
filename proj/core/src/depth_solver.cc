#include "tlapse/depth_solver.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "tlapse/errors.h"

namespace tlapse {

LossEval huber(const HuberLoss& loss, double x) {
  const double s = loss.scale;
  const double ax = std::abs(x);
  if (ax <= s) return {x * x / (2.0 * s), x / s};
  return {ax - 0.5 * s, x > 0.0 ? 1.0 : -1.0};
}

double huber_weight(const HuberLoss& loss, double x) {
  return 1.0 / std::max(std::abs(x), loss.scale);
}

double temporal_weight(int j, int j_other, const DepthSolverParams& params) {
  const double gap = std::abs(j_other - j);
  return params.k1 * std::max(1.0 - gap / params.k2, 0.0);
}

namespace {

void check_dimensions(std::span<const Depthmap> maps,
                      std::span<const SplineCost> volumes,
                      std::span<const Camera> views) {
  if (maps.size() != volumes.size() || maps.size() != views.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "depthmaps, volumes and views differ in count");
  }
  for (std::size_t j = 0; j < maps.size(); ++j) {
    if (maps[j].width() != volumes[j].width() ||
        maps[j].height() != volumes[j].height() ||
        maps[j].width() != views[j].width || maps[j].height() != views[j].height ||
        maps[j].planes.count() != volumes[j].planes()) {
      throw Error(ErrorCode::kDimensionMismatch, "frame " + std::to_string(j) +
                                                     " has inconsistent sizes");
    }
  }
}

// d(target disparity) / d(source disparity) for a source pixel reprojected
// into the target view.
double disparity_jacobian(const Camera& src_view, const PlaneSet& src_planes,
                          const Camera& dst_view, const PlaneSet& dst_planes,
                          int x, int y, double src_disparity) {
  const Eigen::Vector3d ray((x - src_view.principal_point.x()) / src_view.focal.x(),
                            (y - src_view.principal_point.y()) / src_view.focal.y(),
                            1.0);
  const double g = (dst_view.rotation * (src_view.rotation.transpose() * ray)).z();
  const double zs = src_planes.depth(src_disparity);
  const Eigen::Vector3d q = src_view.rotation.transpose() * (zs * ray) + src_view.center;
  const double zt = dst_view.to_camera(q).z();
  return g * zs * zs * src_planes.inverse_step() / (zt * zt * dst_planes.inverse_step());
}

struct NeighborTerm {
  int other;
  double beta;
  ReprojectedDepthmap into_frame;  // D_other -> frame, fixed while frame moves
};

// The part of the joint energy that depends on one frame's depthmap.
class FrameObjective {
 public:
  FrameObjective(int frame, std::span<const Depthmap> maps,
                 std::span<const SplineCost> volumes, std::span<const Camera> views,
                 const DepthSolverParams& params, bool temporal)
      : frame_(frame), maps_(maps), volume_(volumes[frame]), views_(views),
        params_(params), loss_{params.huber_scale} {
    if (!temporal) return;
    for (int o = 0; o < static_cast<int>(maps.size()); ++o) {
      if (o == frame) continue;
      const double beta = temporal_weight(frame, o, params);
      if (beta <= 0.0) continue;
      neighbors_.push_back({o, beta, {}});
    }
#pragma omp parallel for schedule(dynamic)
    for (std::size_t n = 0; n < neighbors_.size(); ++n) {
      const int o = neighbors_[n].other;
      neighbors_[n].into_frame = reproject_depthmap(maps[o], views[o], views[frame],
                                                    maps[frame].planes);
    }
  }

  const PlaneSet& planes() const { return maps_[frame_].planes; }

  // Energy and, optionally, gradient plus a Gauss-Newton diagonal (data
  // curvature and temporal IRLS weights). Spatial IRLS weights go to
  // `edge_weights` (right edge then down edge per pixel).
  double evaluate(const Raster<double>& d, Raster<double>* grad = nullptr,
                  Raster<double>* diag = nullptr,
                  std::vector<double>* edge_weights = nullptr) const {
    const int w = d.width();
    const int h = d.height();
    if (grad) *grad = Raster<double>(w, h, 0.0);
    if (diag) *diag = Raster<double>(w, h, 0.0);
    if (edge_weights) edge_weights->assign(2 * d.size(), 0.0);

    double data = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const SplineSample s = volume_.eval(x, y, d(x, y));
        data += s.value;
        if (grad) (*grad)(x, y) += s.derivative;
        if (diag) (*diag)(x, y) += std::max(s.second_derivative, 0.0);
      }
    }

    double spatial = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int e = 0; e < 2; ++e) {
          const int nx = x + (e == 0);
          const int ny = y + (e == 1);
          if (nx >= w || ny >= h) continue;
          const double r = d(x, y) - d(nx, ny);
          const LossEval l = huber(loss_, r);
          spatial += l.value;
          if (grad) {
            (*grad)(x, y) += params_.alpha * l.derivative;
            (*grad)(nx, ny) -= params_.alpha * l.derivative;
          }
          if (edge_weights) {
            (*edge_weights)[2 * d.index(x, y) + e] =
                params_.alpha * huber_weight(loss_, r);
          }
        }
      }
    }

    // Terms where this frame is compared against a neighbor's projection.
    double forward = 0.0;
    for (const auto& nb : neighbors_) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!nb.into_frame.valid[i]) continue;
        const double r = d[i] - nb.into_frame.values[i];
        const LossEval l = huber(loss_, r);
        forward += nb.beta * l.value;
        if (grad) (*grad)[i] += nb.beta * l.derivative;
        if (diag) (*diag)[i] += nb.beta * huber_weight(loss_, r);
      }
    }

    // Terms where this frame's projection is compared against a neighbor.
    std::vector<double> backward_terms(neighbors_.size(), 0.0);
    std::vector<Raster<double>> back_grad(grad ? neighbors_.size() : 0);
    std::vector<Raster<double>> back_diag(diag ? neighbors_.size() : 0);
    const Depthmap self{d, planes()};
#pragma omp parallel for schedule(dynamic)
    for (std::size_t n = 0; n < neighbors_.size(); ++n) {
      const auto& nb = neighbors_[n];
      const Depthmap& other = maps_[nb.other];
      const ReprojectedDepthmap proj =
          reproject_depthmap(self, views_[frame_], views_[nb.other], other.planes);
      if (grad) back_grad[n] = Raster<double>(w, h, 0.0);
      if (diag) back_diag[n] = Raster<double>(w, h, 0.0);
      double sum = 0.0;
      for (std::size_t i = 0; i < proj.values.size(); ++i) {
        if (!proj.valid[i]) continue;
        const double r = other.values[i] - proj.values[i];
        const LossEval l = huber(loss_, r);
        sum += nb.beta * l.value;
        if (!grad && !diag) continue;
        const int src = proj.source[i];
        const int sx = src % w;
        const int sy = src / w;
        const double jac =
            disparity_jacobian(views_[frame_], planes(), views_[nb.other],
                               other.planes, sx, sy, d[src]);
        if (grad) back_grad[n][src] -= nb.beta * l.derivative * jac;
        if (diag) back_diag[n][src] += nb.beta * huber_weight(loss_, r) * jac * jac;
      }
      backward_terms[n] = sum;
    }
    double backward = 0.0;
    for (std::size_t n = 0; n < neighbors_.size(); ++n) {
      backward += backward_terms[n];
      if (grad) {
        for (std::size_t i = 0; i < d.size(); ++i) (*grad)[i] += back_grad[n][i];
      }
      if (diag) {
        for (std::size_t i = 0; i < d.size(); ++i) (*diag)[i] += back_diag[n][i];
      }
    }
    return data + params_.alpha * spatial + forward + backward;
  }

  // Projected Gauss-Newton / IRLS descent with backtracking on the true
  // objective; every accepted step strictly lowers the energy.
  Raster<double> minimize(Raster<double> d) const {
    const double upper = planes().count() - 1;
    const int w = d.width();
    const int h = d.height();
    const int n = static_cast<int>(d.size());
    constexpr double kDamping = 1e-2;

    Raster<double> grad, diag;
    std::vector<double> edges;
    double current = evaluate(d, &grad, &diag, &edges);

    for (int iter = 0; iter < params_.max_inner_iters; ++iter) {
      std::vector<char> frozen(n, 0);
      for (int i = 0; i < n; ++i) {
        frozen[i] = (d[i] <= 0.0 && grad[i] > 0.0) || (d[i] >= upper && grad[i] < 0.0);
      }
      std::vector<Eigen::Triplet<double>> triplets;
      triplets.reserve(5 * n);
      Eigen::VectorXd rhs(n);
      Eigen::VectorXd hdiag(n);
      for (int i = 0; i < n; ++i) hdiag[i] = diag[i] + kDamping;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int i = static_cast<int>(d.index(x, y));
          for (int e = 0; e < 2; ++e) {
            const int nx = x + (e == 0);
            const int ny = y + (e == 1);
            if (nx >= w || ny >= h) continue;
            const int k = static_cast<int>(d.index(nx, ny));
            const double we = edges[2 * i + e];
            hdiag[i] += we;
            hdiag[k] += we;
            if (!frozen[i] && !frozen[k]) {
              triplets.emplace_back(i, k, -we);
              triplets.emplace_back(k, i, -we);
            }
          }
        }
      }
      for (int i = 0; i < n; ++i) {
        triplets.emplace_back(i, i, frozen[i] ? 1.0 : hdiag[i]);
        rhs[i] = frozen[i] ? 0.0 : -grad[i];
      }
      Eigen::SparseMatrix<double> hessian(n, n);
      hessian.setFromTriplets(triplets.begin(), triplets.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(hessian);
      if (solver.info() != Eigen::Success) break;
      const Eigen::VectorXd step = solver.solve(rhs);

      bool accepted = false;
      double trial_value = current;
      Raster<double> trial = d;
      for (double t = 1.0; t > 1e-6; t *= 0.5) {
        for (int i = 0; i < n; ++i) trial[i] = std::clamp(d[i] + t * step[i], 0.0, upper);
        trial_value = evaluate(trial);
        if (trial_value < current) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      const double decrease = current - trial_value;
      d = std::move(trial);
      current = evaluate(d, &grad, &diag, &edges);
      if (decrease < params_.tolerance * std::max(std::abs(current), 1.0)) break;
    }
    return d;
  }

 private:
  int frame_;
  std::span<const Depthmap> maps_;
  const SplineCost& volume_;
  std::span<const Camera> views_;
  DepthSolverParams params_;
  HuberLoss loss_;
  std::vector<NeighborTerm> neighbors_;
};

}  // namespace

double energy(std::span<const Depthmap> depthmaps, std::span<const SplineCost> volumes,
              std::span<const Camera> views, const DepthSolverParams& params) {
  check_dimensions(depthmaps, volumes, views);
  const HuberLoss loss{params.huber_scale};
  const int m = static_cast<int>(depthmaps.size());
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    const Depthmap& dm = depthmaps[j];
    double data = 0.0, spatial = 0.0;
    for (int y = 0; y < dm.height(); ++y) {
      for (int x = 0; x < dm.width(); ++x) {
        data += volumes[j].eval(x, y, dm.values(x, y)).value;
        if (x + 1 < dm.width()) {
          spatial += huber(loss, dm.values(x, y) - dm.values(x + 1, y)).value;
        }
        if (y + 1 < dm.height()) {
          spatial += huber(loss, dm.values(x, y) - dm.values(x, y + 1)).value;
        }
      }
    }
    total += data + params.alpha * spatial;
  }
  for (int j = 0; j < m; ++j) {
    for (int o = 0; o < m; ++o) {
      if (o == j) continue;
      const double beta = temporal_weight(j, o, params);
      if (beta <= 0.0) continue;
      const ReprojectedDepthmap proj =
          reproject_depthmap(depthmaps[o], views[o], views[j], depthmaps[j].planes);
      double sum = 0.0;
      for (std::size_t i = 0; i < proj.values.size(); ++i) {
        if (proj.valid[i]) {
          sum += huber(loss, depthmaps[j].values[i] - proj.values[i]).value;
        }
      }
      total += beta * sum;
    }
  }
  return total;
}

Raster<double> energy_gradient(std::span<const Depthmap> depthmaps,
                               std::span<const SplineCost> volumes,
                               std::span<const Camera> views,
                               const DepthSolverParams& params, int frame) {
  check_dimensions(depthmaps, volumes, views);
  const FrameObjective objective(frame, depthmaps, volumes, views, params, true);
  Raster<double> grad;
  objective.evaluate(depthmaps[frame].values, &grad);
  return grad;
}

Depthmap init_depthmap(const SplineCost& volume, const PlaneSet& planes,
                       const DepthSolverParams& params) {
  if (volume.planes() != planes.count()) {
    throw Error(ErrorCode::kDimensionMismatch, "volume and plane set disagree");
  }
  Depthmap dm{Raster<double>(volume.width(), volume.height(), 0.0), planes};
  for (int y = 0; y < volume.height(); ++y) {
    for (int x = 0; x < volume.width(); ++x) {
      int best = 0;
      for (int k = 1; k < volume.planes(); ++k) {
        if (volume.knot(x, y, k) < volume.knot(x, y, best)) best = k;
      }
      dm.values(x, y) = best;
    }
  }
  Camera grid;
  grid.width = volume.width();
  grid.height = volume.height();
  const std::vector<Depthmap> maps{dm};
  const FrameObjective objective(0, maps, std::span(&volume, 1), std::span(&grid, 1),
                                 params, false);
  dm.values = objective.minimize(dm.values);
  return dm;
}

JointReport optimize_joint(std::vector<Depthmap>& depthmaps,
                           std::span<const SplineCost> volumes,
                           std::span<const Camera> views,
                           const DepthSolverParams& params) {
  check_dimensions(depthmaps, volumes, views);
  JointReport report;
  report.initial_energy = energy(depthmaps, volumes, views, params);
  const int m = static_cast<int>(depthmaps.size());
  for (int it = 0; it < params.max_outer_iters; ++it) {
    for (int j = 0; j < m; ++j) {
      const FrameObjective objective(j, depthmaps, volumes, views, params, true);
      depthmaps[j].values = objective.minimize(depthmaps[j].values);
    }
    report.sweep_energies.push_back(energy(depthmaps, volumes, views, params));
  }
  return report;
}

}  // namespace tlapse
