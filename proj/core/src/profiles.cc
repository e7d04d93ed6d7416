#include "tlapse/profiles.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "tlapse/cost_volume.h"
#include "tlapse/depth_solver.h"
#include "tlapse/errors.h"

namespace tlapse {

ViewAssignment assign_support(std::span<const double> timestamps,
                              const ViewSequence& views) {
  const int m = static_cast<int>(views.times.size());
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "no views");
  ViewAssignment a;
  a.per_view.resize(m);
  a.view_of.resize(timestamps.size());
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    int best = 0;
    double best_gap = std::abs(timestamps[i] - views.times[0]);
    for (int j = 1; j < m; ++j) {
      const double gap = std::abs(timestamps[i] - views.times[j]);
      if (gap < best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    a.view_of[i] = best;
    a.per_view[best].push_back(static_cast<int>(i));
  }
  return a;
}

std::vector<OcclusionBuffer> build_occlusion_buffers(std::span<const PosedImage> photos,
                                                     const ViewAssignment& assignment,
                                                     const DepthStack& stack) {
  std::vector<OcclusionBuffer> out(photos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < photos.size(); ++i) {
    const int j = assignment.view_of.at(i);
    const Depthmap& dm = stack.depthmap(j);
    const double scale = static_cast<double>(dm.width()) / stack.view(j).width;
    Camera cam = photos[i].camera.scaled(scale);
    ZBuffer zb = render_zbuffer(dm, stack.depth_camera(j), cam);
    out[i] = {cam, std::move(zb.depth)};
  }
  return out;
}

namespace {

Observation observe(const Eigen::Vector3d& q, int photo_index, int view,
                    std::span<const PosedImage> photos,
                    std::span<const OcclusionBuffer> occlusion, const ProfileParams& params) {
  Observation o;
  o.photo = photo_index;
  o.view = view;
  const PosedImage& photo = photos[photo_index];
  const auto proj = try_project(photo.camera, q);
  if (!proj || !photo.camera.in_bounds(proj->pixel)) return o;
  const OcclusionBuffer& ob = occlusion[photo_index];
  const auto zp = try_project(ob.camera, q);
  double front = std::numeric_limits<double>::infinity();
  if (zp) {
    const long u = std::lround(zp->pixel.x());
    const long v = std::lround(zp->pixel.y());
    if (ob.depth.contains(static_cast<int>(u), static_cast<int>(v))) {
      front = ob.depth(static_cast<int>(u), static_cast<int>(v));
    }
  }
  if (proj->depth <= front + params.occlusion_tolerance * proj->depth) {
    o.visible = true;
    o.color = *sample_bilinear(photo.image, proj->pixel.x(), proj->pixel.y());
  }
  return o;
}

}  // namespace

std::vector<Observation> sample_observations(const Track& track,
                                             const ViewAssignment& assignment,
                                             std::span<const PosedImage> photos,
                                             std::span<const OcclusionBuffer> occlusion,
                                             const ProfileParams& params) {
  std::vector<Observation> out;
  for (int k = 0; k < track.length(); ++k) {
    const int j = track.start_view + k;
    for (int i : assignment.per_view.at(j)) {
      out.push_back(observe(track.points[k], i, j, photos, occlusion, params));
    }
  }
  return out;
}

std::vector<Observation> sample_observations_all(const Track& track,
                                                 const ViewAssignment& assignment,
                                                 std::span<const PosedImage> photos,
                                                 std::span<const OcclusionBuffer> occlusion,
                                                 const ProfileParams& params) {
  std::vector<Observation> out;
  for (int i = 0; i < static_cast<int>(photos.size()); ++i) {
    const int j = std::clamp(assignment.view_of.at(i), track.start_view, track.end_view() - 1);
    out.push_back(observe(track.points[j - track.start_view], i, j, photos, occlusion, params));
  }
  return out;
}

std::vector<Observation> sample_observations(const Track& track,
                                             const ViewAssignment& assignment,
                                             std::span<const PosedImage> photos,
                                             const DepthStack& stack,
                                             const ProfileParams& params) {
  const auto buffers = build_occlusion_buffers(photos, assignment, stack);
  return sample_observations(track, assignment, photos, buffers, params);
}

double chain_objective(const ChainProblem& problem, std::span<const double> y) {
  const HuberLoss data{problem.huber_data};
  const HuberLoss temporal{problem.huber_temporal};
  double f = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    for (double x : problem.observations[j]) f += huber(data, y[j] - x).value;
  }
  double t = 0.0;
  for (std::size_t j = 0; j + 1 < y.size(); ++j) {
    t += huber(temporal, y[j + 1] - y[j]).value;
  }
  return f + problem.lambda * t;
}

std::vector<double> chain_gradient(const ChainProblem& problem,
                                   std::span<const double> y) {
  const HuberLoss data{problem.huber_data};
  const HuberLoss temporal{problem.huber_temporal};
  std::vector<double> g(y.size(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    for (double x : problem.observations[j]) g[j] += huber(data, y[j] - x).derivative;
  }
  for (std::size_t j = 0; j + 1 < y.size(); ++j) {
    const double d = problem.lambda * huber(temporal, y[j + 1] - y[j]).derivative;
    g[j + 1] += d;
    g[j] -= d;
  }
  return g;
}

namespace {

// Solves the symmetric tridiagonal system (diag, off) x = rhs, where off[j]
// couples j and j + 1.
std::vector<double> solve_tridiagonal(std::vector<double> diag,
                                      const std::vector<double>& off,
                                      std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t j = 1; j < n; ++j) {
    const double f = off[j - 1] / diag[j - 1];
    diag[j] -= f * off[j - 1];
    rhs[j] -= f * rhs[j - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) x[j] = (rhs[j] - off[j] * x[j + 1]) / diag[j];
  return x;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<double> solve_chain(const ChainProblem& problem, int max_iters,
                                double gradient_tolerance, ChainReport* report) {
  const std::size_t n = problem.observations.size();
  std::vector<double> all;
  for (const auto& v : problem.observations) all.insert(all.end(), v.begin(), v.end());
  if (all.empty()) {
    throw Error(ErrorCode::kNoObservations, "profile has no visible observations");
  }
  const double start = lower_median(all);
  std::vector<double> y(n, start);

  const double sd = problem.huber_data;
  const double st = problem.huber_temporal;
  const double lambda = problem.lambda;

  ChainReport local;
  double f = chain_objective(problem, y);
  local.energies.push_back(f);
  std::vector<double> g = chain_gradient(problem, y);

  // Levenberg-style blend of the exact (semismooth) Newton matrix and the
  // IRLS majorizer. With mu >= 1 the model majorizes the objective, so the
  // step is a guaranteed descent; small mu gives Newton's finite termination
  // once the active pattern is identified.
  double mu = 1e-3;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    if (inf_norm(g) < gradient_tolerance) break;
    std::vector<double> diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (double x : problem.observations[j]) {
        const double r = y[j] - x;
        const double newton = std::abs(r) <= sd ? 1.0 / sd : 0.0;
        diag[j] += newton + mu / std::max(std::abs(r), sd);
      }
    }
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double d = y[j + 1] - y[j];
      const double newton = std::abs(d) <= st ? 1.0 / st : 0.0;
      const double c = lambda * (newton + mu / std::max(std::abs(d), st));
      diag[j] += c;
      diag[j + 1] += c;
      off[j] = -c;
    }
    std::vector<double> rhs(n);
    for (std::size_t j = 0; j < n; ++j) rhs[j] = -g[j];
    const std::vector<double> step = solve_tridiagonal(diag, off, rhs);
    std::vector<double> trial(n);
    for (std::size_t j = 0; j < n; ++j) trial[j] = y[j] + step[j];
    const double ft = chain_objective(problem, trial);
    const bool finite = std::isfinite(ft);
    if (finite && ft < f) {
      y = std::move(trial);
      f = ft;
      g = chain_gradient(problem, y);
      local.energies.push_back(f);
      mu = std::max(mu * 0.1, 1e-12);
    } else {
      if (mu >= 1e8) break;
      mu *= 10.0;
    }
  }
  local.iterations = iter;
  local.gradient_norm = inf_norm(g);
  if (report) *report = std::move(local);
  return y;
}

std::vector<Rgb> solve_profile(const std::vector<std::vector<Rgb>>& observations,
                               const ProfileParams& params) {
  const std::size_t n = observations.size();
  std::vector<Rgb> out(n, Rgb::Zero());
  for (int c = 0; c < 3; ++c) {
    ChainProblem problem;
    problem.lambda = params.lambda;
    problem.huber_data = params.huber_data;
    problem.huber_temporal = params.huber_temporal;
    problem.observations.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (const Rgb& x : observations[j]) problem.observations[j].push_back(x[c]);
    }
    const auto y = solve_chain(problem, params.max_iters, params.gradient_tolerance);
    for (std::size_t j = 0; j < n; ++j) out[j][c] = std::clamp(y[j], 0.0, 1.0);
  }
  return out;
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
  if (!in) throw Error(ErrorCode::kIo, "truncated profile stream");
  return v;
}

}  // namespace

void write_profiles(std::ostream& out, std::span<const ColorProfile> profiles) {
  for (const auto& p : profiles) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.colors.size()));
    for (std::size_t k = 0; k < p.colors.size(); ++k) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p.start_view + k));
      put<double>(out, p.projections[k].x());
      put<double>(out, p.projections[k].y());
      for (int c = 0; c < 3; ++c) put<float>(out, static_cast<float>(p.colors[k][c]));
      put<std::uint32_t>(out, p.observation_counts[k]);
    }
  }
}

std::vector<ColorProfile> read_profiles(std::istream& in) {
  std::vector<ColorProfile> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    ColorProfile p;
    const auto n = get<std::uint32_t>(in);
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto view = get<std::uint32_t>(in);
      if (k == 0) p.start_view = static_cast<int>(view);
      Eigen::Vector2d pos;
      pos.x() = get<double>(in);
      pos.y() = get<double>(in);
      Rgb c;
      for (int ch = 0; ch < 3; ++ch) c[ch] = get<float>(in);
      p.projections.push_back(pos);
      p.colors.push_back(c);
      p.observation_counts.push_back(get<std::uint32_t>(in));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tlapse
