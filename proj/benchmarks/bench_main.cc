#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tlapse/camera.h"
#include "tlapse/cost_volume.h"
#include "tlapse/depthmap.h"
#include "tlapse/profiles.h"
#include "tlapse/reconstruct.h"
#include "tlapse/tracks.h"

namespace {

using namespace tlapse;

Camera make_camera(int w, int h, double f, const Eigen::Vector3d& center) {
  Camera c;
  c.focal = {f, f};
  c.principal_point = {(w - 1) / 2.0, (h - 1) / 2.0};
  c.center = center;
  c.width = w;
  c.height = h;
  return c;
}

GrayImage noise_image(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage g(w, h);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = u(rng);
  return g;
}

void BM_Aggregate(benchmark::State& state) {
  const int images = static_cast<int>(state.range(0));
  std::mt19937 rng(1);
  const Camera view = make_camera(40, 30, 50.0, Eigen::Vector3d::Zero());
  std::vector<MatchingImage> support;
  for (int i = 0; i < images; ++i) {
    const Camera c = make_camera(48, 36, 55.0, Eigen::Vector3d(0.05 * i, 0.0, 0.0));
    support.push_back({c, noise_image(48, 36, rng)});
  }
  const PlaneSet planes(2.0, 20.0, 32);
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(view, support, planes));
}
BENCHMARK(BM_Aggregate)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SolveProfile(benchmark::State& state) {
  const int views = static_cast<int>(state.range(0));
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<Rgb>> obs(views);
  for (int j = 0; j < views; ++j) {
    for (int k = 0; k < 5; ++k) {
      const double v = j < views / 2 ? 0.2 : 0.8;
      obs[j].push_back(u(rng) < 0.2 ? Rgb(u(rng), u(rng), u(rng)) : Rgb::Constant(v));
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_profile(obs));
}
BENCHMARK(BM_SolveProfile)->Arg(20)->Arg(100);

void BM_ReconstructFrame(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const int h = w * 3 / 4;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25), u(0.0, 1.0);
  std::vector<ProjectedSample> samples;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < 2; ++k) {
        samples.push_back(make_sample({x + jitter(rng), y + jitter(rng)},
                                      Rgb::Constant(u(rng)), w, h));
      }
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_frame(samples, w, h));
}
BENCHMARK(BM_ReconstructFrame)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_GenerateTracks(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::vector<Depthmap> maps;
  std::vector<Camera> views;
  const PlaneSet planes(2.0, 20.0, 32);
  for (int j = 0; j < m; ++j) {
    const double a = 0.01 * j;
    Camera c = make_camera(80, 60, 100.0, Eigen::Vector3d(5.0 * std::sin(a), 0.0,
                                                          5.0 - 5.0 * std::cos(a)));
    c.rotation = axis_angle(Eigen::Vector3d::UnitY(), -a);
    views.push_back(c);
    maps.push_back(Depthmap{Raster<double>(80, 60, 12.0), planes});
  }
  const DepthStack stack(maps, views);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_tracks(stack, TrackGenParams{}));
  }
}
BENCHMARK(BM_GenerateTracks)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
