#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tlapse/pipeline.h"
#include "tlapse/synthetic.h"

namespace tlapse {
namespace {

namespace fs = std::filesystem;
using test::expect_error;

// Small dataset shared by the tests below.
const fs::path& dataset() {
  static const fs::path dir = [] {
    SyntheticSceneSpec s;
    s.width = 48;
    s.height = 36;
    s.focal = 60.0;
    s.photo_focal = 54.0;
    s.photo_count = 16;
    s.point_count = 300;
    s.appear_time = 0.5;
    const fs::path d = test::temp_dir("pipeline_data");
    write_dataset(generate_synthetic_scene(s), d);
    return d;
  }();
  return dir;
}

PipelineConfig small_config(const std::string& name) {
  PipelineConfig c;
  c.manifest = dataset() / "manifest.json";
  c.ground_truth = dataset() / "scene.json";
  c.output_dir = test::temp_dir(name);
  c.num_views = 4;
  c.planes = 16;
  return c;
}

std::set<std::string> files_under(const fs::path& dir) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), dir).string());
  }
  return out;
}

TEST(PipelineConfig, RoundTrip) {
  PipelineConfig c;
  c.manifest = "data/manifest.json";
  c.output_dir = "elsewhere";
  c.path.type = PathType::kOrbit;
  c.path.pivot = {0.0, 0.5, 2.0};
  c.path.angle_deg = 10.0;
  c.num_views = 7;
  c.depth.alpha = 0.25;
  c.depth.k1 = 12.0;
  c.profiles.lambda = 3.5;
  c.tracks.epsilon = 0.3;
  c.baseline = true;
  c.sigma = 1.5;
  c.ground_truth = "data/scene.json";
  c.dump_tracks = true;
  c.seed = 42;
  c.stages.render = false;
  const std::string text = config_to_string(c);
  const PipelineConfig back = config_from_string(text);
  EXPECT_EQ(config_to_string(back), text);
  EXPECT_EQ(back.path.type, PathType::kOrbit);
  EXPECT_DOUBLE_EQ(back.depth.k1, 12.0);
  EXPECT_FALSE(back.stages.render);
  EXPECT_EQ(back.seed, 42u);
}

TEST(PipelineConfig, MissingKeysKeepDefaults) {
  const PipelineConfig c = config_from_string(R"({"num_views": 9, "depth": {"alpha": 0.1}})");
  EXPECT_EQ(c.num_views, 9);
  EXPECT_DOUBLE_EQ(c.depth.alpha, 0.1);
  EXPECT_DOUBLE_EQ(c.depth.k1, 30.0);
  EXPECT_DOUBLE_EQ(c.profiles.lambda, 25.0);
  EXPECT_EQ(c.planes, 64);
}

TEST(PipelineConfig, ValidateRejects) {
  PipelineConfig c = small_config("cfg_bad");
  EXPECT_NO_THROW(c.validate());
  c.num_views = 1;
  expect_error(ErrorCode::kInvalidArgument, [&] { c.validate(); });
  c = small_config("cfg_bad");
  c.manifest = "/nonexistent/manifest.json";
  expect_error(ErrorCode::kInvalidArgument, [&] { c.validate(); });
}

TEST(Pipeline, DepthOnlyWritesOnlyDepthmaps) {
  PipelineConfig c = small_config("depth_only");
  c.stages = {true, false, false, false, false};
  const PipelineReport r = run_pipeline(c);
  std::set<std::string> expect = {"depth/depth.json"};
  for (int j = 0; j < 4; ++j) expect.insert("depth/depth_000" + std::to_string(j) + ".pfm");
  EXPECT_EQ(files_under(c.output_dir), expect);
  EXPECT_TRUE(r.frames.empty());
  EXPECT_LE(r.sweep_energies.back(), r.initial_energy * (1 + 1e-6));
}

TEST(Pipeline, EndToEndDeterministicAndResumable) {
  PipelineConfig c = small_config("full_a");
  c.baseline = true;
  const PipelineReport a = run_pipeline(c);
  ASSERT_EQ(a.frames.size(), 4u);
  ASSERT_EQ(a.depth.size(), 4u);
  for (const auto& f : a.frames) {
    ASSERT_TRUE(f.psnr);
    ASSERT_TRUE(f.splat_psnr);
    ASSERT_TRUE(f.density);
    EXPECT_GT(*f.psnr, 15.0);
  }
  EXPECT_GT(a.track_count, 0u);
  const auto files = files_under(c.output_dir);
  for (const char* f : {"tracks/tracks.bin", "profiles/profiles.bin", "frames/frame_0003.png",
                        "frames/splat_0000.png", "metrics.json"}) {
    EXPECT_TRUE(files.count(f)) << f;
  }

  PipelineConfig c2 = small_config("full_b");
  c2.baseline = true;
  const PipelineReport b = run_pipeline(c2);
  EXPECT_EQ(report_to_string(a), report_to_string(b));
  for (const auto& f : files) {
    EXPECT_EQ(read_text(c.output_dir / f), read_text(c2.output_dir / f)) << f;
  }

  // resume from stored depthmaps and tracks
  const std::string frame = read_text(c2.output_dir / "frames/frame_0002.png");
  fs::remove_all(c2.output_dir / "frames");
  fs::remove(c2.output_dir / "metrics.json");
  c2.stages.depth = false;
  c2.stages.tracks = false;
  const PipelineReport resumed = run_pipeline(c2);
  EXPECT_EQ(read_text(c2.output_dir / "frames/frame_0002.png"), frame);
  EXPECT_EQ(report_to_string(resumed), report_to_string(a));
}

TEST(Pipeline, ErrorsCarryStageName) {
  PipelineConfig c = small_config("stage_err");
  c.stages.depth = false;  // nothing stored yet
  try {
    run_pipeline(c);
    ADD_FAILURE() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "depth");
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("[depth]"), std::string::npos);
  }

  PipelineConfig bad = small_config("stage_err2");
  bad.num_views = 0;
  try {
    run_pipeline(bad);
    ADD_FAILURE() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "input");
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Pipeline, PrepareInputSelectsChronologically) {
  const PreparedInput in = prepare_input(small_config("prep"));
  ASSERT_FALSE(in.selected.empty());
  for (std::size_t k = 1; k < in.times.size(); ++k) EXPECT_LE(in.times[k - 1], in.times[k]);
  EXPECT_EQ(in.views.size(), 4u);
  EXPECT_EQ(in.depth_views[0].width, 24);
  EXPECT_GT(in.scene_scale, 0.0);
}

}  // namespace
}  // namespace tlapse
