#include "liftkit/config.hpp"
#include "test_util.hpp"

using namespace liftkit;

TEST(Config, DefaultsValidate) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.fov_deg, 55.0);
  const auto p = c.annotation_params();
  EXPECT_DOUBLE_EQ(p.eps, 0.1);
  EXPECT_EQ(p.min_pts, 10);
  EXPECT_DOUBLE_EQ(p.t, 0.1);
}

TEST(Config, YamlOverridesDefaultsAndRejectsUnknown) {
  const auto c = apply_config_yaml(PipelineConfig{}, "dbscan:\n  eps: 0.05\nrenderer:\n  mode: sweep\nfov_deg: 60\n");
  EXPECT_DOUBLE_EQ(c.dbscan.eps, 0.05);
  EXPECT_EQ(c.renderer.mode, RenderMode::kSweep);
  EXPECT_DOUBLE_EQ(c.fov_deg, 60);
  EXPECT_EQ(c.dbscan.min_pts, 10);
  EXPECT_ERROR_CODE(apply_config_yaml(PipelineConfig{}, "dbscan:\n  epsilon: 0.05\n"), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(apply_config_yaml(PipelineConfig{}, "colour: red\n"), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(apply_config_yaml(PipelineConfig{}, "dbscan:\n  min_pts: many\n"), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(apply_config_yaml(PipelineConfig{}, "dbscan: [1, 2\n"), ErrorCode::kConfig);
}

TEST(Config, OverridesBeatFile) {
  auto c = apply_config_yaml(PipelineConfig{}, "size_filter:\n  t: 0.3\n");
  c = apply_overrides(c, {"size_filter.t=0.2", "size_filter.unknown_category_policy=reject", "eval.rotated=false"});
  EXPECT_DOUBLE_EQ(c.size_filter.t, 0.2);
  EXPECT_EQ(c.size_filter.unknown_category_policy, UnknownCategoryPolicy::kReject);
  EXPECT_FALSE(c.eval.rotated);
  EXPECT_ERROR_CODE(apply_overrides(c, {"size_filter.t"}), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(apply_overrides(c, {"nope.t=1"}), ErrorCode::kConfig);
}

TEST(Config, RangeValidation) {
  const auto bad = [](const std::string& o) {
    SCOPED_TRACE(o);
    EXPECT_ERROR_CODE(apply_overrides(PipelineConfig{}, {o}).validate(), ErrorCode::kConfig);
  };
  bad("size_filter.t=1.0");
  bad("size_filter.t=0");
  bad("dbscan.eps=-1");
  bad("dbscan.min_pts=0");
  bad("renderer.splat_px=2");
  bad("fov_deg=180");
  bad("eval.iou_thresh=1.5");
  bad("eval.top_k=0");
  bad("normals.bin_deg=0");
}

TEST(Config, HashTracksEffectiveParameters) {
  PipelineConfig a;
  PipelineConfig b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.io.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  for (const std::string o : {"dbscan.eps=0.11", "renderer.mode=sweep", "eval.rotated=false", "fov_deg=54.9",
                              "dbscan.floor_clearance=-1", "normals.inlier_warn_threshold=0.3"}) {
    EXPECT_NE(apply_overrides(PipelineConfig{}, {o}).hash(), a.hash()) << o;
  }
  // Re-stating a default is not a change.
  EXPECT_EQ(apply_overrides(PipelineConfig{}, {"dbscan.eps=0.1"}).hash(), a.hash());
}

TEST(RenderModeNames, RoundTrip) {
  for (auto m : {RenderMode::kNone, RenderMode::kSingle, RenderMode::kSweep, RenderMode::kPartial, RenderMode::kCompact}) {
    EXPECT_EQ(parse_render_mode(to_string(m)), m);
  }
  EXPECT_ERROR_CODE(parse_render_mode("fancy"), ErrorCode::kInvalidArgument);
}
