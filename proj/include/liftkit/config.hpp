#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "liftkit/annotate.hpp"

namespace liftkit {

enum class RenderMode { kNone, kSingle, kSweep, kPartial, kCompact };

std::string_view to_string(RenderMode mode);
RenderMode parse_render_mode(std::string_view name);

/// Every tunable of the batch tools. Defaults < config file < CLI overrides.
struct PipelineConfig {
  double fov_deg = 55.0;

  struct Dbscan {
    double eps = 0.1;
    int min_pts = 10;
    double floor_clearance = 0.03;
  } dbscan;

  struct SizeFilter {
    double t = 0.1;
    UnknownCategoryPolicy unknown_category_policy = UnknownCategoryPolicy::kKeepWithWarning;
  } size_filter;

  struct Renderer {
    double depth_tol = 0.05;
    int splat_px = 3;
    RenderMode mode = RenderMode::kPartial;
  } renderer;

  struct Normals {
    double bin_deg = 10.0;
    double inlier_warn_threshold = 0.2;
  } normals;

  struct Eval {
    double iou_thresh = 0.25;
    bool rotated = true;
    int top_k = 10;
  } eval;

  struct Io {
    std::string output_dir = "out";
  } io;

  /// Throws kConfig when a value is outside the range its module accepts.
  void validate() const;

  AnnotationParams annotation_params() const;

  nlohmann::json to_json() const;
  /// FNV-1a over the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

/// Applies a YAML document on top of `base`; unknown keys are rejected.
PipelineConfig apply_config_yaml(PipelineConfig base, std::string_view yaml_text);

/// Applies "section.key=value" assignments (value parsed as YAML scalar).
PipelineConfig apply_overrides(PipelineConfig base, const std::vector<std::string>& assignments);

}  // namespace liftkit
