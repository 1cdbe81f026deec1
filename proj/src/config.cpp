#include "liftkit/config.hpp"

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>

#include <yaml-cpp/yaml.h>

#include "liftkit/error.hpp"

namespace liftkit {
namespace {

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(ErrorCode::kConfig, "\"" + key + "\" must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::kConfig, "\"" + key + "\" has the wrong type: " + node.Scalar());
  }
}

UnknownCategoryPolicy parse_policy(const std::string& s) {
  if (s == "keep" || s == "keep-with-warning") return UnknownCategoryPolicy::kKeepWithWarning;
  if (s == "reject") return UnknownCategoryPolicy::kReject;
  fail(ErrorCode::kConfig, "unknown_category_policy must be keep-with-warning or reject, got \"" + s + "\"");
}

// Sets one leaf; `path` is "section.key" or a top-level key.
void assign(PipelineConfig& c, const std::string& path, const YAML::Node& v) {
  if (path == "fov_deg") c.fov_deg = scalar<double>(v, path);
  else if (path == "dbscan.eps") c.dbscan.eps = scalar<double>(v, path);
  else if (path == "dbscan.min_pts") c.dbscan.min_pts = scalar<int>(v, path);
  else if (path == "dbscan.floor_clearance") c.dbscan.floor_clearance = scalar<double>(v, path);
  else if (path == "size_filter.t") c.size_filter.t = scalar<double>(v, path);
  else if (path == "size_filter.unknown_category_policy") c.size_filter.unknown_category_policy = parse_policy(scalar<std::string>(v, path));
  else if (path == "renderer.depth_tol") c.renderer.depth_tol = scalar<double>(v, path);
  else if (path == "renderer.splat_px") c.renderer.splat_px = scalar<int>(v, path);
  else if (path == "renderer.mode") {
    try {
      c.renderer.mode = parse_render_mode(scalar<std::string>(v, path));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, e.what());
    }
  }
  else if (path == "normals.bin_deg") c.normals.bin_deg = scalar<double>(v, path);
  else if (path == "normals.inlier_warn_threshold") c.normals.inlier_warn_threshold = scalar<double>(v, path);
  else if (path == "eval.iou_thresh") c.eval.iou_thresh = scalar<double>(v, path);
  else if (path == "eval.rotated") c.eval.rotated = scalar<bool>(v, path);
  else if (path == "eval.top_k") c.eval.top_k = scalar<int>(v, path);
  else if (path == "io.output_dir") c.io.output_dir = scalar<std::string>(v, path);
  else fail(ErrorCode::kConfig, "unknown config key \"" + path + "\"");
}

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfig, what);
}

}  // namespace

std::string_view to_string(RenderMode mode) {
  switch (mode) {
    case RenderMode::kNone: return "none";
    case RenderMode::kSingle: return "single";
    case RenderMode::kSweep: return "sweep";
    case RenderMode::kPartial: return "partial";
    case RenderMode::kCompact: return "compact";
  }
  return "none";
}

RenderMode parse_render_mode(std::string_view name) {
  for (auto m : {RenderMode::kNone, RenderMode::kSingle, RenderMode::kSweep, RenderMode::kPartial, RenderMode::kCompact}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidArgument, "render mode must be one of none|single|sweep|partial|compact, got \"" + std::string(name) + "\"");
}

void PipelineConfig::validate() const {
  check(fov_deg > 0.0 && fov_deg < 180.0, "fov_deg must lie in (0, 180)");
  check(dbscan.eps > 0.0, "dbscan.eps must be positive");
  check(dbscan.min_pts >= 1, "dbscan.min_pts must be at least 1");
  check(size_filter.t > 0.0 && size_filter.t < 1.0, "size_filter.t must lie in (0, 1)");
  check(renderer.depth_tol > 0.0, "renderer.depth_tol must be positive");
  check(renderer.splat_px >= 1 && renderer.splat_px % 2 == 1, "renderer.splat_px must be a positive odd integer");
  check(normals.bin_deg >= 1.0 && normals.bin_deg <= 45.0, "normals.bin_deg must lie in [1, 45]");
  check(normals.inlier_warn_threshold >= 0.0 && normals.inlier_warn_threshold <= 1.0,
        "normals.inlier_warn_threshold must lie in [0, 1]");
  check(eval.iou_thresh > 0.0 && eval.iou_thresh < 1.0, "eval.iou_thresh must lie in (0, 1)");
  check(eval.top_k >= 1, "eval.top_k must be at least 1");
  check(!io.output_dir.empty(), "io.output_dir must not be empty");
}

AnnotationParams PipelineConfig::annotation_params() const {
  AnnotationParams p;
  p.eps = dbscan.eps;
  p.min_pts = dbscan.min_pts;
  p.floor_clearance = dbscan.floor_clearance;
  p.t = size_filter.t;
  p.unknown_policy = size_filter.unknown_category_policy;
  return p;
}

nlohmann::json PipelineConfig::to_json() const {
  return {
      {"fov_deg", fov_deg},
      {"dbscan", {{"eps", dbscan.eps}, {"min_pts", dbscan.min_pts}, {"floor_clearance", dbscan.floor_clearance}}},
      {"size_filter",
       {{"t", size_filter.t},
        {"unknown_category_policy",
         size_filter.unknown_category_policy == UnknownCategoryPolicy::kReject ? "reject" : "keep-with-warning"}}},
      {"renderer", {{"depth_tol", renderer.depth_tol}, {"splat_px", renderer.splat_px}, {"mode", to_string(renderer.mode)}}},
      {"normals", {{"bin_deg", normals.bin_deg}, {"inlier_warn_threshold", normals.inlier_warn_threshold}}},
      {"eval", {{"iou_thresh", eval.iou_thresh}, {"rotated", eval.rotated}, {"top_k", eval.top_k}}},
      {"io", {{"output_dir", io.output_dir}}},
  };
}

std::string PipelineConfig::hash() const {
  // The output location does not change any computed value.
  auto j = to_json();
  j.erase("io");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig apply_config_yaml(PipelineConfig base, std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kConfig, std::string("config parse error: ") + e.what());
  }
  if (root.IsNull()) return base;
  if (!root.IsMap()) fail(ErrorCode::kConfig, "config file must be a mapping");
  for (const auto& entry : root) {
    const auto key = entry.first.as<std::string>();
    if (entry.second.IsMap()) {
      for (const auto& leaf : entry.second) assign(base, key + "." + leaf.first.as<std::string>(), leaf.second);
    } else {
      assign(base, key, entry.second);
    }
  }
  return base;
}

PipelineConfig apply_overrides(PipelineConfig base, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::kConfig, "override must look like section.key=value: " + a);
    YAML::Node value;
    try {
      value = YAML::Load(a.substr(eq + 1));
    } catch (const YAML::Exception& e) {
      fail(ErrorCode::kConfig, "bad override value in " + a);
    }
    assign(base, a.substr(0, eq), value);
  }
  return base;
}

}  // namespace liftkit
