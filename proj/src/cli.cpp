#include "liftkit/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "liftkit/annotate.hpp"
#include "liftkit/config.hpp"
#include "liftkit/error.hpp"
#include "liftkit/evaluate.hpp"
#include "liftkit/io.hpp"
#include "liftkit/logging.hpp"
#include "liftkit/priors.hpp"
#include "liftkit/render.hpp"
#include "liftkit/rotation.hpp"

namespace liftkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  long long seed = 0;
  std::string output_dir;
  std::string log_level = "info";
};

// Files produced by one unit of work; nothing touches disk until the unit
// has fully succeeded.
struct Outputs {
  std::vector<std::pair<fs::path, std::string>> files;
  void add(fs::path path, std::string bytes) { files.emplace_back(std::move(path), std::move(bytes)); }
  void commit() const {
    for (const auto& [path, bytes] : files) io::write_atomic(path, bytes);
  }
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return kExitUsage;
    default: return kExitIo;
  }
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

json matrix_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

PipelineConfig load_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) {
    std::string text;
    try {
      text = io::read_text(g.config_path);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, e.what());
    }
    cfg = apply_config_yaml(cfg, text);
  }
  cfg = apply_overrides(cfg, g.overrides);
  if (!g.output_dir.empty()) cfg.io.output_dir = g.output_dir;
  cfg.validate();
  if (g.jobs < 1) fail(ErrorCode::kConfig, "--jobs must be at least 1");
  return cfg;
}

CameraModel resolve_camera(const std::optional<fs::path>& camera_path, const DepthImage& depth, double fov_deg) {
  if (!camera_path) return intrinsics_from_fov(depth.width(), depth.height(), fov_deg);
  CameraModel cam = io::camera_from_json(io::parse_json(io::read_text(*camera_path), "camera JSON"));
  if (cam.width != depth.width() || cam.height != depth.height()) {
    fail(ErrorCode::kFormat, "camera size does not match the depth image");
  }
  return cam;
}

// --- lift -----------------------------------------------------------------

struct LiftOutcome {
  PointCloud cloud;
  CameraModel camera;  // camera posed in the output frame
  json record;
};

LiftOutcome lift_stage(const DepthImage& depth, const CameraModel& camera, bool gravity_align,
                       const std::optional<fs::path>& normals_path, const PipelineConfig& cfg, Logger& log,
                       const std::string& id) {
  LiftOutcome out;
  out.cloud = lift_depth(depth, camera);
  out.camera = camera;
  out.record["points"] = out.cloud.size();
  out.record["valid_pixels"] = depth.valid_count();
  if (!gravity_align) {
    out.record["rotation"] = matrix_json(Mat3::Identity());
    out.record["camera"] = io::camera_to_json(out.camera);
    return out;
  }
  OrientationOptions options;
  options.cluster.bin_deg = cfg.normals.bin_deg;
  options.inlier_warn_threshold = cfg.normals.inlier_warn_threshold;
  NormalMap external;
  if (normals_path) {
    external = io::read_normal_map(*normals_path);
    if (external.width() != depth.width() || external.height() != depth.height()) {
      fail(ErrorCode::kFormat, "normal map size does not match the depth image");
    }
    options.normals = &external;
  }
  auto result = correct_orientation(out.cloud, depth, camera, options);
  out.cloud = std::move(result.cloud);
  out.camera.rotation = result.rotation * camera.rotation;
  out.camera.translation = result.rotation * camera.translation;
  out.record["rotation"] = matrix_json(result.rotation);
  out.record["consensus"] = {{"n_pred", vec_json(result.consensus.n_pred)},
                             {"support", result.consensus.support},
                             {"total", result.consensus.total},
                             {"inlier_fraction", result.consensus.inlier_fraction},
                             {"low_confidence", result.low_confidence},
                             {"normals_source", normals_path ? "external" : "geometric"}};
  out.record["camera"] = io::camera_to_json(out.camera);
  if (result.low_confidence) {
    log.warn("low-confidence-orientation", {{"input", id}, {"inlier_fraction", result.consensus.inlier_fraction}});
  }
  return out;
}

// --- annotate ---------------------------------------------------------------

json annotations_json(const std::vector<Box3D>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back(io::box3d_to_json(b));
  return arr;
}

json drop_log_json(const AnnotationResult& r) {
  json dropped = json::array();
  json warnings = json::array();
  for (const auto& e : r.log) {
    json entry = {{"index", e.box_index}, {"category", e.category}, {"reason", e.reason}, {"detail", e.detail}};
    (e.dropped ? dropped : warnings).push_back(std::move(entry));
  }
  return {{"dropped", dropped}, {"warnings", warnings}};
}

// --- render -----------------------------------------------------------------

std::string angle_tag(double h, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "h%+04d_v%+04d", static_cast<int>(std::lround(h)), static_cast<int>(std::lround(v)));
  return buf;
}

json view_json(const Viewpoint& view) { return {{"theta_h", view.theta_h}, {"theta_v", view.theta_v}}; }

// Renders for one cloud; returns the sidecar index and queues PNGs under `dir`.
json render_stage(const PointCloud& cloud, const CameraModel& base, RenderMode mode, const PipelineConfig& cfg,
                  const fs::path& dir, Outputs& outputs) {
  json entries = json::array();
  const Vec3 pivot = cloud.centroid();
  const auto emit = [&](const std::string& name, const DepthImage& image, json meta) {
    outputs.add(dir / (name + ".png"), io::encode_depth_png(image));
    meta["file"] = name + ".png";
    meta["valid_pixels"] = image.valid_count();
    meta["compactness"] = compactness(image);
    entries.push_back(std::move(meta));
  };
  switch (mode) {
    case RenderMode::kNone:
      break;
    case RenderMode::kSingle:
      emit("single", render_depth(cloud, base, cfg.renderer.splat_px),
           {{"view", view_json({0, 0, base})}, {"camera", io::camera_to_json(base)}});
      break;
    case RenderMode::kSweep:
      for (const auto& [h, v] : angle_sweep()) {
        const Viewpoint view{h, v, base};
        const CameraModel cam = view_camera(view, pivot);
        emit("sweep_" + angle_tag(h, v), render_depth(cloud, cam, cfg.renderer.splat_px),
             {{"view", view_json(view)}, {"camera", io::camera_to_json(cam)}});
      }
      break;
    case RenderMode::kPartial: {
      const RenderParams params{cfg.renderer.depth_tol, cfg.renderer.splat_px};
      for (const auto& r : make_training_renders(cloud, base, params)) {
        emit("partial_" + angle_tag(r.view_b.theta_h, r.view_b.theta_v), r.image,
             {{"view_a", view_json(r.view_a)},
              {"view_b", view_json(r.view_b)},
              {"camera", io::camera_to_json(base)},
              {"remaining_points", r.remaining_points}});
      }
      break;
    }
    case RenderMode::kCompact: {
      std::vector<Viewpoint> candidates;
      for (const auto& [h, v] : angle_sweep()) candidates.push_back({h, v, base});
      const auto best = best_compact_view(cloud, base, candidates, cfg.renderer.splat_px);
      json scores = json::array();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        scores.push_back({{"theta_h", candidates[i].theta_h}, {"theta_v", candidates[i].theta_v},
                          {"compactness", best.candidate_scores[i]}});
      }
      emit("compact", best.image,
           {{"view", view_json(best.view)}, {"camera", io::camera_to_json(view_camera(best.view, pivot))},
            {"candidates", scores}});
      break;
    }
  }
  outputs.add(dir / "renders.json", dump({{"mode", to_string(mode)}, {"count", entries.size()}, {"renders", entries}}));
  return {{"mode", to_string(mode)}, {"count", entries.size()}};
}

// --- evaluate ---------------------------------------------------------------

json evaluate_stage(const DetectionSet& dets, const GroundTruthSet& gts, const SizePriorDB* priors,
                    const PipelineConfig& cfg, const fs::path& dir, Outputs& outputs) {
  std::set<std::string> cats;
  for (const auto& c : gts.categories()) cats.insert(c);
  for (const auto& c : dets.categories()) cats.insert(c);
  const ApOptions options{cfg.eval.iou_thresh, cfg.eval.rotated};
  const auto report = mean_ap(dets, gts, {cats.begin(), cats.end()}, options);

  json per_class = json::object();
  std::ostringstream csv;
  csv << "category,ap\n";
  for (const auto& [cat, ap] : report.per_class) {
    per_class[cat] = ap ? json(*ap) : json(nullptr);
    csv << cat << "," << (ap ? std::to_string(*ap) : std::string("undefined")) << "\n";
  }
  csv << "mean," << std::to_string(report.mean_ap) << "\n";

  json ratios = nullptr;
  try {
    std::vector<CategoryRatios> rr;
    if (priors != nullptr) {
      std::vector<Box3D> all;
      for (const auto& s : dets.scenes()) all.insert(all.end(), s.boxes.begin(), s.boxes.end());
      rr = ratio_report(all, *priors, static_cast<std::size_t>(cfg.eval.top_k));
    } else {
      rr = ratio_report(dets, gts, static_cast<std::size_t>(cfg.eval.top_k), cfg.eval.rotated);
    }
    ratios = json::array();
    for (const auto& entry : rr) {
      ratios.push_back({{"category", entry.category},
                        {"instances", entry.instances},
                        {"bandwidth", entry.curve->bandwidth},
                        {"ratios", entry.ratios},
                        {"kde_file", "kde_" + entry.category + ".csv"}});
      std::ostringstream k;
      k << "x,density\n";
      k.precision(17);
      for (std::size_t i = 0; i < entry.curve->grid.size(); ++i) k << entry.curve->grid[i] << "," << entry.curve->density[i] << "\n";
      outputs.add(dir / ("kde_" + entry.category + ".csv"), k.str());
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoData) throw;
  }

  json out = {{"protocol",
               {{"metric", "average precision"},
                {"iou_thresh", cfg.eval.iou_thresh},
                {"iou", cfg.eval.rotated ? "rotated-bev-polygon-x-height" : "axis-aligned"},
                {"interpolation", "all-points"},
                {"matching", "greedy by descending score, one detection per ground-truth box"},
                {"ratio_reference", priors != nullptr ? "size-priors" : "matched-ground-truth"}}},
              {"per_class_ap", per_class},
              {"undefined_classes", report.undefined},
              {"mean_ap", report.mean_ap},
              {"volume_ratios", ratios}};
  outputs.add(dir / "report.json", dump(out));
  outputs.add(dir / "report.csv", csv.str());
  return out;
}

// --- pipeline ---------------------------------------------------------------

struct PipelineInput {
  std::string id;
  fs::path depth;
  fs::path detections;
  std::optional<fs::path> camera;
  std::optional<fs::path> normals;
  json raw;
};

struct InputResult {
  json record;
  Outputs outputs;
  std::vector<Box3D> boxes;
  bool ok = false;
};

InputResult run_pipeline_input(const PipelineInput& in, const SizePriorDB& priors, const PipelineConfig& cfg,
                               const fs::path& out_dir, Logger& log) {
  InputResult result;
  json& rec = result.record;
  rec["id"] = in.id;
  rec["inputs"] = in.raw;
  json timings = json::object();
  const fs::path dir = out_dir / in.id;
  try {
    auto t0 = Clock::now();
    const DepthImage depth = io::read_depth(in.depth);
    const CameraModel camera = resolve_camera(in.camera, depth, cfg.fov_deg);
    const auto dets2d = io::detections2d_from_json(io::parse_json(io::read_text(in.detections), "detections JSON"));
    timings["read"] = ms_since(t0);

    t0 = Clock::now();
    LiftOutcome lifted = lift_stage(depth, camera, true, in.normals, cfg, log, in.id);
    timings["lift_align"] = ms_since(t0);
    rec["lift"] = lifted.record;
    result.outputs.add(dir / "cloud.ply", io::encode_ply(lifted.cloud));
    result.outputs.add(dir / "camera.json", dump(io::camera_to_json(lifted.camera)));

    t0 = Clock::now();
    const AnnotationResult ann = generate_annotations(lifted.cloud, dets2d, priors, cfg.annotation_params());
    timings["annotate"] = ms_since(t0);
    const json drops = drop_log_json(ann);
    rec["annotations"] = {{"detections", dets2d.size()},
                          {"kept", ann.boxes.size()},
                          {"dropped", drops["dropped"]},
                          {"warnings", drops["warnings"]}};
    result.outputs.add(dir / "annotations.json", dump(annotations_json(ann.boxes)));
    result.outputs.add(dir / "drops.json", dump(drops));
    for (const auto& e : ann.log) {
      if (e.dropped) log.info("box-dropped", {{"input", in.id}, {"index", e.box_index}, {"reason", e.reason}});
    }

    t0 = Clock::now();
    rec["renders"] = render_stage(lifted.cloud, lifted.camera, cfg.renderer.mode, cfg, dir / "renders", result.outputs);
    timings["render"] = ms_since(t0);

    rec["status"] = "ok";
    result.boxes = ann.boxes;
    result.ok = true;
  } catch (const Error& e) {
    rec["status"] = "failed";
    rec["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    result.outputs.files.clear();
    log.error("input-failed", {{"input", in.id}, {"error", e.what()}});
  }
  rec["timings_ms"] = timings;
  return result;
}

std::vector<PipelineInput> parse_manifest(const json& j, const fs::path& base_dir, fs::path& priors_path) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "pipeline manifest must be an object");
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  if (!j.contains("priors") || !j["priors"].is_string()) fail(ErrorCode::kFormat, "manifest field \"priors\": expected a path");
  priors_path = resolve(j["priors"].get<std::string>());
  std::vector<PipelineInput> inputs;
  if (!j.contains("inputs")) return inputs;
  if (!j["inputs"].is_array()) fail(ErrorCode::kFormat, "manifest field \"inputs\": expected an array");
  std::set<std::string> ids;
  for (const auto& item : j["inputs"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string() || !item.contains("depth") ||
        !item["depth"].is_string() || !item.contains("detections") || !item["detections"].is_string()) {
      fail(ErrorCode::kFormat, "manifest input needs string fields id, depth, detections");
    }
    PipelineInput in;
    in.id = item["id"].get<std::string>();
    if (in.id.empty() || in.id.find('/') != std::string::npos || in.id == "." || in.id == "..") {
      fail(ErrorCode::kFormat, "manifest input id \"" + in.id + "\" is not a valid directory name");
    }
    if (!ids.insert(in.id).second) fail(ErrorCode::kFormat, "duplicate manifest input id \"" + in.id + "\"");
    in.depth = resolve(item["depth"].get<std::string>());
    in.detections = resolve(item["detections"].get<std::string>());
    if (item.contains("camera")) in.camera = resolve(item["camera"].get<std::string>());
    if (item.contains("normals")) in.normals = resolve(item["normals"].get<std::string>());
    in.raw = item;
    inputs.push_back(std::move(in));
  }
  return inputs;
}

// --- command wiring -----------------------------------------------------------

struct Context {
  GlobalOptions global;
  std::ostream* out;
  std::ostream* err;
};

int cmd_lift(Context& ctx, const std::string& depth_path, const std::string& camera_path, bool gravity,
             const std::string& normals_path, std::string output, std::string manifest) {
  const PipelineConfig cfg = load_config(ctx.global);
  Logger log(*ctx.err, parse_log_level(ctx.global.log_level));
  const auto t0 = Clock::now();
  const DepthImage depth = io::read_depth(depth_path);
  std::optional<fs::path> cam_path;
  if (!camera_path.empty()) cam_path = camera_path;
  std::optional<fs::path> nrm_path;
  if (!normals_path.empty()) nrm_path = normals_path;
  const CameraModel camera = resolve_camera(cam_path, depth, cfg.fov_deg);
  LiftOutcome lifted = lift_stage(depth, camera, gravity, nrm_path, cfg, log, depth_path);

  if (output.empty()) output = (fs::path(cfg.io.output_dir) / fs::path(depth_path).stem()).string() + ".ply";
  if (manifest.empty()) manifest = fs::path(output).replace_extension(".json").string();
  json rec = {{"tool_version", kToolVersion},
              {"config_hash", cfg.hash()},
              {"input", depth_path},
              {"output", fs::path(output).filename().string()},
              {"gravity_align", gravity},
              {"lift", lifted.record},
              {"timings_ms", {{"total", ms_since(t0)}}}};
  Outputs outs;
  outs.add(output, io::encode_ply(lifted.cloud));
  outs.add(manifest, dump(rec));
  outs.commit();
  log.info("lift-done", {{"output", output}, {"points", lifted.cloud.size()}});
  return kExitOk;
}

int cmd_annotate(Context& ctx, const std::string& cloud_path, const std::string& dets_path,
                 const std::string& priors_path, std::string output, std::string drop_log) {
  const PipelineConfig cfg = load_config(ctx.global);
  Logger log(*ctx.err, parse_log_level(ctx.global.log_level));
  const PointCloud cloud = io::decode_ply(io::read_text(cloud_path));
  const auto dets = io::detections2d_from_json(io::parse_json(io::read_text(dets_path), "detections JSON"));
  const SizePriorDB priors = load_priors(io::read_text(priors_path));
  const AnnotationResult ann = generate_annotations(cloud, dets, priors, cfg.annotation_params());

  if (output.empty()) output = (fs::path(cfg.io.output_dir) / "annotations.json").string();
  if (drop_log.empty()) drop_log = (fs::path(output).parent_path() / (fs::path(output).stem().string() + ".drops.json")).string();
  Outputs outs;
  outs.add(output, dump(annotations_json(ann.boxes)));
  outs.add(drop_log, dump(drop_log_json(ann)));
  outs.commit();
  for (const auto& e : ann.log) {
    log.log(e.dropped ? LogLevel::kInfo : LogLevel::kWarn, e.dropped ? "box-dropped" : "box-warning",
            {{"index", e.box_index}, {"category", e.category}, {"reason", e.reason}});
  }
  log.info("annotate-done", {{"kept", ann.boxes.size()}, {"detections", dets.size()}});
  return kExitOk;
}

int cmd_render(Context& ctx, const std::string& cloud_path, const std::string& mode_name, const std::string& camera_path,
               int width, int height, std::string output_dir) {
  const PipelineConfig cfg = load_config(ctx.global);
  Logger log(*ctx.err, parse_log_level(ctx.global.log_level));
  RenderMode mode;
  try {
    mode = parse_render_mode(mode_name);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  CameraModel camera;
  if (!camera_path.empty()) {
    camera = io::camera_from_json(io::parse_json(io::read_text(camera_path), "camera JSON"));
  } else {
    if (width < 1 || height < 1) fail(ErrorCode::kConfig, "render needs --camera or --width/--height");
    camera = intrinsics_from_fov(width, height, cfg.fov_deg);
  }
  const PointCloud cloud = io::decode_ply(io::read_text(cloud_path));
  if (output_dir.empty()) output_dir = cfg.io.output_dir;
  Outputs outs;
  const json summary = render_stage(cloud, camera, mode, cfg, output_dir, outs);
  outs.commit();
  log.info("render-done", summary);
  return kExitOk;
}

int cmd_evaluate(Context& ctx, const std::string& dets_path, const std::string& gts_path, const std::string& priors_path,
                 std::string output_dir) {
  const PipelineConfig cfg = load_config(ctx.global);
  Logger log(*ctx.err, parse_log_level(ctx.global.log_level));
  const DetectionSet dets = io::scenes_from_json(io::parse_json(io::read_text(dets_path), "detections JSON"));
  const GroundTruthSet gts = io::scenes_from_json(io::parse_json(io::read_text(gts_path), "ground-truth JSON"));
  std::optional<SizePriorDB> priors;
  if (!priors_path.empty()) priors = load_priors(io::read_text(priors_path));
  if (output_dir.empty()) output_dir = cfg.io.output_dir;
  Outputs outs;
  const json report = evaluate_stage(dets, gts, priors ? &*priors : nullptr, cfg, output_dir, outs);
  outs.commit();
  log.info("evaluate-done", {{"mean_ap", report["mean_ap"]}});
  *ctx.out << report["mean_ap"].get<double>() << "\n";
  return kExitOk;
}

int cmd_priors_check(Context& ctx, const std::string& path) {
  const SizePriorDB db = load_priors(io::read_text(path));
  json cats = json::array();
  for (const auto& [k, v] : db.entries()) cats.push_back(k);
  *ctx.out << dump({{"valid", true}, {"categories", db.size()}, {"names", cats}, {"source", db.source}});
  return kExitOk;
}

int cmd_pipeline(Context& ctx, const std::string& manifest_path, std::string output_dir) {
  const auto t_start = Clock::now();
  const PipelineConfig cfg = load_config(ctx.global);
  Logger log(*ctx.err, parse_log_level(ctx.global.log_level));
  if (output_dir.empty()) output_dir = cfg.io.output_dir;
  fs::path priors_path;
  const auto inputs = parse_manifest(io::parse_json(io::read_text(manifest_path), "pipeline manifest"),
                                     fs::path(manifest_path).parent_path(), priors_path);
  const SizePriorDB priors = load_priors(io::read_text(priors_path));

  std::vector<InputResult> results(inputs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      log.debug("input-start", {{"input", inputs[i].id}});
      results[i] = run_pipeline_input(inputs[i], priors, cfg, output_dir, log);
      if (results[i].ok) {
        try {
          results[i].outputs.commit();
        } catch (const Error& e) {
          results[i].ok = false;
          results[i].record["status"] = "failed";
          results[i].record["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        }
      }
    }
  };
  const int threads = std::max(1, std::min<int>(ctx.global.jobs, static_cast<int>(inputs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json records = json::array();
  SceneSet detections;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    records.push_back(results[i].record);
    if (!results[i].ok) {
      ++failed;
      continue;
    }
    detections.add({inputs[i].id, results[i].boxes});
  }
  const json manifest = {{"tool_version", kToolVersion},
                         {"config_hash", cfg.hash()},
                         {"config", [&] { auto j = cfg.to_json(); j.erase("io"); return j; }()},
                         {"seed", ctx.global.seed},
                         {"inputs", records},
                         {"summary", {{"total", inputs.size()}, {"processed", inputs.size() - failed}, {"failed", failed}}},
                         {"timings_ms", {{"total", ms_since(t_start)}}}};
  Outputs outs;
  outs.add(fs::path(output_dir) / "detections.json", dump(io::scenes_to_json(detections)));
  outs.add(fs::path(output_dir) / "run_manifest.json", dump(manifest));
  outs.commit();
  log.info("pipeline-done", {{"processed", inputs.size() - failed}, {"failed", failed}});
  return failed == 0 ? kExitOk : kExitPartial;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{{}, &out, &err};
  CLI::App app{"Depth lifting, pseudo 3D box generation, rendering and evaluation"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.add_option("--config", ctx.global.config_path, "YAML config file");
  app.add_option("--set", ctx.global.overrides, "Override a config value, e.g. --set dbscan.eps=0.05");
  app.add_option("--jobs", ctx.global.jobs, "Parallel inputs in pipeline mode");
  app.add_option("--seed", ctx.global.seed, "Reserved; no stage is stochastic");
  app.add_option("--output-dir", ctx.global.output_dir, "Output directory");
  app.add_option("--log-level", ctx.global.log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  std::function<int()> action;

  auto* lift = app.add_subcommand("lift", "Lift a depth image (16-bit PNG mm or PFM m) to a PLY point cloud");
  std::string lift_depth_path, lift_camera, lift_normals, lift_output, lift_manifest;
  bool lift_gravity = false;
  lift->add_option("depth", lift_depth_path)->required();
  lift->add_option("--camera", lift_camera, "Camera JSON; default derives intrinsics from fov_deg");
  lift->add_flag("--gravity-align", lift_gravity, "Rotate the cloud so the dominant surface normal is +Z");
  lift->add_option("--normals", lift_normals, "Camera-frame normal map (.pfm or .tif)");
  lift->add_option("-o,--output", lift_output, "Output PLY");
  lift->add_option("--manifest", lift_manifest, "Output manifest entry JSON");
  lift->callback([&] {
    action = [&] { return cmd_lift(ctx, lift_depth_path, lift_camera, lift_gravity, lift_normals, lift_output, lift_manifest); };
  });

  auto* annotate = app.add_subcommand("annotate", "Generate 3D boxes from a cloud and 2D detections");
  std::string ann_cloud, ann_dets, ann_priors, ann_output, ann_drops;
  annotate->add_option("cloud", ann_cloud)->required();
  annotate->add_option("detections", ann_dets)->required();
  annotate->add_option("priors", ann_priors)->required();
  annotate->add_option("-o,--output", ann_output, "Output annotations JSON");
  annotate->add_option("--drop-log", ann_drops, "Output drop-log JSON");
  annotate->callback([&] { action = [&] { return cmd_annotate(ctx, ann_cloud, ann_dets, ann_priors, ann_output, ann_drops); }; });

  auto* render = app.add_subcommand("render", "Render a cloud into depth PNGs");
  std::string ren_cloud, ren_mode = "single", ren_camera, ren_output;
  int ren_width = 0, ren_height = 0;
  render->add_option("cloud", ren_cloud)->required();
  render->add_option("--mode", ren_mode, "single|sweep|partial|compact");
  render->add_option("--camera", ren_camera, "Camera JSON");
  render->add_option("--width", ren_width, "Image width when no camera JSON is given");
  render->add_option("--height", ren_height, "Image height when no camera JSON is given");
  render->add_option("-o,--output", ren_output, "Output directory");
  render->callback([&] {
    action = [&] { return cmd_render(ctx, ren_cloud, ren_mode, ren_camera, ren_width, ren_height, ren_output); };
  });

  auto* evaluate = app.add_subcommand("evaluate", "Per-class AP, mAP and volume-ratio statistics");
  std::string ev_dets, ev_gts, ev_priors, ev_output;
  evaluate->add_option("detections", ev_dets)->required();
  evaluate->add_option("ground_truth", ev_gts)->required();
  evaluate->add_option("--priors", ev_priors, "Compare volumes against size priors instead of matched ground truth");
  evaluate->add_option("-o,--output", ev_output, "Output directory");
  evaluate->callback([&] { action = [&] { return cmd_evaluate(ctx, ev_dets, ev_gts, ev_priors, ev_output); }; });

  auto* pipeline = app.add_subcommand("pipeline", "Run lift, alignment, annotation and rendering over a manifest");
  std::string pipe_manifest, pipe_output;
  pipeline->add_option("manifest", pipe_manifest)->required();
  pipeline->add_option("-o,--output", pipe_output, "Output directory");
  pipeline->callback([&] { action = [&] { return cmd_pipeline(ctx, pipe_manifest, pipe_output); }; });

  auto* priors_check = app.add_subcommand("priors-check", "Validate a size-prior file");
  std::string pc_path;
  priors_check->add_option("file", pc_path)->required();
  priors_check->callback([&] { action = [&] { return cmd_priors_check(ctx, pc_path); }; });

  for (auto* sub : {lift, annotate, render, evaluate, pipeline, priors_check}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    Logger log(err, LogLevel::kError);
    log.error("command-failed", {{"code", to_string(e.code())}, {"message", e.what()}});
    err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace liftkit::cli
