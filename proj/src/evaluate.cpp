#include "liftkit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "liftkit/error.hpp"

namespace liftkit {
namespace {

using Vec2 = Eigen::Vector2d;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double shoelace(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

std::vector<Vec2> corners_of(const Box3D& box) {
  const auto c = box.bev_corners();
  return {c.begin(), c.end()};
}

double z_overlap(const Box3D& a, const Box3D& b) {
  const double lo = std::max(a.center.z() - a.dims.z() / 2.0, b.center.z() - b.dims.z() / 2.0);
  const double hi = std::min(a.center.z() + a.dims.z() / 2.0, b.center.z() + b.dims.z() / 2.0);
  return std::max(0.0, hi - lo);
}

double interval_overlap(double ca, double la, double cb, double lb) {
  return std::max(0.0, std::min(ca + la / 2.0, cb + lb / 2.0) - std::max(ca - la / 2.0, cb - lb / 2.0));
}

struct RankedDetection {
  const Box3D* box;
  const std::string* scene;
  std::size_t order;
};

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<CategoryRatios> finish_report(std::map<std::string, std::vector<double>> by_category, std::size_t top_k) {
  if (top_k < 1) fail(ErrorCode::kInvalidArgument, "top_k must be at least 1");
  if (by_category.empty()) fail(ErrorCode::kNoData, "no categories with a reference size");
  std::vector<CategoryRatios> report;
  for (auto& [category, ratios] : by_category) {
    CategoryRatios entry;
    entry.category = category;
    entry.instances = ratios.size();
    entry.ratios = std::move(ratios);
    report.push_back(std::move(entry));
  }
  std::stable_sort(report.begin(), report.end(),
                   [](const CategoryRatios& a, const CategoryRatios& b) { return a.instances > b.instances; });
  if (report.size() > top_k) report.resize(top_k);
  for (auto& entry : report) entry.curve = kde(entry.ratios);
  return report;
}

}  // namespace

void SceneSet::add(Scene scene) {
  if (index_.count(scene.id) != 0) fail(ErrorCode::kInvalidArgument, "duplicate scene id \"" + scene.id + "\"");
  index_.emplace(scene.id, scenes_.size());
  scenes_.push_back(std::move(scene));
}

const Scene* SceneSet::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &scenes_[it->second];
}

std::vector<std::string> SceneSet::categories() const {
  std::set<std::string> cats;
  for (const auto& s : scenes_) {
    for (const auto& b : s.boxes) cats.insert(b.category);
  }
  return {cats.begin(), cats.end()};
}

double convex_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  // Sutherland-Hodgman: clip `a` against every edge of the convex clipper `b`.
  std::vector<Vec2> poly = a;
  for (std::size_t i = 0; i < b.size() && !poly.empty(); ++i) {
    const Vec2& p = b[i];
    const Vec2 edge = b[(i + 1) % b.size()] - p;
    std::vector<Vec2> next;
    next.reserve(poly.size() + 1);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      const Vec2& cur = poly[j];
      const Vec2& nxt = poly[(j + 1) % poly.size()];
      const double sc = cross(edge, cur - p);
      const double sn = cross(edge, nxt - p);
      if (sc >= 0.0) next.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        const double t = sc / (sc - sn);
        next.push_back(cur + t * (nxt - cur));
      }
    }
    poly = std::move(next);
  }
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, shoelace(poly));
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double h = z_overlap(a, b);
  if (h <= 0.0) return 0.0;
  const double area = convex_intersection_area(corners_of(a), corners_of(b));
  const double inter = area * h;
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou3d_axis_aligned(const Box3D& a, const Box3D& b) {
  const double inter = interval_overlap(a.center.x(), a.dims.x(), b.center.x(), b.dims.x()) *
                       interval_overlap(a.center.y(), a.dims.y(), b.center.y(), b.dims.y()) *
                       interval_overlap(a.center.z(), a.dims.z(), b.center.z(), b.dims.z());
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<double> average_precision(const DetectionSet& dets, const GroundTruthSet& gts, const std::string& category,
                                        const ApOptions& options) {
  if (!(options.iou_thresh > 0.0 && options.iou_thresh < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0, 1)");
  }
  std::map<std::string, std::vector<const Box3D*>> gt_by_scene;
  std::size_t positives = 0;
  for (const auto& scene : gts.scenes()) {
    for (const auto& box : scene.boxes) {
      if (box.category != category) continue;
      gt_by_scene[scene.id].push_back(&box);
      ++positives;
    }
  }
  if (positives == 0) return std::nullopt;

  std::vector<RankedDetection> ranked;
  for (const auto& scene : dets.scenes()) {
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
      if (scene.boxes[i].category == category) ranked.push_back({&scene.boxes[i], &scene.id, i});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedDetection& a, const RankedDetection& b) {
    if (a.box->score != b.box->score) return a.box->score > b.box->score;
    if (*a.scene != *b.scene) return *a.scene < *b.scene;
    return a.order < b.order;
  });

  std::map<std::string, std::vector<bool>> taken;
  for (const auto& [id, boxes] : gt_by_scene) taken[id].assign(boxes.size(), false);

  std::vector<double> recall;
  std::vector<double> precision;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& det : ranked) {
    bool hit = false;
    const auto it = gt_by_scene.find(*det.scene);
    if (it != gt_by_scene.end()) {
      auto& used = taken[*det.scene];
      double best = -1.0;
      std::size_t best_idx = 0;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (used[g]) continue;
        const double iou =
            options.rotated ? iou3d(*det.box, *it->second[g]) : iou3d_axis_aligned(*det.box, *it->second[g]);
        if (iou > best) {
          best = iou;
          best_idx = g;
        }
      }
      if (best >= options.iou_thresh) {
        used[best_idx] = true;
        hit = true;
      }
    }
    hit ? ++tp : ++fp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }

  // Sentinel-padded precision envelope, summed over recall steps.
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i-- > 0;) mpre[i] = std::max(mpre[i], mpre[i + 1]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

MeanApReport mean_ap(const DetectionSet& dets, const GroundTruthSet& gts, const std::vector<std::string>& categories,
                     const ApOptions& options) {
  if (categories.empty()) fail(ErrorCode::kInvalidArgument, "no categories to evaluate");
  MeanApReport report;
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& category : categories) {
    const auto ap = average_precision(dets, gts, category, options);
    report.per_class[category] = ap;
    if (ap) {
      sum += *ap;
      ++defined;
    } else {
      report.undefined.push_back(category);
    }
  }
  if (defined == 0) fail(ErrorCode::kNoData, "no category has ground truth");
  report.mean_ap = sum / static_cast<double>(defined);
  return report;
}

double KdeCurve::evaluate(double x) const {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  double sum = 0.0;
  for (double s : samples) {
    const double z = (x - s) / bandwidth;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * kInvSqrt2Pi / (static_cast<double>(samples.size()) * bandwidth);
}

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.empty()) fail(ErrorCode::kNoData, "no samples");
  const auto degenerate = [&] { return std::max(1e-3, std::abs(samples.front()) * 1e-3); };
  const std::size_t n = samples.size();
  if (n < 2) return degenerate();
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sigma, iqr / 1.34);
  if (!(spread > 0.0)) spread = sigma;
  if (!(spread > 0.0)) return degenerate();
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeCurve kde(const std::vector<double>& samples, std::optional<double> bandwidth) {
  if (samples.empty()) fail(ErrorCode::kNoData, "kernel density estimate needs at least one sample");
  for (double s : samples) {
    if (!std::isfinite(s)) fail(ErrorCode::kInvalidArgument, "samples must be finite");
  }
  if (bandwidth && !(*bandwidth > 0.0)) fail(ErrorCode::kInvalidArgument, "bandwidth must be positive");

  KdeCurve curve;
  curve.samples = samples;
  curve.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 5.0 * curve.bandwidth;
  const double hi = *hi_it + 5.0 * curve.bandwidth;
  curve.grid.resize(kKdeGridPoints);
  curve.density.resize(kKdeGridPoints);
  for (std::size_t i = 0; i < kKdeGridPoints; ++i) {
    curve.grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kKdeGridPoints - 1);
    curve.density[i] = curve.evaluate(curve.grid[i]);
  }
  return curve;
}

std::vector<CategoryRatios> ratio_report(const std::vector<Box3D>& boxes, const SizePriorDB& refs, std::size_t top_k) {
  std::map<std::string, std::vector<double>> by_category;
  for (const auto& box : boxes) {
    const auto ref = refs.find(box.category);
    if (!ref) continue;
    by_category[box.category].push_back(volume_ratio(box, *ref));
  }
  return finish_report(std::move(by_category), top_k);
}

std::vector<CategoryRatios> ratio_report(const DetectionSet& dets, const GroundTruthSet& refs, std::size_t top_k,
                                         bool rotated) {
  std::map<std::string, std::vector<double>> by_category;
  for (const auto& scene : dets.scenes()) {
    const Scene* gt = refs.find(scene.id);
    if (gt == nullptr) continue;
    for (const auto& box : scene.boxes) {
      const Box3D* match = nullptr;
      double best = 0.0;
      for (const auto& g : gt->boxes) {
        if (g.category != box.category) continue;
        const double iou = rotated ? iou3d(box, g) : iou3d_axis_aligned(box, g);
        if (iou > best) {
          best = iou;
          match = &g;
        }
      }
      if (match != nullptr) by_category[box.category].push_back(volume_ratio(box, match->dims));
    }
  }
  return finish_report(std::move(by_category), top_k);
}

}  // namespace liftkit
