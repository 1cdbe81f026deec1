#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liftkit/boxes.hpp"
#include "liftkit/priors.hpp"

namespace liftkit {

struct Scene {
  std::string id;
  std::vector<Box3D> boxes;
};

/// Per-scene box lists with unique scene ids. Used for both detections and
/// ground truth (where scores are ignored).
class SceneSet {
 public:
  /// Throws kInvalidArgument on a duplicate scene id.
  void add(Scene scene);
  const std::vector<Scene>& scenes() const { return scenes_; }
  const Scene* find(const std::string& id) const;
  std::vector<std::string> categories() const;

 private:
  std::vector<Scene> scenes_;
  std::map<std::string, std::size_t> index_;
};

using DetectionSet = SceneSet;
using GroundTruthSet = SceneSet;

/// Area of the intersection of two convex polygons (counter-clockwise).
double convex_intersection_area(const std::vector<Eigen::Vector2d>& a, const std::vector<Eigen::Vector2d>& b);

/// Rotated IoU: BEV polygon intersection times z overlap.
double iou3d(const Box3D& a, const Box3D& b);
/// Treats both boxes as axis-aligned (yaw ignored).
double iou3d_axis_aligned(const Box3D& a, const Box3D& b);

struct ApOptions {
  double iou_thresh = 0.25;
  bool rotated = true;
};

/// All-points interpolated AP; nullopt when the category has no ground truth.
std::optional<double> average_precision(const DetectionSet& dets, const GroundTruthSet& gts, const std::string& category,
                                        const ApOptions& options = {});

struct MeanApReport {
  double mean_ap = 0.0;
  std::map<std::string, std::optional<double>> per_class;
  std::vector<std::string> undefined;
};

/// Mean over classes with a defined AP. Throws kNoData if none is defined.
MeanApReport mean_ap(const DetectionSet& dets, const GroundTruthSet& gts, const std::vector<std::string>& categories,
                     const ApOptions& options = {});

struct KdeCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  std::vector<double> samples;

  /// Exact density at `x`.
  double evaluate(double x) const;
};

inline constexpr std::size_t kKdeGridPoints = 512;

/// Silverman's rule of thumb, with fallbacks for zero spread.
double silverman_bandwidth(const std::vector<double>& samples);

/// Gaussian KDE on a 512-point grid over [min - 5h, max + 5h]; `bandwidth`
/// of nullopt selects Silverman's rule.
KdeCurve kde(const std::vector<double>& samples, std::optional<double> bandwidth = std::nullopt);

struct CategoryRatios {
  std::string category;
  std::size_t instances = 0;
  std::vector<double> ratios;
  std::optional<KdeCurve> curve;
};

/// Ratio_V per box against the category prior; the `top_k` most frequent
/// categories (ties by name) are reported. Boxes without a prior are skipped.
std::vector<CategoryRatios> ratio_report(const std::vector<Box3D>& boxes, const SizePriorDB& refs, std::size_t top_k = 10);

/// Ratio_V per detection against the best-IoU ground-truth box of the same
/// category and scene; unmatched detections are skipped.
std::vector<CategoryRatios> ratio_report(const DetectionSet& dets, const GroundTruthSet& refs, std::size_t top_k = 10,
                                         bool rotated = true);

}  // namespace liftkit
