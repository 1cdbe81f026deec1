#pragma once

#include <string>
#include <vector>

#include "liftkit/boxes.hpp"
#include "liftkit/geometry.hpp"
#include "liftkit/priors.hpp"

namespace liftkit {

struct ClusterLabeling {
  static constexpr int kNoise = -1;
  std::vector<int> labels;
  int cluster_count = 0;
};

/// Points whose source pixel lies inside the half-open 2D box, in cloud order.
PointCloud frustum_points(const PointCloud& cloud, const Box2D& box);

/// Density clustering. A core point has at least `min_pts` neighbours within
/// `eps` (inclusive, counting itself). Clusters are numbered in the order of
/// their lowest-index core point; a border point reachable from several
/// clusters joins the first one.
ClusterLabeling dbscan(const PointCloud& points, double eps, int min_pts);

/// Members of the largest cluster. Ties: smaller mean distance to the
/// centroid of all points, then lower cluster id. Throws kEmptyCluster.
std::vector<std::size_t> select_object_cluster(const ClusterLabeling& labeling, const PointCloud& points);

/// Minimum-area BEV rectangle (rotating calipers on the XY hull) extruded over
/// the z range. L >= W; yaw in [-pi/2, pi/2).
Box3D fit_box(const PointCloud& points);

enum class UnknownCategoryPolicy { kKeepWithWarning, kReject };

struct SizeCheck {
  bool keep = false;
  bool known_category = true;
  /// Sorted box dims over sorted prior dims, largest first.
  Vec3 ratios = Vec3::Zero();
};

/// Keeps the box iff t < ratio < 1/t for each dimension (strict).
SizeCheck size_filter(const Box3D& box, const SizePriorDB& priors, double t,
                      UnknownCategoryPolicy policy = UnknownCategoryPolicy::kKeepWithWarning);

struct AnnotationParams {
  double eps = 0.1;
  int min_pts = 10;
  double t = 0.1;
  UnknownCategoryPolicy unknown_policy = UnknownCategoryPolicy::kKeepWithWarning;
  /// Points lower than floor + clearance are dropped before clustering;
  /// negative disables support-plane removal.
  double floor_clearance = 0.03;
};

struct AnnotationLogEntry {
  std::size_t box_index = 0;
  std::string category;
  /// "empty-cluster", "degenerate-geometry", "size-filtered", "unknown-category"
  /// for drops; "unknown-category-kept" for warnings.
  std::string reason;
  std::string detail;
  bool dropped = true;
};

struct AnnotationResult {
  std::vector<Box3D> boxes;
  /// Index into the input 2D boxes for each kept box.
  std::vector<std::size_t> source_index;
  std::vector<AnnotationLogEntry> log;
};

/// Height of the lowest dense horizontal layer of a gravity-aligned cloud.
double estimate_floor_height(const PointCloud& cloud, double bin = 0.02);

AnnotationResult generate_annotations(const PointCloud& cloud, const std::vector<Box2D>& boxes2d,
                                      const SizePriorDB& priors, const AnnotationParams& params = {});

}  // namespace liftkit
