#include "liftkit/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "liftkit/error.hpp"

namespace liftkit {
namespace {

using Vec2 = Eigen::Vector2d;

// Uniform hash grid with cell size eps; neighbour queries visit 27 cells.
class NeighborGrid {
 public:
  NeighborGrid(const std::vector<Vec3>& points, double eps) : points_(points), eps_(eps), eps2_(eps * eps) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
  }

  void query(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const auto c = cell_of(points_[i]);
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if ((points_[j] - points_[i]).squaredNorm() <= eps2_) out.push_back(j);
          }
        }
      }
    }
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / eps_)), static_cast<std::int64_t>(std::floor(p.y() / eps_)),
            static_cast<std::int64_t>(std::floor(p.z() / eps_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    // 21 bits per axis is plenty for indoor scenes at centimetre cells.
    const auto pack = [](std::int64_t v) { return static_cast<std::uint64_t>(v) & 0x1FFFFFu; };
    return (pack(c[0]) << 42) | (pack(c[1]) << 21) | pack(c[2]);
  }

  const std::vector<Vec3>& points_;
  double eps_;
  double eps2_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

std::string format_ratios(const Vec3& r) {
  std::ostringstream os;
  os << "ratios=[" << r.x() << "," << r.y() << "," << r.z() << "]";
  return os.str();
}

}  // namespace

PointCloud frustum_points(const PointCloud& cloud, const Box2D& box) {
  if (!cloud.has_provenance()) fail(ErrorCode::kInvalidArgument, "frustum extraction needs per-point pixel provenance");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double u = cloud.provenance[i].u;
    const double v = cloud.provenance[i].v;
    if (box.umin <= u && u < box.umax && box.vmin <= v && v < box.vmax) keep.push_back(i);
  }
  return cloud.subset(keep);
}

ClusterLabeling dbscan(const PointCloud& points, double eps, int min_pts) {
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "dbscan eps must be positive");
  if (min_pts < 1) fail(ErrorCode::kInvalidArgument, "dbscan min_pts must be at least 1");

  constexpr int kUnvisited = -2;
  ClusterLabeling out;
  out.labels.assign(points.size(), kUnvisited);
  if (points.empty()) return out;

  const NeighborGrid grid(points.points, eps);
  std::vector<std::size_t> neighbors;
  std::vector<std::size_t> expansion;
  std::deque<std::size_t> queue;
  const auto min_count = static_cast<std::size_t>(min_pts);

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (out.labels[i] != kUnvisited) continue;
    grid.query(i, neighbors);
    if (neighbors.size() < min_count) {
      out.labels[i] = ClusterLabeling::kNoise;
      continue;
    }
    const int id = out.cluster_count++;
    out.labels[i] = id;
    queue.assign(neighbors.begin(), neighbors.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (out.labels[j] == ClusterLabeling::kNoise) {
        out.labels[j] = id;
        continue;
      }
      if (out.labels[j] != kUnvisited) continue;
      out.labels[j] = id;
      grid.query(j, expansion);
      if (expansion.size() >= min_count) queue.insert(queue.end(), expansion.begin(), expansion.end());
    }
  }
  return out;
}

std::vector<std::size_t> select_object_cluster(const ClusterLabeling& labeling, const PointCloud& points) {
  if (labeling.labels.size() != points.size()) fail(ErrorCode::kInvalidArgument, "labeling does not match the points");
  if (labeling.cluster_count == 0) fail(ErrorCode::kEmptyCluster, "no cluster found (all points are noise)");

  std::vector<std::size_t> counts(labeling.cluster_count, 0);
  std::vector<double> dist_sum(labeling.cluster_count, 0.0);
  const Vec3 centroid = points.centroid();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int l = labeling.labels[i];
    if (l < 0) continue;
    ++counts[l];
    dist_sum[l] += (points.points[i] - centroid).norm();
  }
  int best = 0;
  for (int c = 1; c < labeling.cluster_count; ++c) {
    if (counts[c] > counts[best]) {
      best = c;
    } else if (counts[c] == counts[best] && dist_sum[c] / counts[c] < dist_sum[best] / counts[best]) {
      best = c;
    }
  }
  std::vector<std::size_t> members;
  members.reserve(counts[best]);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labeling.labels[i] == best) members.push_back(i);
  }
  return members;
}

Box3D fit_box(const PointCloud& points) {
  if (points.size() < 3) fail(ErrorCode::kDegenerateGeometry, "box fitting needs at least 3 points");
  std::vector<Vec2> xy;
  xy.reserve(points.size());
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : points.points) {
    xy.emplace_back(p.x(), p.y());
    zmin = std::min(zmin, p.z());
    zmax = std::max(zmax, p.z());
  }
  const auto hull = convex_hull(std::move(xy));
  if (hull.size() < 3) fail(ErrorCode::kDegenerateGeometry, "points are collinear in the XY plane");
  double extent = 0.0;
  for (const auto& h : hull) extent = std::max(extent, (h - hull.front()).norm());
  if (!(polygon_area(hull) > 1e-12 * extent * extent)) {
    fail(ErrorCode::kDegenerateGeometry, "points are collinear in the XY plane");
  }

  double best_area = std::numeric_limits<double>::infinity();
  Vec2 best_axis(1.0, 0.0);
  double best_lo[2] = {0, 0};
  double best_hi[2] = {0, 0};
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 axis = (hull[(i + 1) % hull.size()] - hull[i]).normalized();
    const Vec2 perp(-axis.y(), axis.x());
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[1]};
    for (const auto& h : hull) {
      const double a = h.dot(axis);
      const double b = h.dot(perp);
      lo[0] = std::min(lo[0], a);
      hi[0] = std::max(hi[0], a);
      lo[1] = std::min(lo[1], b);
      hi[1] = std::max(hi[1], b);
    }
    const double area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    if (area < best_area * (1.0 - 1e-12)) {
      best_area = area;
      best_axis = axis;
      std::copy(lo, lo + 2, best_lo);
      std::copy(hi, hi + 2, best_hi);
    }
  }

  const Vec2 perp(-best_axis.y(), best_axis.x());
  const Vec2 center_xy = best_axis * (best_lo[0] + best_hi[0]) / 2.0 + perp * (best_lo[1] + best_hi[1]) / 2.0;
  double length = best_hi[0] - best_lo[0];
  double width = best_hi[1] - best_lo[1];
  double yaw = std::atan2(best_axis.y(), best_axis.x());
  if (length < width) {
    std::swap(length, width);
    yaw += kPi / 2.0;
  }

  Box3D box;
  box.center = Vec3(center_xy.x(), center_xy.y(), (zmin + zmax) / 2.0);
  box.dims = Vec3(length, width, zmax - zmin);
  box.yaw = normalize_yaw(yaw);
  if (!(box.dims.z() > 0.0)) fail(ErrorCode::kDegenerateGeometry, "points have no vertical extent");
  return box;
}

SizeCheck size_filter(const Box3D& box, const SizePriorDB& priors, double t, UnknownCategoryPolicy policy) {
  if (!(t > 0.0 && t < 1.0)) fail(ErrorCode::kInvalidArgument, "size filter threshold must lie in (0, 1)");
  SizeCheck check;
  const auto prior = priors.find(box.category);
  if (!prior) {
    check.known_category = false;
    check.keep = policy == UnknownCategoryPolicy::kKeepWithWarning;
    return check;
  }
  std::array<double, 3> dims = {box.dims.x(), box.dims.y(), box.dims.z()};
  std::array<double, 3> ref = {prior->x(), prior->y(), prior->z()};
  std::sort(dims.begin(), dims.end(), std::greater<>());
  std::sort(ref.begin(), ref.end(), std::greater<>());
  check.keep = true;
  const double upper = 1.0 / t;
  for (int i = 0; i < 3; ++i) {
    check.ratios[i] = dims[i] / ref[i];
    if (!(t < check.ratios[i] && check.ratios[i] < upper)) check.keep = false;
  }
  return check;
}

double estimate_floor_height(const PointCloud& cloud, double bin) {
  if (cloud.empty()) return -std::numeric_limits<double>::infinity();
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -zmin;
  for (const auto& p : cloud.points) {
    zmin = std::min(zmin, p.z());
    zmax = std::max(zmax, p.z());
  }
  const auto bins = static_cast<std::size_t>((zmax - zmin) / bin) + 1;
  std::vector<std::size_t> counts(bins, 0);
  std::vector<double> sums(bins, 0.0);
  for (const auto& p : cloud.points) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>((p.z() - zmin) / bin));
    ++counts[b];
    sums[b] += p.z();
  }
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  for (std::size_t b = 0; b < bins; ++b) {
    if (counts[b] * 5 >= peak) return sums[b] / counts[b];
  }
  return zmin;
}

AnnotationResult generate_annotations(const PointCloud& cloud, const std::vector<Box2D>& boxes2d,
                                      const SizePriorDB& priors, const AnnotationParams& params) {
  if (!(params.t > 0.0 && params.t < 1.0)) fail(ErrorCode::kInvalidArgument, "size filter threshold must lie in (0, 1)");
  if (!(params.eps > 0.0) || params.min_pts < 1) fail(ErrorCode::kInvalidArgument, "invalid clustering parameters");
  if (!cloud.has_provenance() && !cloud.empty()) {
    fail(ErrorCode::kInvalidArgument, "annotation needs a cloud with pixel provenance");
  }

  const double floor_cut = params.floor_clearance >= 0.0 ? estimate_floor_height(cloud) + params.floor_clearance
                                                         : -std::numeric_limits<double>::infinity();
  AnnotationResult result;
  for (std::size_t k = 0; k < boxes2d.size(); ++k) {
    const Box2D& det = boxes2d[k];
    const auto drop = [&](std::string reason, std::string detail) {
      result.log.push_back({k, det.category, std::move(reason), std::move(detail), true});
    };
    try {
      det.validate();
    } catch (const Error& e) {
      drop("invalid-box", e.what());
      continue;
    }

    PointCloud frustum = cloud.empty() ? PointCloud{} : frustum_points(cloud, det);
    if (std::isfinite(floor_cut)) {
      std::vector<std::size_t> above;
      for (std::size_t i = 0; i < frustum.size(); ++i) {
        if (frustum.points[i].z() >= floor_cut) above.push_back(i);
      }
      frustum = frustum.subset(above);
    }

    Box3D box;
    try {
      const auto labeling = dbscan(frustum, params.eps, params.min_pts);
      const auto members = select_object_cluster(labeling, frustum);
      box = fit_box(frustum.subset(members));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyCluster) {
        drop("empty-cluster", e.what());
      } else if (e.code() == ErrorCode::kDegenerateGeometry) {
        drop("degenerate-geometry", e.what());
      } else {
        throw;
      }
      continue;
    }
    box.category = det.category;
    box.score = det.score;

    const SizeCheck check = size_filter(box, priors, params.t, params.unknown_policy);
    if (!check.known_category) {
      if (!check.keep) {
        drop("unknown-category", "no size prior for \"" + det.category + "\"");
        continue;
      }
      result.log.push_back({k, det.category, "unknown-category-kept", "no size prior; box kept", false});
    } else if (!check.keep) {
      drop("size-filtered", format_ratios(check.ratios));
      continue;
    }
    result.boxes.push_back(std::move(box));
    result.source_index.push_back(k);
  }
  return result;
}

}  // namespace liftkit
