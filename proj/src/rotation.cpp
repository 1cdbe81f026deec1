#include "liftkit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Geometry>

#include "liftkit/error.hpp"

namespace liftkit {
namespace {

Vec3 camera_point(const DepthImage& depth, const CameraModel& camera, int u, int v) {
  const double d = depth.depth(u, v);
  return {(u - camera.cx) * d / camera.fx, (v - camera.cy) * d / camera.fy, d};
}

constexpr double kWeakUpComponent = 0.1;

// Representative of {n, -n} in the hemisphere facing camera-frame up (-Y).
Vec3 canonical_axis(const Vec3& n) {
  if (n.y() < 0.0) return n;
  if (n.y() > 0.0) return -n;
  if (n.z() > 0.0) return n;
  if (n.z() < 0.0) return -n;
  return n.x() >= 0.0 ? n : Vec3(-n);
}

// Equal-width polar rings around the up axis; the cap is a single bin, the
// other rings are split into roughly square azimuth slices. The ring that
// reaches the equator folds azimuth modulo 180 degrees so that antipodal
// near-horizontal normals meet in one bin.
class SphereBinning {
 public:
  explicit SphereBinning(double bin_deg) : bin_(deg2rad(bin_deg)) {
    rings_ = static_cast<int>(std::ceil(90.0 / bin_deg - 1e-12));
    offsets_.reserve(rings_ + 1);
    int offset = 0;
    for (int r = 0; r < rings_; ++r) {
      offsets_.push_back(offset);
      offset += slices(r);
    }
    offsets_.push_back(offset);
  }

  int bin_of(const Vec3& canonical) const {
    const double polar = std::acos(std::clamp(-canonical.y(), -1.0, 1.0));
    const int ring = std::min(static_cast<int>(polar / bin_), rings_ - 1);
    const int n = slices(ring);
    if (n == 1) return offsets_[ring];
    double azimuth = std::atan2(canonical.z(), canonical.x()) + kPi;  // [0, 2pi]
    double period = 2.0 * kPi;
    if (ring == rings_ - 1) {
      period = kPi;
      azimuth = std::fmod(azimuth, kPi);
    }
    const int slice = std::min(static_cast<int>(azimuth / period * n), n - 1);
    return offsets_[ring] + slice;
  }

 private:
  int slices(int ring) const {
    if (ring == 0) return 1;
    const double mid = std::min((ring + 0.5) * bin_, kPi / 2.0);
    const int full = std::max(1, static_cast<int>(std::lround(2.0 * kPi * std::sin(mid) / bin_)));
    return ring == rings_ - 1 ? std::max(1, (full + 1) / 2) : full;
  }

  double bin_;
  int rings_ = 1;
  std::vector<int> offsets_;
};

struct BinStats {
  std::size_t count = 0;
  double depth_sum = 0.0;
  Vec3 reference = Vec3::Zero();
  Vec3 sum = Vec3::Zero();
};

}  // namespace

NormalMap estimate_normals(const DepthImage& depth, const CameraModel& camera) {
  if (depth.width() != camera.width || depth.height() != camera.height) {
    fail(ErrorCode::kInvalidArgument, "depth image size does not match the camera");
  }
  NormalMap out(depth.width(), depth.height());
  for (int v = 1; v + 1 < depth.height(); ++v) {
    for (int u = 1; u + 1 < depth.width(); ++u) {
      if (!depth.valid(u, v) || !depth.valid(u - 1, v) || !depth.valid(u + 1, v) || !depth.valid(u, v - 1) ||
          !depth.valid(u, v + 1)) {
        continue;
      }
      const Vec3 du = camera_point(depth, camera, u + 1, v) - camera_point(depth, camera, u - 1, v);
      const Vec3 dv = camera_point(depth, camera, u, v + 1) - camera_point(depth, camera, u, v - 1);
      Vec3 n = du.cross(dv);
      const double len = n.norm();
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      n /= len;
      const Vec3 ray = camera_point(depth, camera, u, v);
      if (n.dot(ray) > 0.0) n = -n;
      out.set(u, v, n, depth.depth(u, v));
    }
  }
  return out;
}

NormalConsensus cluster_normals(const NormalMap& normals, const ClusterOptions& options) {
  if (!(options.bin_deg >= 1.0 && options.bin_deg <= 45.0)) {
    fail(ErrorCode::kInvalidArgument, "bin width must lie in [1, 45] degrees");
  }
  std::optional<Vec3> axis;
  double min_cos = 0.0;
  if (options.prefilter_axis) {
    if (!(options.prefilter_axis->norm() > 0.0)) fail(ErrorCode::kInvalidArgument, "zero prefilter axis");
    axis = options.prefilter_axis->normalized();
    min_cos = std::cos(deg2rad(options.prefilter_deg));
  }

  const SphereBinning binning(options.bin_deg);
  std::map<int, BinStats> bins;
  std::size_t total = 0;
  for (int v = 0; v < normals.height(); ++v) {
    for (int u = 0; u < normals.width(); ++u) {
      const auto& n = normals.normal(u, v);
      if (!n) continue;
      if (axis && std::abs(n->dot(*axis)) < min_cos) continue;
      const Vec3 c = canonical_axis(*n);
      auto& bin = bins[binning.bin_of(c)];
      if (bin.count == 0) bin.reference = c;
      bin.sum += c.dot(bin.reference) >= 0.0 ? c : Vec3(-c);
      bin.depth_sum += normals.origin_depth(u, v);
      ++bin.count;
      ++total;
    }
  }
  if (total == 0) fail(ErrorCode::kNoData, "no normals available for clustering");

  // std::map iterates in ascending bin index, so the first strict winner is
  // also the lowest index among equals.
  const BinStats* best = nullptr;
  for (const auto& [index, bin] : bins) {
    if (best == nullptr || bin.count > best->count) {
      best = &bin;
      continue;
    }
    if (bin.count == best->count) {
      const double mean = bin.depth_sum / bin.count;
      const double best_mean = best->depth_sum / best->count;
      if (mean < best_mean) best = &bin;
    }
  }

  NormalConsensus result;
  Vec3 mean = best->sum;
  if (!(mean.norm() > 0.0)) mean = best->reference;
  result.n_pred = canonical_axis(mean.normalized());
  result.support = best->count;
  result.total = total;
  result.inlier_fraction = static_cast<double>(best->count) / static_cast<double>(total);
  return result;
}

Mat3 rodrigues_alignment(const Vec3& n_pred, const Vec3& z_axis) {
  if (!n_pred.allFinite() || !z_axis.allFinite() || std::abs(n_pred.norm() - 1.0) > 1e-6 ||
      std::abs(z_axis.norm() - 1.0) > 1e-6) {
    fail(ErrorCode::kInvalidArgument, "alignment vectors must be unit length");
  }
  const Vec3 n = n_pred.normalized();
  const Vec3 z = z_axis.normalized();
  const Vec3 v = n.cross(z);
  const double c = n.dot(z);
  const double vv = v.squaredNorm();
  if (std::sqrt(vv) < 1e-9 && c < 0.0) {
    fail(ErrorCode::kDegenerateRotation, "normal is antiparallel to the target axis");
  }
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  // (1 - c) / |v|^2 == 1 / (1 + c) for unit inputs; the second form is used
  // once |v|^2 is too small for the quotient to be accurate.
  const double scale = vv > 1e-12 ? (1.0 - c) / vv : 1.0 / (1.0 + c);
  return Mat3::Identity() + k + k * k * scale;
}

OrientationResult correct_orientation(const PointCloud& cloud, const DepthImage& depth, const CameraModel& camera,
                                      const OrientationOptions& options) {
  NormalMap estimated;
  const NormalMap* normals = options.normals;
  if (normals == nullptr) {
    estimated = estimate_normals(depth, camera);
    normals = &estimated;
  }
  OrientationResult result;
  result.consensus = cluster_normals(*normals, options.cluster);
  // The canonical sign points toward image-up. When the image-up component
  // is weak (a camera looking steeply down or up), take the sign facing the
  // camera instead: visible surfaces are seen from their front side.
  Vec3 n_cam = result.consensus.n_pred;
  if (std::abs(n_cam.y()) < kWeakUpComponent && n_cam.z() > 0.0) n_cam = -n_cam;
  result.n_world = (camera.rotation * n_cam).normalized();
  result.rotation = rodrigues_alignment(result.n_world, Vec3::UnitZ());
  result.cloud = transform_cloud(cloud, result.rotation, Vec3::Zero());
  result.low_confidence = result.consensus.inlier_fraction < options.inlier_warn_threshold;
  return result;
}

}  // namespace liftkit
