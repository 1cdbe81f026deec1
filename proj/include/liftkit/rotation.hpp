#pragma once

#include <cstddef>
#include <optional>

#include "liftkit/geometry.hpp"

namespace liftkit {

/// Dominant surface orientation found by `cluster_normals`.
struct NormalConsensus {
  Vec3 n_pred = Vec3::UnitZ();
  std::size_t support = 0;
  std::size_t total = 0;
  double inlier_fraction = 0.0;
};

struct ClusterOptions {
  double bin_deg = 10.0;
  /// When set, only normals within `prefilter_deg` of this direction (or its
  /// antipode) take part in the vote.
  std::optional<Vec3> prefilter_axis;
  double prefilter_deg = 30.0;
};

/// Central-difference normals of the lifted surface, in the camera frame,
/// oriented towards the camera. Border pixels and pixels with an invalid
/// 4-neighbourhood get no normal.
NormalMap estimate_normals(const DepthImage& depth, const CameraModel& camera);

/// Mode of the antipodally-merged spherical histogram of `normals`.
NormalConsensus cluster_normals(const NormalMap& normals, const ClusterOptions& options = {});

/// Rotation taking `n_pred` onto `z_axis`:
///   R = I + K + K^2 (1 - n.z) / |v|^2,  v = n x z,  K = [v]_x
Mat3 rodrigues_alignment(const Vec3& n_pred, const Vec3& z_axis = Vec3::UnitZ());

struct OrientationOptions {
  ClusterOptions cluster;
  double inlier_warn_threshold = 0.2;
  /// Externally supplied camera-frame normals; skips `estimate_normals`.
  const NormalMap* normals = nullptr;
};

struct OrientationResult {
  PointCloud cloud;
  Mat3 rotation = Mat3::Identity();
  NormalConsensus consensus;
  /// Consensus normal expressed in the input cloud's frame.
  Vec3 n_world = Vec3::UnitZ();
  bool low_confidence = false;
};

/// Rotates `cloud` (lifted from `depth` with `camera`) so the dominant
/// surface normal points along world +Z.
OrientationResult correct_orientation(const PointCloud& cloud, const DepthImage& depth, const CameraModel& camera,
                                      const OrientationOptions& options = {});

}  // namespace liftkit
