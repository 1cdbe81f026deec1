#pragma once

#include <array>
#include <string>

#include "liftkit/geometry.hpp"

namespace liftkit {

/// Half-open pixel rectangle [umin, umax) x [vmin, vmax) from a 2D detector.
struct Box2D {
  double umin = 0.0;
  double vmin = 0.0;
  double umax = 0.0;
  double vmax = 0.0;
  std::string category;
  double score = 1.0;

  void validate() const;
};

/// Gravity-aligned oriented box. `dims` = (L, W, H) measured along the local
/// axes (cos yaw, sin yaw, 0), (-sin yaw, cos yaw, 0) and +Z.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();
  double yaw = 0.0;
  std::string category;
  double score = 1.0;

  double volume() const { return dims.x() * dims.y() * dims.z(); }
  /// BEV corners in counter-clockwise order.
  std::array<Eigen::Vector2d, 4> bev_corners() const;
  bool contains(const Vec3& p, double margin = 0.0) const;
  void validate() const;
};

/// Maps any angle onto [-pi/2, pi/2); boxes are symmetric under a half turn.
double normalize_yaw(double yaw);

}  // namespace liftkit
