#include "liftkit/boxes.hpp"

#include <cmath>

#include "liftkit/error.hpp"

namespace liftkit {

void Box2D::validate() const {
  if (!(umin < umax) || !(vmin < vmax)) fail(ErrorCode::kInvalidArgument, "2D box must have umin < umax and vmin < vmax");
  if (!(score >= 0.0 && score <= 1.0)) fail(ErrorCode::kInvalidArgument, "2D box score must lie in [0, 1]");
}

std::array<Eigen::Vector2d, 4> Box3D::bev_corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Eigen::Vector2d ax(c * dims.x() / 2.0, s * dims.x() / 2.0);
  const Eigen::Vector2d ay(-s * dims.y() / 2.0, c * dims.y() / 2.0);
  const Eigen::Vector2d o(center.x(), center.y());
  return {o - ax - ay, o + ax - ay, o + ax + ay, o - ax + ay};
}

bool Box3D::contains(const Vec3& p, double margin) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Vec3 d = p - center;
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= dims.x() / 2.0 + margin && std::abs(ly) <= dims.y() / 2.0 + margin &&
         std::abs(d.z()) <= dims.z() / 2.0 + margin;
}

void Box3D::validate() const {
  if (!center.allFinite() || !dims.allFinite() || !std::isfinite(yaw)) {
    fail(ErrorCode::kInvalidArgument, "3D box has non-finite parameters");
  }
  if (!(dims.minCoeff() > 0.0)) fail(ErrorCode::kInvalidArgument, "3D box dimensions must be positive");
  if (!(score >= 0.0 && score <= 1.0)) fail(ErrorCode::kInvalidArgument, "3D box score must lie in [0, 1]");
}

double normalize_yaw(double yaw) {
  double y = std::fmod(yaw + kPi / 2.0, kPi);
  if (y < 0.0) y += kPi;
  y -= kPi / 2.0;
  if (y >= kPi / 2.0) y -= kPi;
  return y;
}

}  // namespace liftkit
