#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace liftkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// True when `r` is orthonormal with determinant +1 within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-9);

/// Pinhole camera. Camera frame: +X right, +Y down, +Z forward.
/// `rotation`/`translation` map camera-frame points into the world frame.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Throws kInvalidArgument if any invariant is violated.
  void validate() const;

  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 to_camera(const Vec3& p_world) const { return rotation.transpose() * (p_world - translation); }
};

struct Pixel {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

class DepthImage {
 public:
  DepthImage() = default;
  /// All pixels start invalid.
  DepthImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return depths_.size(); }

  bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
  double depth(int u, int v) const { return depths_[index(u, v)]; }
  /// Non-finite or non-positive depths mark the pixel invalid.
  void set(int u, int v, double depth);
  void clear(int u, int v);

  std::size_t valid_count() const;
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  const std::vector<double>& depths() const { return depths_; }
  const std::vector<std::uint8_t>& mask() const { return valid_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> depths_;
  std::vector<std::uint8_t> valid_;
};

struct PointCloud {
  std::vector<Vec3> points;
  /// Source pixel per point; either empty or the same length as `points`.
  std::vector<Pixel> provenance;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_provenance() const { return !provenance.empty() && provenance.size() == points.size(); }

  /// Copies the listed points (and their provenance) in the given order.
  PointCloud subset(const std::vector<std::size_t>& indices) const;
  Vec3 centroid() const;
};

class NormalMap {
 public:
  NormalMap() = default;
  NormalMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  const std::optional<Vec3>& normal(int u, int v) const { return normals_[index(u, v)]; }
  /// Depth of the pixel the normal was estimated at; 0 when unknown.
  double origin_depth(int u, int v) const { return origin_depth_[index(u, v)]; }
  /// `n` is normalised before storing.
  void set(int u, int v, const Vec3& n, double origin_depth = 0.0);

  std::size_t present_count() const;
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::optional<Vec3>> normals_;
  std::vector<double> origin_depth_;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

/// Square-pixel intrinsics whose horizontal field of view is `fov_deg`.
CameraModel intrinsics_from_fov(int width, int height, double fov_deg);

/// One point per valid pixel in row-major order, transformed by the camera extrinsics.
PointCloud lift_depth(const DepthImage& depth, const CameraModel& camera);

/// Pixel coordinates and camera-frame depth of a world point; nullopt when the
/// point is on or behind the image plane.
std::optional<Projection> project_point(const Vec3& point, const CameraModel& camera);

PointCloud transform_cloud(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation);

}  // namespace liftkit
