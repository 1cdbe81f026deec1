#include "liftkit/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "liftkit/error.hpp"

namespace liftkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNoData: return "no-data";
    case ErrorCode::kDegenerateRotation: return "degenerate-rotation";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kEmptyCluster: return "empty-cluster";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kConfig: return "config error";
  }
  return "unknown";
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

void CameraModel::validate() const {
  if (width < 1 || height < 1) fail(ErrorCode::kInvalidArgument, "camera dimensions must be positive");
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    fail(ErrorCode::kInvalidArgument, "focal lengths must be positive and finite");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    fail(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
  if (!is_rotation(rotation)) fail(ErrorCode::kInvalidArgument, "camera rotation is not a proper rotation");
  if (!translation.allFinite()) fail(ErrorCode::kInvalidArgument, "camera translation is not finite");
}

DepthImage::DepthImage(int width, int height) {
  if (width < 0 || height < 0) fail(ErrorCode::kInvalidArgument, "negative image dimensions");
  width_ = width;
  height_ = height;
  depths_.assign(static_cast<std::size_t>(width) * height, 0.0);
  valid_.assign(depths_.size(), 0);
}

void DepthImage::set(int u, int v, double depth) {
  const std::size_t i = index(u, v);
  if (std::isfinite(depth) && depth > 0.0) {
    depths_[i] = depth;
    valid_[i] = 1;
  } else {
    depths_[i] = 0.0;
    valid_[i] = 0;
  }
}

void DepthImage::clear(int u, int v) {
  const std::size_t i = index(u, v);
  depths_[i] = 0.0;
  valid_[i] = 0;
}

std::size_t DepthImage::valid_count() const {
  std::size_t n = 0;
  for (auto m : valid_) n += m;
  return n;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  const bool prov = has_provenance();
  if (prov) out.provenance.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points.at(i));
    if (prov) out.provenance.push_back(provenance[i]);
  }
  return out;
}

Vec3 PointCloud::centroid() const {
  Vec3 c = Vec3::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

NormalMap::NormalMap(int width, int height) : width_(width), height_(height) {
  normals_.assign(static_cast<std::size_t>(width) * height, std::nullopt);
  origin_depth_.assign(normals_.size(), 0.0);
}

void NormalMap::set(int u, int v, const Vec3& n, double origin_depth) {
  const double len = n.norm();
  if (!(len > 0.0) || !std::isfinite(len)) fail(ErrorCode::kInvalidArgument, "normal must be non-zero and finite");
  normals_[index(u, v)] = n / len;
  origin_depth_[index(u, v)] = origin_depth;
}

std::size_t NormalMap::present_count() const {
  std::size_t n = 0;
  for (const auto& x : normals_) n += x.has_value();
  return n;
}

CameraModel intrinsics_from_fov(int width, int height, double fov_deg) {
  if (width < 1 || height < 1) fail(ErrorCode::kInvalidArgument, "image dimensions must be at least 1");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    fail(ErrorCode::kInvalidArgument, "field of view must lie in (0, 180) degrees, got " + std::to_string(fov_deg));
  }
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fx = (width / 2.0) / std::tan(deg2rad(fov_deg) / 2.0);
  cam.fy = cam.fx;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  return cam;
}

PointCloud lift_depth(const DepthImage& depth, const CameraModel& camera) {
  if (depth.width() != camera.width || depth.height() != camera.height) {
    fail(ErrorCode::kInvalidArgument, "depth image size does not match the camera");
  }
  PointCloud cloud;
  cloud.points.reserve(depth.valid_count());
  cloud.provenance.reserve(depth.valid_count());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const double d = depth.depth(u, v);
      const Vec3 p_cam((u - camera.cx) * d / camera.fx, (v - camera.cy) * d / camera.fy, d);
      cloud.points.push_back(camera.to_world(p_cam));
      cloud.provenance.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)});
    }
  }
  return cloud;
}

std::optional<Projection> project_point(const Vec3& point, const CameraModel& camera) {
  const Vec3 p = camera.to_camera(point);
  if (!(p.z() > 0.0)) return std::nullopt;
  return Projection{camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy, p.z()};
}

PointCloud transform_cloud(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation) {
  if (!is_rotation(rotation)) fail(ErrorCode::kInvalidArgument, "transform rotation is not orthonormal");
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(rotation * p + translation);
  out.provenance = cloud.provenance;
  return out;
}

}  // namespace liftkit
