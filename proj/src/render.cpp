#include "liftkit/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "liftkit/error.hpp"

namespace liftkit {
namespace {

std::vector<std::size_t> set_difference_sorted(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

void Viewpoint::validate() const {
  const auto in_range = [](double a) { return a > -180.0 && a <= 180.0; };
  if (!in_range(theta_h) || !in_range(theta_v)) fail(ErrorCode::kInvalidArgument, "view angles must lie in (-180, 180]");
}

CameraModel view_camera(const Viewpoint& view, const Vec3& pivot) {
  view.validate();
  if (view.theta_h == 0.0 && view.theta_v == 0.0) return view.base;
  const Mat3 turn_h = Eigen::AngleAxisd(deg2rad(view.theta_h), Vec3::UnitZ()).toRotationMatrix();
  const Vec3 right = turn_h * view.base.rotation.col(0);
  const Mat3 turn_v = Eigen::AngleAxisd(deg2rad(view.theta_v), right.normalized()).toRotationMatrix();
  const Mat3 orbit = turn_v * turn_h;

  CameraModel cam = view.base;
  cam.rotation = orbit * view.base.rotation;
  cam.translation = pivot + orbit * (view.base.translation - pivot);
  return cam;
}

bool pixel_of(const Projection& proj, const CameraModel& camera, int& u, int& v) {
  const double fu = std::floor(proj.u + 0.5);
  const double fv = std::floor(proj.v + 0.5);
  if (!(fu >= 0.0 && fu < camera.width && fv >= 0.0 && fv < camera.height)) return false;
  u = static_cast<int>(fu);
  v = static_cast<int>(fv);
  return true;
}

DepthImage render_depth(const PointCloud& cloud, const CameraModel& camera, int splat_px) {
  if (splat_px < 1 || splat_px % 2 == 0) fail(ErrorCode::kInvalidArgument, "splat size must be a positive odd number");
  DepthImage image(camera.width, camera.height);
  const int half = splat_px / 2;
  for (const auto& p : cloud.points) {
    const auto proj = project_point(p, camera);
    if (!proj) continue;
    const double cu = std::floor(proj->u + 0.5);
    const double cv = std::floor(proj->v + 0.5);
    if (cu + half < 0.0 || cu - half >= camera.width || cv + half < 0.0 || cv - half >= camera.height) continue;
    const int u0 = std::max(0, static_cast<int>(cu) - half);
    const int u1 = std::min(camera.width - 1, static_cast<int>(cu) + half);
    const int v0 = std::max(0, static_cast<int>(cv) - half);
    const int v1 = std::min(camera.height - 1, static_cast<int>(cv) + half);
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        if (!image.valid(u, v) || proj->z < image.depth(u, v)) image.set(u, v, proj->z);
      }
    }
  }
  return image;
}

VisibilityResult visible_set(const PointCloud& cloud, const CameraModel& camera, double depth_tol) {
  if (!(depth_tol > 0.0)) fail(ErrorCode::kInvalidArgument, "depth tolerance must be positive");
  const std::size_t n = cloud.size();
  std::vector<double> zbuf(static_cast<std::size_t>(camera.width) * camera.height,
                           std::numeric_limits<double>::infinity());
  std::vector<std::ptrdiff_t> pixel(n, -1);
  std::vector<double> depth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto proj = project_point(cloud.points[i], camera);
    int u = 0;
    int v = 0;
    if (!proj || !pixel_of(*proj, camera, u, v)) continue;
    const auto idx = static_cast<std::ptrdiff_t>(v) * camera.width + u;
    pixel[i] = idx;
    depth[i] = proj->z;
    zbuf[idx] = std::min(zbuf[idx], proj->z);
  }
  VisibilityResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (pixel[i] < 0) {
      result.out_of_frame.push_back(i);
    } else if (depth[i] <= zbuf[pixel[i]] + depth_tol) {
      result.visible.push_back(i);
    } else {
      result.occluded.push_back(i);
    }
  }
  return result;
}

VisibilityResult visible_set(const PointCloud& cloud, const Viewpoint& view, double depth_tol) {
  return visible_set(cloud, view_camera(view, cloud.centroid()), depth_tol);
}

PointCloud partial_view_removal(const PointCloud& cloud, const Viewpoint& view_a, const Viewpoint& view_b,
                                double depth_tol) {
  const auto a = visible_set(cloud, view_a, depth_tol);
  const auto b = visible_set(cloud, view_b, depth_tol);
  return cloud.subset(set_difference_sorted(a.visible, b.visible));
}

std::vector<std::pair<double, double>> angle_sweep() {
  std::vector<std::pair<double, double>> grid;
  grid.reserve(121);
  for (int kh = 0; kh <= 10; ++kh) {
    for (int kv = 0; kv <= 10; ++kv) grid.emplace_back(-75.0 + 15.0 * kh, -75.0 + 15.0 * kv);
  }
  return grid;
}

double compactness(const DepthImage& image) {
  int umin = image.width();
  int umax = -1;
  int vmin = image.height();
  int vmax = -1;
  std::size_t count = 0;
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      if (!image.valid(u, v)) continue;
      ++count;
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (count == 0) return 0.0;
  const double area = static_cast<double>(umax - umin + 1) * static_cast<double>(vmax - vmin + 1);
  return static_cast<double>(count) / area;
}

CompactView best_compact_view(const PointCloud& cloud, const CameraModel& base, const std::vector<Viewpoint>& candidates,
                              int splat_px) {
  if (candidates.empty()) fail(ErrorCode::kInvalidArgument, "no candidate viewpoints");
  const Vec3 pivot = cloud.centroid();
  CompactView best;
  bool have = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Viewpoint view = candidates[i];
    view.base = base;
    DepthImage image = render_depth(cloud, view_camera(view, pivot), splat_px);
    const double score = compactness(image);
    best.candidate_scores.push_back(score);
    const double tilt = std::abs(view.theta_h) + std::abs(view.theta_v);
    const double best_tilt = std::abs(best.view.theta_h) + std::abs(best.view.theta_v);
    if (!have || score > best.score || (score == best.score && tilt < best_tilt)) {
      best.view = view;
      best.image = std::move(image);
      best.score = score;
      best.index = i;
      have = true;
    }
  }
  return best;
}

std::vector<PartialRender> make_training_renders(const PointCloud& cloud, const CameraModel& base,
                                                 const RenderParams& params) {
  const Vec3 pivot = cloud.centroid();
  const Viewpoint view_a{0.0, 0.0, base};
  const CameraModel camera_a = view_camera(view_a, pivot);
  const auto visible_a = visible_set(cloud, camera_a, params.depth_tol).visible;

  std::vector<PartialRender> out;
  out.reserve(120);
  for (const auto& [h, v] : angle_sweep()) {
    if (h == 0.0 && v == 0.0) continue;
    const Viewpoint view_b{h, v, base};
    const auto visible_b = visible_set(cloud, view_camera(view_b, pivot), params.depth_tol).visible;
    const PointCloud remaining = cloud.subset(set_difference_sorted(visible_a, visible_b));
    PartialRender r{view_a, view_b, render_depth(remaining, camera_a, params.splat_px), remaining.size()};
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace liftkit
