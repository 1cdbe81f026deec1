#pragma once

#include <utility>
#include <vector>

#include "liftkit/geometry.hpp"

namespace liftkit {

/// Camera orbited about the cloud centroid: `theta_h` about world +Z, then
/// `theta_v` about the (already turned) camera-right axis. Degrees.
struct Viewpoint {
  double theta_h = 0.0;
  double theta_v = 0.0;
  CameraModel base;

  void validate() const;
};

/// Camera posed for `view`, orbiting around `pivot`.
CameraModel view_camera(const Viewpoint& view, const Vec3& pivot);

struct VisibilityResult {
  std::vector<std::size_t> visible;
  std::vector<std::size_t> occluded;
  std::vector<std::size_t> out_of_frame;
};

/// Nearest pixel centre of a projection; false when outside the image.
bool pixel_of(const Projection& proj, const CameraModel& camera, int& u, int& v);

/// Z-buffer render; each point covers a splat_px x splat_px square centred on
/// its nearest pixel and every pixel keeps the minimum depth.
DepthImage render_depth(const PointCloud& cloud, const CameraModel& camera, int splat_px = 1);

/// Points visible from `view` at single-pixel resolution. The orbit pivot is
/// the centroid of `cloud`.
VisibilityResult visible_set(const PointCloud& cloud, const Viewpoint& view, double depth_tol = 0.05);
VisibilityResult visible_set(const PointCloud& cloud, const CameraModel& camera, double depth_tol);

/// P_A - (P_A n P_B) by point index, provenance preserved.
PointCloud partial_view_removal(const PointCloud& cloud, const Viewpoint& view_a, const Viewpoint& view_b,
                                double depth_tol = 0.05);

/// The 11 x 11 grid {-75, -60, ..., 75}^2 in degrees, ordered by h then v.
std::vector<std::pair<double, double>> angle_sweep();

/// Valid pixels over the area of their bounding rectangle; 0 for empty images.
double compactness(const DepthImage& image);

struct CompactView {
  Viewpoint view;
  DepthImage image;
  double score = 0.0;
  std::size_t index = 0;
  std::vector<double> candidate_scores;
};

CompactView best_compact_view(const PointCloud& cloud, const CameraModel& base, const std::vector<Viewpoint>& candidates,
                              int splat_px = 3);

struct RenderParams {
  double depth_tol = 0.05;
  int splat_px = 3;
};

struct PartialRender {
  Viewpoint view_a;
  Viewpoint view_b;
  DepthImage image;
  std::size_t remaining_points = 0;
};

/// One partial-view render per swept viewpoint other than the base pose.
std::vector<PartialRender> make_training_renders(const PointCloud& cloud, const CameraModel& base,
                                                 const RenderParams& params = {});

}  // namespace liftkit
