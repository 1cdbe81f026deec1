#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

#include "liftkit/annotate.hpp"
#include "liftkit/evaluate.hpp"
#include "liftkit/priors.hpp"
#include "support/synthetic.hpp"
#include "test_util.hpp"

using namespace liftkit;

namespace {

PointCloud blob(const Vec3& c, int n, double spread, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1, 1);
  PointCloud out;
  for (int i = 0; i < n; ++i) out.points.push_back(c + spread * Vec3(unit(rng), unit(rng), unit(rng)));
  return out;
}

PointCloud concat(const std::vector<PointCloud>& parts) {
  PointCloud out;
  for (const auto& p : parts) out.points.insert(out.points.end(), p.points.begin(), p.points.end());
  return out;
}

// Brute-force reference labels: core components numbered by their smallest
// member index, border points take the smallest id among neighbouring cores.
std::vector<int> dbscan_oracle(const PointCloud& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((pts.points[i] - pts.points[j]).squaredNorm() <= eps * eps) nbr[i].push_back(j);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nbr[i].size()) >= min_pts;
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] >= 0) continue;
    std::deque<std::size_t> q{i};
    label[i] = next;
    while (!q.empty()) {
      const auto k = q.front();
      q.pop_front();
      for (auto j : nbr[k])
        if (core[j] && label[j] < 0) {
          label[j] = next;
          q.push_back(j);
        }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (auto j : nbr[i])
      if (core[j] && (best < 0 || label[j] < best)) best = label[j];
    label[i] = best;
  }
  return label;
}

double bev_area_at(const PointCloud& pts, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : pts.points) {
    const double x = c * p.x() + s * p.y(), y = -s * p.x() + c * p.y();
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  return (x1 - x0) * (y1 - y0);
}

}  // namespace

TEST(Frustum, FullAndEmptyBoxes) {
  const auto cam = intrinsics_from_fov(20, 10, 60);
  DepthImage d(20, 10);
  for (int v = 0; v < 10; ++v)
    for (int u = 0; u < 20; ++u)
      if (u < 10) d.set(u, v, 1.0 + u);
  const auto cloud = lift_depth(d, cam);
  Box2D all{0, 0, 20, 10, "x", 1};
  EXPECT_EQ(frustum_points(cloud, all).size(), cloud.size());
  Box2D none{12, 0, 20, 10, "x", 1};
  EXPECT_TRUE(frustum_points(cloud, none).empty());
  Box2D part{2, 3, 4, 5, "x", 1};
  EXPECT_EQ(frustum_points(cloud, part).size(), 4u);
}

TEST(Frustum, MissingProvenance) {
  PointCloud c;
  c.points = {Vec3(0, 0, 1)};
  EXPECT_ERROR_CODE(frustum_points(c, Box2D{0, 0, 1, 1, "x", 1}), ErrorCode::kInvalidArgument);
}

TEST(Frustum, MatchesProjectionOracleOnRoom) {
  const auto room = synth::make_room(17);
  const auto cloud = lift_depth(room.depth, room.camera);
  for (const auto& det : room.dets) {
    const auto got = frustum_points(cloud, det);
    std::vector<Vec3> expected;
    for (const auto& p : cloud.points) {
      const auto proj = project_point(p, room.camera);
      ASSERT_TRUE(proj);
      const double u = std::round(proj->u), v = std::round(proj->v);
      if (u >= det.umin && u < det.umax && v >= det.vmin && v < det.vmax) expected.push_back(p);
    }
    EXPECT_EQ(got.points, expected);
  }
}

TEST(Dbscan, TwoGroupsNoNoise) {
  std::mt19937_64 rng(1);
  const auto pts = concat({blob(Vec3(0, 0, 0), 20, 0.03, rng), blob(Vec3(1, 0, 0), 25, 0.03, rng)});
  const auto lab = dbscan(pts, 0.1, 5);
  EXPECT_EQ(lab.cluster_count, 2);
  EXPECT_EQ(std::count(lab.labels.begin(), lab.labels.end(), -1), 0);
  EXPECT_EQ(lab.labels, dbscan_oracle(pts, 0.1, 5));
}

TEST(Dbscan, IsolatedPointIsNoise) {
  PointCloud p;
  p.points = {Vec3(0, 0, 0)};
  const auto lab = dbscan(p, 0.1, 2);
  EXPECT_EQ(lab.labels, std::vector<int>{-1});
  EXPECT_EQ(lab.cluster_count, 0);
}

TEST(Dbscan, Empty) {
  const auto lab = dbscan(PointCloud{}, 0.1, 3);
  EXPECT_TRUE(lab.labels.empty());
  EXPECT_EQ(lab.cluster_count, 0);
}

TEST(Dbscan, SelfCountsAndRadiusInclusive) {
  PointCloud p;
  p.points = {Vec3(0, 0, 0), Vec3(0.5, 0, 0)};
  EXPECT_EQ(dbscan(p, 0.5, 2).cluster_count, 1);
  EXPECT_EQ(dbscan(p, 0.4999, 2).cluster_count, 0);
  EXPECT_EQ(dbscan(p, 0.1, 1).cluster_count, 2);
}

TEST(Dbscan, BadParameters) {
  EXPECT_ERROR_CODE(dbscan(PointCloud{}, 0.0, 3), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(dbscan(PointCloud{}, 0.1, 0), ErrorCode::kInvalidArgument);
}

TEST(Dbscan, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    PointCloud pts;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) pts.points.emplace_back(unit(rng), unit(rng), 0.2 * unit(rng));
    const double eps = 0.05 + 0.2 * unit(rng);
    const int min_pts = 1 + static_cast<int>(rng() % 6);
    const auto lab = dbscan(pts, eps, min_pts);
    const auto ref = dbscan_oracle(pts, eps, min_pts);
    ASSERT_EQ(lab.labels, ref) << "trial " << trial;
    EXPECT_EQ(lab.cluster_count, ref.empty() ? 0 : *std::max_element(ref.begin(), ref.end()) + 1);
  }
}

TEST(Dbscan, PermutationInvariantOnCoresAndNoise) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    PointCloud pts;
    for (int i = 0; i < 300; ++i) pts.points.emplace_back(unit(rng), unit(rng), 0.1 * unit(rng));
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = dbscan(pts, 0.08, 5);
    const auto b = dbscan(pts.subset(perm), 0.08, 5);
    ASSERT_EQ(a.cluster_count, b.cluster_count);
    std::vector<int> b_back(pts.size());
    for (std::size_t k = 0; k < perm.size(); ++k) b_back[perm[k]] = b.labels[k];
    // Noise sets agree and same-cluster relations agree among core points.
    std::vector<bool> core(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int cnt = 0;
      for (const auto& q : pts.points) cnt += (q - pts.points[i]).squaredNorm() <= 0.08 * 0.08;
      core[i] = cnt >= 5;
      EXPECT_EQ(a.labels[i] < 0, b_back[i] < 0);
    }
    std::map<int, int> rename;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!core[i]) continue;
      const auto [it, fresh] = rename.emplace(a.labels[i], b_back[i]);
      EXPECT_EQ(it->second, b_back[i]);
    }
  }
}

TEST(SelectCluster, LargestWins) {
  std::mt19937_64 rng(2);
  const auto pts = concat({blob(Vec3(5, 0, 0), 10, 0.02, rng), blob(Vec3(0, 0, 0), 100, 0.05, rng)});
  const auto lab = dbscan(pts, 0.1, 5);
  ASSERT_EQ(lab.cluster_count, 2);
  const auto idx = select_object_cluster(lab, pts);
  ASSERT_EQ(idx.size(), 100u);
  EXPECT_EQ(idx.front(), 10u);
}

TEST(SelectCluster, AllNoise) {
  ClusterLabeling lab;
  lab.labels = {-1, -1};
  PointCloud p;
  p.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  EXPECT_ERROR_CODE(select_object_cluster(lab, p), ErrorCode::kEmptyCluster);
}

TEST(SelectCluster, ChairBeatsWallSliver) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0, 1);
  PointCloud chair = blob(Vec3(0, 2, 0.45), 400, 0.15, rng);
  PointCloud wall;
  for (int i = 0; i < 120; ++i) wall.points.emplace_back(-0.3 + 0.6 * unit(rng), 3.5, 0.4 + 0.8 * unit(rng));
  const auto pts = concat({wall, chair});
  const auto idx = select_object_cluster(dbscan(pts, 0.1, 10), pts);
  ASSERT_EQ(idx.size(), 400u);
  for (auto i : idx) EXPECT_GE(i, 120u);
}

TEST(SelectCluster, EqualSizeTieIsDeterministic) {
  PointCloud p;
  for (int i = 0; i < 5; ++i) p.points.emplace_back(0.01 * i, 0, 0);
  for (int i = 0; i < 5; ++i) p.points.emplace_back(3 + 0.01 * i, 0, 0);
  p.points.emplace_back(10, 0, 0);  // noise that pulls the global centroid toward the second group
  const auto lab = dbscan(p, 0.05, 3);
  ASSERT_EQ(lab.cluster_count, 2);
  const auto idx = select_object_cluster(lab, p);
  EXPECT_EQ(idx, (std::vector<std::size_t>{5, 6, 7, 8, 9}));
}

TEST(FitBox, UnitCubeCorners) {
  PointCloud p;
  for (int i = 0; i < 8; ++i) p.points.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const auto b = fit_box(p);
  EXPECT_LT((b.center - Vec3(0.5, 0.5, 0.5)).norm(), 1e-12);
  EXPECT_LT((b.dims - Vec3(1, 1, 1)).norm(), 1e-12);
  EXPECT_NEAR(b.yaw, 0.0, 1e-12);
}

TEST(FitBox, RotatedCubeYawMatchesExhaustiveSearch) {
  PointCloud p;
  const double a = deg2rad(30);
  for (int i = 0; i < 8; ++i) {
    const double x = (i & 1) - 0.5, y = ((i >> 1) & 1) - 0.5;
    p.points.emplace_back(std::cos(a) * x - std::sin(a) * y + 2, std::sin(a) * x + std::cos(a) * y - 1, (i >> 2) & 1);
  }
  const auto b = fit_box(p);
  EXPECT_LT((b.dims - Vec3(1, 1, 1)).norm(), 1e-9);
  const double yaw_mod = std::fmod(rad2deg(b.yaw) + 360.0, 90.0);
  EXPECT_NEAR(yaw_mod, 30.0, 1e-6);
  double best = 1e300, best_deg = 0;
  for (int k = 0; k < 9000; ++k) {
    const double area = bev_area_at(p, deg2rad(k * 0.01));
    if (area < best) {
      best = area;
      best_deg = k * 0.01;
    }
  }
  EXPECT_NEAR(best_deg, yaw_mod, 0.01);
}

TEST(FitBox, RandomCloudsAgainstOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    PointCloud p;
    const double yaw = unit(rng) * kPi, l = 0.3 + 2 * unit(rng), w = 0.2 + unit(rng);
    for (int i = 0; i < 60; ++i) {
      const double x = l * (unit(rng) - 0.5), y = w * (unit(rng) - 0.5);
      p.points.emplace_back(std::cos(yaw) * x - std::sin(yaw) * y, std::sin(yaw) * x + std::cos(yaw) * y, unit(rng));
    }
    const auto b = fit_box(p);
    EXPECT_GE(b.dims.x(), b.dims.y());
    EXPECT_GE(b.yaw, -kPi / 2);
    EXPECT_LT(b.yaw, kPi / 2);
    double oracle = 1e300;
    for (int k = 0; k < 9000; ++k) oracle = std::min(oracle, bev_area_at(p, deg2rad(k * 0.01)));
    const double area = b.dims.x() * b.dims.y();
    EXPECT_LE(area, oracle + 1e-9);
    EXPECT_GT(area, oracle * (1 - 1e-4));
    for (const auto& q : p.points) EXPECT_TRUE(b.contains(q, 1e-9));
    Vec3 lo = p.points[0], hi = p.points[0];
    for (const auto& q : p.points) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    EXPECT_LE(b.volume(), (hi - lo).prod() + 1e-12);
  }
}

TEST(FitBox, Degenerate) {
  PointCloud two;
  two.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_ERROR_CODE(fit_box(two), ErrorCode::kDegenerateGeometry);
  PointCloud line;
  for (int i = 0; i < 5; ++i) line.points.emplace_back(i, 2 * i, i);
  EXPECT_ERROR_CODE(fit_box(line), ErrorCode::kDegenerateGeometry);
}

TEST(SizeFilter, Examples) {
  SizePriorDB db;
  db.add("chair", Vec3(0.6, 0.6, 0.9));
  Box3D b;
  b.category = "chair";
  b.dims = Vec3(0.6, 0.6, 0.9);
  auto r = size_filter(b, db, 0.1);
  EXPECT_TRUE(r.keep);
  EXPECT_LT((r.ratios - Vec3(1, 1, 1)).norm(), 1e-12);
  b.dims = Vec3(0.6, 0.6, 0.045);  // one ratio 0.05
  EXPECT_FALSE(size_filter(b, db, 0.1).keep);
  db.add("crate", Vec3(1.0, 1.0, 1.0));
  b.category = "crate";
  b.dims = Vec3(1.0, 1.0, 0.1);
  EXPECT_FALSE(size_filter(b, db, 0.1).keep);
  b.dims = Vec3(1.0, 1.0, 0.1000001);
  EXPECT_TRUE(size_filter(b, db, 0.1).keep);
}

TEST(SizeFilter, SortedMatchingAcceptsSwappedAxes) {
  SizePriorDB db;
  db.add("table", Vec3(1.2, 0.8, 0.75));
  Box3D b;
  b.category = "Table ";
  b.dims = Vec3(0.8, 0.75, 1.2);
  EXPECT_TRUE(size_filter(b, db, 0.9).keep);
}

TEST(SizeFilter, UnknownCategoryPolicy) {
  SizePriorDB db;
  Box3D b;
  b.category = "unicorn";
  const auto kept = size_filter(b, db, 0.1);
  EXPECT_TRUE(kept.keep);
  EXPECT_FALSE(kept.known_category);
  const auto rejected = size_filter(b, db, 0.1, UnknownCategoryPolicy::kReject);
  EXPECT_FALSE(rejected.keep);
  EXPECT_FALSE(rejected.known_category);
}

TEST(SizeFilter, ThresholdRange) {
  SizePriorDB db;
  db.add("a", Vec3(1, 1, 1));
  Box3D b;
  b.category = "a";
  EXPECT_ERROR_CODE(size_filter(b, db, 1.0), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(size_filter(b, db, 0.0), ErrorCode::kInvalidArgument);
}

TEST(FloorHeight, FindsLowestPopulatedLevel) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0, 1);
  PointCloud p;
  for (int i = 0; i < 2000; ++i) p.points.emplace_back(unit(rng), unit(rng), -1.2);
  for (int i = 0; i < 5; ++i) p.points.emplace_back(unit(rng), unit(rng), -1.8);  // stray outliers
  for (int i = 0; i < 3000; ++i) p.points.emplace_back(unit(rng), unit(rng), -1.2 + unit(rng));
  EXPECT_NEAR(estimate_floor_height(p), -1.2, 0.02);
}

class RoomAnnotations : public ::testing::Test {
 protected:
  void SetUp() override {
    synth::RoomOptions opt;
    opt.min_boxes = opt.max_boxes = 3;
    room = synth::make_room(2024, opt);
    cloud = lift_depth(room.depth, room.camera);
  }
  synth::Room room;
  PointCloud cloud;
};

TEST_F(RoomAnnotations, ThreeBoxesRecovered) {
  const auto res = generate_annotations(cloud, room.dets, synth::priors());
  ASSERT_EQ(res.boxes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(res.source_index[i], i);
    EXPECT_EQ(res.boxes[i].category, room.dets[i].category);
    EXPECT_DOUBLE_EQ(res.boxes[i].score, room.dets[i].score);
    EXPECT_GE(iou3d(res.boxes[i], room.world[i]), 0.5) << i;
  }
  EXPECT_TRUE(res.log.empty());
}

TEST_F(RoomAnnotations, EmptyRegionLogsEmptyCluster) {
  // A box over the image corner far above the floor objects sees only floor.
  Box2D corner{0, static_cast<double>(room.depth.height() - 4), 4, static_cast<double>(room.depth.height()), "chair", 0.9};
  const auto res = generate_annotations(cloud, {corner}, synth::priors());
  EXPECT_TRUE(res.boxes.empty());
  ASSERT_EQ(res.log.size(), 1u);
  EXPECT_EQ(res.log[0].reason, "empty-cluster");
  EXPECT_TRUE(res.log[0].dropped);
}

TEST_F(RoomAnnotations, AbsurdPriorIsSizeFiltered) {
  SizePriorDB huge;
  const SizePriorDB base = synth::priors();
  for (const auto& [name, dims] : base.entries()) huge.add(name, dims * 100.0);
  const auto res = generate_annotations(cloud, room.dets, huge);
  EXPECT_TRUE(res.boxes.empty());
  ASSERT_EQ(res.log.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(res.log[i].reason, "size-filtered");
    EXPECT_EQ(res.log[i].box_index, i);
  }
}

TEST_F(RoomAnnotations, UnknownCategoryPolicies) {
  auto dets = room.dets;
  dets[1].category = "gizmo";
  const auto kept = generate_annotations(cloud, dets, synth::priors());
  EXPECT_EQ(kept.boxes.size(), 3u);
  ASSERT_EQ(kept.log.size(), 1u);
  EXPECT_EQ(kept.log[0].reason, "unknown-category-kept");
  EXPECT_FALSE(kept.log[0].dropped);
  AnnotationParams strict;
  strict.unknown_policy = UnknownCategoryPolicy::kReject;
  const auto rejected = generate_annotations(cloud, dets, synth::priors(), strict);
  EXPECT_EQ(rejected.boxes.size(), 2u);
  ASSERT_EQ(rejected.log.size(), 1u);
  EXPECT_EQ(rejected.log[0].reason, "unknown-category");
  EXPECT_EQ(rejected.log[0].box_index, 1u);
}

TEST_F(RoomAnnotations, EveryDropHasExactlyOneReason) {
  auto dets = room.dets;
  dets.push_back(Box2D{0, 0, 3, 3, "chair", 0.5});
  dets.push_back(Box2D{5, 5, 2, 9, "chair", 0.5});  // invalid box
  const auto res = generate_annotations(cloud, dets, synth::priors());
  std::vector<int> reasons(dets.size(), 0);
  for (const auto& e : res.log)
    if (e.dropped) ++reasons[e.box_index];
  std::vector<bool> kept(dets.size(), false);
  for (auto i : res.source_index) kept[i] = true;
  for (std::size_t i = 0; i < dets.size(); ++i) EXPECT_EQ(reasons[i], kept[i] ? 0 : 1) << i;
  EXPECT_EQ(res.log.back().reason, "invalid-box");
}
