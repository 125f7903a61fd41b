#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmtrack/geometry.hpp"

namespace {

using namespace mmtrack;

double deg2rad(double d) { return d * M_PI / 180.0; }

// Reference pose application built from plain scalar trig, one axis at a
// time, so it shares no code path with the 4x4 matrix pipeline it checks.
Vec3 refApplyPose(const Vec3& p, const double pos[3], const double rot_deg[3]) {
  double cx = std::cos(deg2rad(rot_deg[0])), sx = std::sin(deg2rad(rot_deg[0]));
  double cy = std::cos(deg2rad(rot_deg[1])), sy = std::sin(deg2rad(rot_deg[1]));
  double cz = std::cos(deg2rad(rot_deg[2])), sz = std::sin(deg2rad(rot_deg[2]));

  Vec3 a{p.x, p.y * cx - p.z * sx, p.y * sx + p.z * cx};
  Vec3 b{a.x * cy + a.z * sy, a.y, -a.x * sy + a.z * cy};
  Vec3 c{b.x * cz - b.y * sz, b.x * sz + b.y * cz, b.z};
  return Vec3{c.x + pos[0], c.y + pos[1], c.z + pos[2]};
}

double dist(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

TEST(Geometry, RotationOrderFixture) {
  // Rotations apply x first, then y, then z. (1,2,3) under (90,0,90):
  // x-rot takes it to (1,-3,2), z-rot takes that to (3,1,2).
  RadarPose pose{1, {0, 0, 0}, {90, 0, 90}};
  Vec3 out = poseMatrix(pose).apply(Vec3{1, 2, 3});
  EXPECT_NEAR(out.x, 3.0, 1e-12);
  EXPECT_NEAR(out.y, 1.0, 1e-12);
  EXPECT_NEAR(out.z, 2.0, 1e-12);
}

TEST(Geometry, PivotRotation) {
  Mat4 m = rotationZ(M_PI / 2.0, Vec3{1, 0, 0});
  Vec3 fixed = m.apply(Vec3{1, 0, 0});
  EXPECT_NEAR(dist(fixed, Vec3{1, 0, 0}), 0.0, 1e-12);
  Vec3 swung = m.apply(Vec3{2, 0, 0});
  EXPECT_NEAR(dist(swung, Vec3{1, 1, 0}), 0.0, 1e-12);
}

TEST(Geometry, CeilingRadarBoresights) {
  // Sensor frames point +y along the boresight. A tilted corner unit at
  // (1.6, 2.1, 2.6) with rotation (-55, 0, 90) must look down-and-across.
  RadarPose corner{2, {1.6, 2.1, 2.6}, {-55, 0, 90}};
  RigidTransform t = mountingTransform(corner);
  Vec3 dir = t.toGlobal(Vec3{0, 1, 0}) - Vec3{1.6, 2.1, 2.6};
  EXPECT_NEAR(dir.x, -std::cos(deg2rad(55)), 1e-4);
  EXPECT_NEAR(dir.y, 0.0, 1e-9);
  EXPECT_NEAR(dir.z, -std::sin(deg2rad(55)), 1e-4);
  EXPECT_NEAR(dir.x, -0.5736, 5e-5);
  EXPECT_NEAR(dir.z, -0.8192, 5e-5);

  // A straight-down unit at (0, 2.1, 2.6) with rotation (-90, 0, 0).
  RadarPose down{3, {0, 2.1, 2.6}, {-90, 0, 0}};
  RigidTransform td = mountingTransform(down);
  Vec3 tipd = td.toGlobal(Vec3{0, 1, 0});
  EXPECT_NEAR(tipd.x, 0.0, 1e-12);
  EXPECT_NEAR(tipd.y, 2.1, 1e-12);
  EXPECT_NEAR(tipd.z, 1.6, 1e-12);
}

TEST(Geometry, GlobalToLocalFixture) {
  RadarPose down{3, {0, 2.1, 2.6}, {-90, 0, 0}};
  RigidTransform t = mountingTransform(down);
  Vec3 local = t.toLocal(Vec3{0.3, 2.1, 1.6});
  EXPECT_NEAR(local.x, 0.3, 1e-12);
  EXPECT_NEAR(local.y, 1.0, 1e-12);
  EXPECT_NEAR(local.z, 0.0, 1e-12);
}

TEST(Geometry, RandomPosesMatchScalarReference) {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> upos(-5.0, 5.0);
  std::uniform_real_distribution<double> urot(-180.0, 180.0);
  std::uniform_real_distribution<double> upt(-10.0, 10.0);

  for (int i = 0; i < 1000; ++i) {
    RadarPose pose{1,
                   {upos(rng), upos(rng), upos(rng)},
                   {urot(rng), urot(rng), urot(rng)}};
    RigidTransform t = mountingTransform(pose);
    for (int k = 0; k < 4; ++k) {
      Vec3 p{upt(rng), upt(rng), upt(rng)};
      Vec3 got = t.toGlobal(p);
      Vec3 want = refApplyPose(p, pose.position, pose.rotation_deg);
      ASSERT_LT(dist(got, want), 1e-9);

      // Inverse must take it straight back.
      Vec3 back = t.toLocal(got);
      ASSERT_LT(dist(back, p), 1e-9);
    }
  }
}

TEST(Geometry, InvertRigidRoundTrip) {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> urot(-180.0, 180.0);
  for (int i = 0; i < 100; ++i) {
    RadarPose pose{1, {u(rng), u(rng), u(rng)}, {urot(rng), urot(rng), urot(rng)}};
    Mat4 m = poseMatrix(pose);
    Mat4 inv = invertRigid(m);
    Mat4 prod = m * inv;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        ASSERT_NEAR(prod.m[r][c], r == c ? 1.0 : 0.0, 1e-9);
    for (int k = 0; k < 3; ++k) {
      Vec3 p{u(rng), u(rng), u(rng)};
      Vec3 round = inv.apply(m.apply(p));
      ASSERT_LT(dist(round, p), 1e-9);
    }
  }
}

TEST(Geometry, TransformPointKeepsScalarFields) {
  RadarPose pose{2, {1.6, 2.1, 2.6}, {-55, 0, 90}};
  Mat4 m = poseMatrix(pose);
  RadarPoint p{0.5f, 2.0f, -0.25f, 123.0f, -1.5f};
  RadarPoint out = transformPoint(m, p);
  EXPECT_FLOAT_EQ(out.energy, 123.0f);
  EXPECT_FLOAT_EQ(out.speed, -1.5f);
  Vec3 want = m.apply(Vec3{0.5, 2.0, -0.25});
  EXPECT_NEAR(out.x, want.x, 1e-6);
  EXPECT_NEAR(out.y, want.y, 1e-6);
  EXPECT_NEAR(out.z, want.z, 1e-6);
}

TEST(Geometry, FieldOfViewMembership) {
  FieldOfView fov = FieldOfView::fromSpec(FieldOfViewSpec{50.0, 30.0, 8.0});

  EXPECT_TRUE(fov.contains(Vec3{0, 1, 0}));
  EXPECT_TRUE(fov.contains(Vec3{0, 8, 0}));       // max range is inclusive
  EXPECT_FALSE(fov.contains(Vec3{0, 8.01, 0}));
  EXPECT_FALSE(fov.contains(Vec3{0, 0, 0}));      // zero range
  EXPECT_FALSE(fov.contains(Vec3{0, -1, 0}));     // behind the array

  // Azimuth cone: atan2(x, y) against the 50 degree half angle.
  EXPECT_TRUE(fov.contains(Vec3{std::tan(deg2rad(49.9)), 1, 0}));
  EXPECT_FALSE(fov.contains(Vec3{std::tan(deg2rad(50.1)), 1, 0}));
  EXPECT_TRUE(fov.contains(Vec3{-std::tan(deg2rad(49.9)), 1, 0}));
  EXPECT_FALSE(fov.contains(Vec3{-std::tan(deg2rad(50.1)), 1, 0}));

  // Elevation cone: atan2(z, hypot(x, y)) against 30 degrees.
  EXPECT_TRUE(fov.contains(Vec3{0, 1, std::tan(deg2rad(29.9))}));
  EXPECT_FALSE(fov.contains(Vec3{0, 1, std::tan(deg2rad(30.1))}));
  EXPECT_TRUE(fov.contains(Vec3{0, 1, -std::tan(deg2rad(29.9))}));
  EXPECT_FALSE(fov.contains(Vec3{0, 1, -std::tan(deg2rad(30.1))}));
}

}  // namespace
