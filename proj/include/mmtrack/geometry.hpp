#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "mmtrack/core.hpp"

namespace mmtrack {

inline constexpr double degToRad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double radToDeg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Mat4 {
    // Row-major; points are column vectors with w = 1.
    double m[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};

    static Mat4 identity() { return Mat4{}; }

    Mat4 operator*(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += m[i][k] * o.m[k][j];
                r.m[i][j] = s;
            }
        return r;
    }

    Vec3 apply(const Vec3& p) const {
        return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
                m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
                m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3]};
    }
};

// Rotation about an axis through `rp` parallel to x/y/z. With rp at the origin
// the fourth column collapses to pure rotation.
inline Mat4 rotationX(double rad, const Vec3& rp = {}) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat4 r;
    r.m[1][1] = c;  r.m[1][2] = -s;  r.m[1][3] = rp.y * (1.0 - c) + rp.z * s;
    r.m[2][1] = s;  r.m[2][2] = c;   r.m[2][3] = rp.z * (1.0 - c) - rp.y * s;
    return r;
}

inline Mat4 rotationY(double rad, const Vec3& rp = {}) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat4 r;
    r.m[0][0] = c;   r.m[0][2] = s;  r.m[0][3] = rp.x * (1.0 - c) - rp.z * s;
    r.m[2][0] = -s;  r.m[2][2] = c;  r.m[2][3] = rp.z * (1.0 - c) + rp.x * s;
    return r;
}

inline Mat4 rotationZ(double rad, const Vec3& rp = {}) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat4 r;
    r.m[0][0] = c;  r.m[0][1] = -s;  r.m[0][3] = rp.x * (1.0 - c) + rp.y * s;
    r.m[1][0] = s;  r.m[1][1] = c;   r.m[1][3] = rp.y * (1.0 - c) - rp.x * s;
    return r;
}

inline Mat4 translation(const Vec3& d) {
    Mat4 r;
    r.m[0][3] = d.x;
    r.m[1][3] = d.y;
    r.m[2][3] = d.z;
    return r;
}

// Radar local frame: +y boresight, +x right, +z up. Mounting rotations are
// applied to a local point in axis order x, then y, then z, then the
// translation; as a matrix product that is T * RMz * RMy * RMx. This order is
// what aims the wall and ceiling radars of the reference room into the room.
struct RigidTransform {
    Mat4 local_to_global;
    Mat4 global_to_local;

    Vec3 toGlobal(const Vec3& p) const { return local_to_global.apply(p); }
    Vec3 toLocal(const Vec3& p) const { return global_to_local.apply(p); }
};

inline Mat4 poseMatrix(const RadarPose& pose, const Vec3& rp = {}) {
    const Mat4 rx = rotationX(degToRad(pose.rotation_deg[0]), rp);
    const Mat4 ry = rotationY(degToRad(pose.rotation_deg[1]), rp);
    const Mat4 rz = rotationZ(degToRad(pose.rotation_deg[2]), rp);
    const Mat4 t = translation({pose.position[0], pose.position[1], pose.position[2]});
    return t * (rz * (ry * rx));
}

// Rigid inverse: transpose the rotation block, counter-rotate the translation.
inline Mat4 invertRigid(const Mat4& m) {
    Mat4 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.m[i][j] = m.m[j][i];
    for (int i = 0; i < 3; ++i) {
        r.m[i][3] = -(r.m[i][0] * m.m[0][3] + r.m[i][1] * m.m[1][3] +
                      r.m[i][2] * m.m[2][3]);
    }
    return r;
}

inline RigidTransform mountingTransform(const RadarPose& pose) {
    RigidTransform t;
    t.local_to_global = poseMatrix(pose);
    t.global_to_local = invertRigid(t.local_to_global);
    return t;
}

// Field-of-view test in the radar local frame. Azimuth is measured off the +y
// boresight in the horizontal plane, elevation off that plane.
struct FieldOfView {
    double azimuth_half_rad = degToRad(50.0);
    double elevation_half_rad = degToRad(30.0);
    double max_range = 8.0;  // m

    static FieldOfView fromSpec(const FieldOfViewSpec& s) {
        return {degToRad(s.azimuth_deg), degToRad(s.elevation_deg), s.max_range};
    }

    bool contains(const Vec3& local) const {
        const double range = local.norm();
        if (range <= 0.0 || range > max_range) return false;
        if (local.y <= 0.0) return false;  // behind the array plane
        const double azimuth = std::atan2(local.x, local.y);
        const double elevation = std::atan2(local.z, std::hypot(local.x, local.y));
        return std::abs(azimuth) <= azimuth_half_rad &&
               std::abs(elevation) <= elevation_half_rad;
    }
};

// Global point helpers used by the merge and simulation stages.
inline RadarPoint transformPoint(const Mat4& m, const RadarPoint& p) {
    const Vec3 g = m.apply({p.x, p.y, p.z});
    RadarPoint out = p;
    out.x = static_cast<float>(g.x);
    out.y = static_cast<float>(g.y);
    out.z = static_cast<float>(g.z);
    return out;
}

}  // namespace mmtrack
