#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "flipplan/error.hpp"

namespace flipplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kPi = std::numbers::pi;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Rigid transform in SE(3). `rotation` is kept orthonormal with det +1.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }

    static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    static Pose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    /// Frame chaining: (*this) then `b`.
    Pose operator*(const Pose& b) const {
        return {rotation * b.rotation, rotation * b.translation + translation};
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }

inline Pose inverse(const Pose& a) {
    Mat3 rt = a.rotation.transpose();
    return {rt, -(rt * a.translation)};
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

/// Rotation of `angle` radians about the unit vector `axis` (Rodrigues).
inline Mat3 rot_axis(const Vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double v = 1.0 - c;
    const double x = axis.x(), y = axis.y(), z = axis.z();
    Mat3 r;
    r << c + x * x * v, x * y * v - z * s, x * z * v + y * s,
         y * x * v + z * s, c + y * y * v, y * z * v - x * s,
         z * x * v - y * s, z * y * v + x * s, c + z * z * v;
    return r;
}

/// Projects a near-rotation back onto SO(3).
inline Mat3 orthonormalize(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    return q.toRotationMatrix();
}

/// Rotation vector (axis * angle) of `r`, angle in [0, pi].
inline Vec3 rotation_log(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    const double sin_half = q.vec().norm();
    if (sin_half < 1e-15) return 2.0 * q.vec();
    const double angle = 2.0 * std::atan2(sin_half, q.w());
    return q.vec() * (angle / sin_half);
}

inline Mat3 rotation_exp(const Vec3& w) {
    const double angle = w.norm();
    if (angle < 1e-15) return Mat3::Identity();
    return rot_axis(w / angle, angle);
}

/// Extrinsic XYZ fixed angles: roll about world X, then pitch about world Y,
/// then yaw about world Z. Radians.
inline Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
    return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

inline Vec3 rpy_from_rotation(const Mat3& r) {
    const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    return {roll, pitch, yaw};
}

inline Pose pose_from_xyz_rpy_deg(const Vec3& xyz, const Vec3& rpy_deg) {
    return {rotation_from_rpy(deg2rad(rpy_deg.x()), deg2rad(rpy_deg.y()), deg2rad(rpy_deg.z())), xyz};
}

/// Geodesic interpolation: linear in translation, shortest arc in rotation.
inline Pose interpolate(const Pose& a, const Pose& b, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("interpolate: s must lie in [0,1]");
    if (s == 0.0) return a;
    if (s == 1.0) return b;
    const Vec3 w = rotation_log(a.rotation.transpose() * b.rotation);
    return {orthonormalize(a.rotation * rotation_exp(s * w)),
            (1.0 - s) * a.translation + s * b.translation};
}

struct PoseDistance {
    double translational = 0.0;  // meters
    double rotational = 0.0;     // radians, [0, pi]

    bool within(double pos_tol, double rot_tol) const {
        return translational <= pos_tol && rotational <= rot_tol;
    }
};

inline double rotation_angle(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

inline PoseDistance pose_distance(const Pose& a, const Pose& b) {
    return {(a.translation - b.translation).norm(),
            rotation_angle(a.rotation.transpose() * b.rotation)};
}

/// 6-D error twist taking `current` to `target`, expressed in the frame both
/// poses are given in: [position error; rotation vector].
inline Vec6 pose_error_twist(const Pose& target, const Pose& current) {
    Vec6 e;
    e.head<3>() = target.translation - current.translation;
    e.tail<3>() = rotation_log(target.rotation * current.rotation.transpose());
    return e;
}

inline bool is_valid_rotation(const Mat3& r, double tol = 1e-9) {
    const Mat3 d = r.transpose() * r - Mat3::Identity();
    return d.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace flipplan
