#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flipplan/geom.hpp"
#include "flipplan/random.hpp"

namespace flipplan {

inline constexpr int kArmDof = 6;

/// Platform configuration (x [m], y [m], theta [rad]).
using PlatformConfig = Vec3;
/// Arm joint angles [rad], tracked unwrapped.
using ArmConfig = Vec6;

struct Config {
    PlatformConfig platform = PlatformConfig::Zero();
    ArmConfig arm = ArmConfig::Zero();

    bool operator==(const Config& o) const { return platform == o.platform && arm == o.arm; }
};

/// Axis-aligned workspace box for the platform.
struct PlatformBounds {
    double x_min = -1e9, x_max = 1e9;
    double y_min = -1e9, y_max = 1e9;
    double theta_min = -1e9, theta_max = 1e9;

    bool contains(const PlatformConfig& q, double eps = 1e-12) const {
        return q.x() >= x_min - eps && q.x() <= x_max + eps && q.y() >= y_min - eps &&
               q.y() <= y_max + eps && q.z() >= theta_min - eps && q.z() <= theta_max + eps;
    }

    /// Shifts theta by multiples of 2*pi into range; nullopt when impossible.
    std::optional<double> wrap_theta(double theta) const {
        const double two_pi = 2.0 * kPi;
        double t = theta;
        if (t < theta_min) t += two_pi * std::ceil((theta_min - t) / two_pi);
        if (t > theta_max) t -= two_pi * std::ceil((t - theta_max) / two_pi);
        if (t < theta_min - 1e-12 || t > theta_max + 1e-12) return std::nullopt;
        return t;
    }

    static PlatformBounds clamped_at(const PlatformConfig& q) {
        return {q.x(), q.x(), q.y(), q.y(), q.z(), q.z()};
    }
};

struct PlatformModel {
    Pose mount;  // platform frame -> arm base frame, constant
    PlatformBounds bounds;
};

struct Joint {
    Pose parent_offset;
    Vec3 axis = Vec3::UnitZ();
};

struct JointLimit {
    double lo = -kPi;
    double hi = kPi;
};

/// Kinematic frames of one arm configuration, all in the arm base frame.
struct ArmFrames {
    std::array<Pose, kArmDof> links;  // frame after joint j rotates
    std::array<Vec3, kArmDof> axes;   // joint axes
    std::array<Vec3, kArmDof> origins;
    Pose ee;
};

/// Six-revolute-joint serial arm described by data.
class ArmModel {
public:
    ArmModel() = default;

    ArmModel(std::array<Joint, kArmDof> joints, std::array<JointLimit, kArmDof> limits, Pose tool)
        : joints_(joints), limits_(limits), tool_(tool) {
        for (int j = 0; j < kArmDof; ++j) {
            const double n = joints_[j].axis.norm();
            if (std::abs(n - 1.0) > 1e-9)
                throw InputError("arm joint " + std::to_string(j) + ": axis must be unit length");
            if (!(limits_[j].lo < limits_[j].hi))
                throw InputError("arm joint " + std::to_string(j) + ": limits require lo < hi");
            if (!is_valid_rotation(joints_[j].parent_offset.rotation))
                throw InputError("arm joint " + std::to_string(j) + ": offset rotation invalid");
        }
        if (!is_valid_rotation(tool_.rotation)) throw InputError("arm tool rotation invalid");
    }

    const std::array<Joint, kArmDof>& joints() const { return joints_; }
    const std::array<JointLimit, kArmDof>& limits() const { return limits_; }
    const Pose& tool() const { return tool_; }

    bool within_limits(const ArmConfig& q, double eps = 1e-12) const {
        for (int j = 0; j < kArmDof; ++j)
            if (q[j] < limits_[j].lo - eps || q[j] > limits_[j].hi + eps) return false;
        return true;
    }

    ArmConfig clamp(const ArmConfig& q) const {
        ArmConfig r = q;
        for (int j = 0; j < kArmDof; ++j) r[j] = std::clamp(q[j], limits_[j].lo, limits_[j].hi);
        return r;
    }

    ArmConfig random_config(Rng& rng) const {
        ArmConfig q;
        for (int j = 0; j < kArmDof; ++j) q[j] = rng.uniform(limits_[j].lo, limits_[j].hi);
        return q;
    }

    ArmFrames frames(const ArmConfig& q) const {
        ArmFrames f;
        Pose t;
        for (int j = 0; j < kArmDof; ++j) {
            t = t * joints_[j].parent_offset;
            f.axes[j] = t.rotation * joints_[j].axis;
            f.origins[j] = t.translation;
            t.rotation = t.rotation * rot_axis(joints_[j].axis, q[j]);
            f.links[j] = t;
        }
        f.ee = t * tool_;
        return f;
    }

    /// Upper bound on the distance from the first joint origin to the end-effector.
    double reach() const {
        double r = tool_.translation.norm();
        for (int j = 1; j < kArmDof; ++j) r += joints_[j].parent_offset.translation.norm();
        return r;
    }

private:
    std::array<Joint, kArmDof> joints_{};
    std::array<JointLimit, kArmDof> limits_{};
    Pose tool_;
};

struct RobotModel {
    PlatformModel platform;
    ArmModel arm;
};

inline Pose fk_platform(const PlatformConfig& q) {
    return {rot_z(q.z()), Vec3(q.x(), q.y(), 0.0)};
}

inline Pose fk_platform(const PlatformModel&, const PlatformConfig& q) { return fk_platform(q); }

inline Pose fk_arm(const ArmModel& arm, const ArmConfig& q) { return arm.frames(q).ee; }

/// World pose of the end-effector: platform, mount, arm.
inline Pose fk(const RobotModel& robot, const Config& q) {
    return fk_platform(q.platform) * robot.platform.mount * fk_arm(robot.arm, q.arm);
}

/// World pose of the arm base.
inline Pose arm_base_pose(const RobotModel& robot, const PlatformConfig& qp) {
    return fk_platform(qp) * robot.platform.mount;
}

/// Geometric Jacobian in the arm base frame; rows 0-2 linear, 3-5 angular.
inline Mat6 jacobian_arm(const ArmFrames& f) {
    Mat6 jac;
    for (int j = 0; j < kArmDof; ++j) {
        jac.block<3, 1>(0, j) = f.axes[j].cross(f.ee.translation - f.origins[j]);
        jac.block<3, 1>(3, j) = f.axes[j];
    }
    return jac;
}

inline Mat6 jacobian_arm(const ArmModel& arm, const ArmConfig& q) { return jacobian_arm(arm.frames(q)); }

/// Yoshikawa manipulability; for the square Jacobian this is |det J|.
inline double manipulability(const ArmModel& arm, const ArmConfig& q) {
    return std::abs(jacobian_arm(arm, q).determinant());
}

/// The same measure through the Gram form sqrt(det(J J^T)), evaluated as
/// |prod diag R| with J^T = Q R to avoid squaring the condition number.
inline double manipulability_gram(const ArmModel& arm, const ArmConfig& q) {
    const Eigen::HouseholderQR<Mat6> qr(jacobian_arm(arm, q).transpose());
    return std::abs(qr.matrixQR().diagonal().prod());
}

struct IkOptions {
    int max_iters = 200;
    double pos_tol = 1e-8;   // meters
    double rot_tol = 1e-8;   // radians
    double damping = 1e-3;
    double max_step = 0.4;   // largest per-iteration joint change [rad]
    int restarts = 8;        // seeds tried by ik_arm_multi
    std::uint64_t seed = 0;  // random stream for ik_arm_multi restarts
};

/// Damped least-squares IK from `seed`. Joint limits are enforced by
/// projection at every step. Returns nullopt when it does not converge.
inline std::optional<ArmConfig> ik_arm(const ArmModel& arm, const Pose& target, const ArmConfig& seed,
                                       const IkOptions& opts = {}) {
    if (!arm.within_limits(seed, 1e-9)) throw InputError("ik_arm: seed outside joint limits");
    ArmConfig q = arm.clamp(seed);
    const double lambda2 = opts.damping * opts.damping;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int it = 0; it <= opts.max_iters; ++it) {
        const ArmFrames f = arm.frames(q);
        const Vec6 e = pose_error_twist(target, f.ee);
        const double ep = e.head<3>().norm();
        const double er = e.tail<3>().norm();
        if (ep <= opts.pos_tol && er <= opts.rot_tol) return q;
        if (it == opts.max_iters) break;
        const double err = ep + er;
        if (err < 0.99 * best) {
            best = err;
            since_best = 0;
        } else if (++since_best > 25) {
            break;
        }
        const Mat6 jac = jacobian_arm(f);
        const Mat6 jjt = jac * jac.transpose() + lambda2 * Mat6::Identity();
        Vec6 dq = jac.transpose() * jjt.ldlt().solve(e);
        const double m = dq.cwiseAbs().maxCoeff();
        if (m > opts.max_step) dq *= opts.max_step / m;
        const ArmConfig next = arm.clamp(q + dq);
        if ((next - q).cwiseAbs().maxCoeff() < 1e-14) break;
        q = next;
    }
    return std::nullopt;
}

/// Multi-seed IK: tries `seeds` in order, then uniform random configurations
/// until `opts.restarts` attempts were made in total.
inline std::optional<ArmConfig> ik_arm_multi(const ArmModel& arm, const Pose& target,
                                             std::span<const ArmConfig> seeds, const IkOptions& opts) {
    int attempts = 0;
    for (const auto& s : seeds) {
        if (attempts >= std::max<int>(opts.restarts, static_cast<int>(seeds.size()))) break;
        ++attempts;
        if (auto r = ik_arm(arm, target, arm.clamp(s), opts)) return r;
    }
    Rng rng(opts.seed);
    for (; attempts < opts.restarts; ++attempts) {
        if (auto r = ik_arm(arm, target, arm.random_config(rng), opts)) return r;
    }
    return std::nullopt;
}

}  // namespace flipplan
