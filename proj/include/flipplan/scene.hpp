#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flipplan/model.hpp"

namespace flipplan {

struct Capsule {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.0;

    Capsule transformed(const Pose& p) const { return {p.apply(a), p.apply(b), radius}; }
};

/// Link indices: -1 platform footprint, 0 arm base, 1..6 the link moved by joint j.
inline constexpr int kPlatformLink = -1;
inline constexpr int kBaseLink = 0;
inline constexpr int kGripperLink = kArmDof;

struct LinkCapsule {
    int link = 0;
    Capsule shape;
};

/// Squared distance between segments [p1,q1] and [p2,q2], with the closest
/// parameters (Ericson, Real-Time Collision Detection, 5.1.9).
inline double segment_distance_sq(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2,
                                  double* s_out = nullptr, double* t_out = nullptr) {
    constexpr double eps = 1e-14;
    const Vec3 d1 = q1 - p1;
    const Vec3 d2 = q2 - p2;
    const Vec3 r = p1 - p2;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double f = d2.dot(r);
    double s = 0.0, t = 0.0;
    if (a <= eps && e <= eps) {
        s = t = 0.0;
    } else if (a <= eps) {
        s = 0.0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    if (s_out) *s_out = s;
    if (t_out) *t_out = t;
    return ((p1 + d1 * s) - (p2 + d2 * t)).squaredNorm();
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 d = b - a;
    const double l2 = d.squaredNorm();
    const double s = l2 > 0.0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
    return (a + s * d - p).norm();
}

/// Surface distance between two posed capsules; negative means penetration.
inline double capsule_distance(const Capsule& x, const Capsule& y) {
    return std::sqrt(segment_distance_sq(x.a, x.b, y.a, y.b)) - x.radius - y.radius;
}

struct ObjectModel {
    Vec3 half_extents = Vec3::Zero();
    std::vector<Capsule> capsules;  // object frame
};

struct RobotEntry {
    std::string name;
    RobotModel model;
    Config initial;
    std::vector<LinkCapsule> capsules;
};

struct Scene {
    std::vector<RobotEntry> robots;
    ObjectModel object;
    std::vector<Capsule> obstacles;   // world frame
    std::optional<double> floor_z;    // ground plane, checked against arm links
    std::size_t leader = 0;
    double margin = 0.005;            // clearance added to every pair
    double grasp_approach_radius = 0.05;

    void validate() const {
        if (robots.empty()) throw InputError("scene: at least one robot required");
        if (leader >= robots.size()) throw InputError("scene: leader index out of range");
        if (margin < 0.0) throw InputError("scene: margin must be nonnegative");
        auto check = [](const Capsule& c, const std::string& where) {
            if (!(c.radius > 0.0)) throw InputError(where + ": capsule radius must be positive");
        };
        for (std::size_t i = 0; i < robots.size(); ++i)
            for (const auto& lc : robots[i].capsules) {
                check(lc.shape, "robots[" + std::to_string(i) + "]");
                if (lc.link < kPlatformLink || lc.link > kGripperLink)
                    throw InputError("robots[" + std::to_string(i) + "]: capsule link out of range");
            }
        for (const auto& c : object.capsules) check(c, "object");
        for (const auto& c : obstacles) check(c, "obstacles");
    }
};

struct PosedLink {
    int link;
    Capsule shape;
};

/// World-frame capsules of a robot at configuration `q`.
inline std::vector<PosedLink> posed_capsules(const RobotEntry& robot, const Config& q, Pose* ee_out = nullptr) {
    const Pose platform = fk_platform(q.platform);
    const Pose base = platform * robot.model.platform.mount;
    const ArmFrames frames = robot.model.arm.frames(q.arm);
    if (ee_out) *ee_out = base * frames.ee;
    std::vector<PosedLink> out;
    out.reserve(robot.capsules.size());
    for (const auto& lc : robot.capsules) {
        Pose frame;
        if (lc.link == kPlatformLink) frame = platform;
        else if (lc.link == kBaseLink) frame = base;
        else frame = base * frames.links[lc.link - 1];
        out.push_back({lc.link, lc.shape.transformed(frame)});
    }
    return out;
}

struct OtherRobot {
    std::size_t index;
    Config config;
    bool grasping = true;
};

struct CollisionQuery {
    bool grasping = true;           // gripper/object exemption active
    bool check_limits = true;
    std::optional<double> margin;   // overrides scene.margin
};

/// First reason `q` is outside C_free, or nullopt when it is inside.
inline std::optional<std::string> find_collision(const Scene& scene, std::size_t robot_index, const Config& q,
                                                 const Pose& object_pose, const std::vector<OtherRobot>& others,
                                                 const CollisionQuery& query = {}) {
    const RobotEntry& robot = scene.robots.at(robot_index);
    const double margin = query.margin.value_or(scene.margin);
    if (query.check_limits) {
        if (!robot.model.arm.within_limits(q.arm, 1e-9)) return "joint limit";
        if (!robot.model.platform.bounds.contains(q.platform, 1e-9)) return "workspace bounds";
    }
    Pose ee;
    const auto links = posed_capsules(robot, q, &ee);

    for (std::size_t i = 0; i < links.size(); ++i)
        for (std::size_t j = i + 1; j < links.size(); ++j) {
            if (std::abs(links[i].link - links[j].link) < 2) continue;
            if (capsule_distance(links[i].shape, links[j].shape) < margin)
                return "self collision links " + std::to_string(links[i].link) + "/" +
                       std::to_string(links[j].link);
        }

    const double exempt = 1.2 * scene.grasp_approach_radius;
    for (const auto& oc : scene.object.capsules) {
        const Capsule world = oc.transformed(object_pose);
        const bool near_grasp =
            query.grasping && point_segment_distance(ee.translation, world.a, world.b) - world.radius < exempt;
        for (const auto& l : links) {
            if (near_grasp && l.link == kGripperLink) continue;
            if (capsule_distance(l.shape, world) < margin)
                return "object collision link " + std::to_string(l.link);
        }
    }

    for (const auto& l : links) {
        for (const auto& ob : scene.obstacles)
            if (capsule_distance(l.shape, ob) < margin) return "obstacle collision link " + std::to_string(l.link);
        if (scene.floor_z && l.link != kPlatformLink) {
            const double z = std::min(l.shape.a.z(), l.shape.b.z()) - l.shape.radius;
            if (z - *scene.floor_z < margin) return "floor collision link " + std::to_string(l.link);
        }
    }

    for (const auto& other : others) {
        if (other.index == robot_index) continue;
        const auto other_links = posed_capsules(scene.robots.at(other.index), other.config);
        for (const auto& a : links)
            for (const auto& b : other_links)
                if (capsule_distance(a.shape, b.shape) < margin)
                    return "robot collision with robot " + std::to_string(other.index);
    }
    return std::nullopt;
}

inline bool in_cfree(const Scene& scene, std::size_t robot_index, const Config& q, const Pose& object_pose,
                     const std::vector<OtherRobot>& others, const CollisionQuery& query = {}) {
    return !find_collision(scene, robot_index, q, object_pose, others, query).has_value();
}

/// Pairwise robot-robot verdict, independent of which robot is the query.
inline bool robots_collide(const Scene& scene, std::size_t i, const Config& qi, std::size_t j, const Config& qj,
                           std::optional<double> margin = std::nullopt) {
    const double m = margin.value_or(scene.margin);
    const auto a = posed_capsules(scene.robots.at(i), qi);
    const auto b = posed_capsules(scene.robots.at(j), qj);
    for (const auto& x : a)
        for (const auto& y : b)
            if (capsule_distance(x.shape, y.shape) < m) return true;
    return false;
}

}  // namespace flipplan
