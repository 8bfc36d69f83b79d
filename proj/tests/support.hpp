#pragma once

#include <array>

#include "flipplan/flipplan.hpp"

namespace fixtures {

using namespace flipplan;

/// Six revolute joints, axes z-y-z-y-z-y, 0.3 m links, 0.1 m tool.
inline ArmModel test_arm(double link = 0.3, double tool = 0.1, double limit_deg = 170.0) {
    std::array<Joint, kArmDof> j{};
    const Vec3 z = Vec3::UnitZ(), y = Vec3::UnitY();
    j[0] = {Pose::from_translation({0, 0, link}), z};
    j[1] = {Pose::identity(), y};
    j[2] = {Pose::from_translation({0, 0, link}), z};
    j[3] = {Pose::identity(), y};
    j[4] = {Pose::from_translation({0, 0, link}), z};
    j[5] = {Pose::identity(), y};
    std::array<JointLimit, kArmDof> lim{};
    for (auto& l : lim) l = {deg2rad(-limit_deg), deg2rad(limit_deg)};
    return ArmModel(j, lim, Pose::from_translation({0, 0, tool}));
}

inline std::vector<LinkCapsule> test_capsules() {
    return {
        {kPlatformLink, {{-0.2, 0, 0.2}, {0.2, 0, 0.2}, 0.2}},
        {kBaseLink, {{0, 0, 0}, {0, 0, 0.15}, 0.06}},
        {2, {{0, 0, 0.08}, {0, 0, 0.22}, 0.05}},
        {4, {{0, 0, 0.08}, {0, 0, 0.22}, 0.04}},
        {kGripperLink, {{0, 0, 0.04}, {0, 0, 0.1}, 0.03}},
    };
}

inline RobotModel test_robot() {
    RobotModel m;
    m.platform.mount = Pose::from_translation({0.1, 0, 0.35});
    m.arm = test_arm();
    return m;
}

inline RobotEntry test_entry(const PlatformConfig& at, const ArmConfig& arm = ArmConfig::Zero()) {
    RobotEntry e;
    e.name = "r";
    e.model = test_robot();
    e.initial = {at, arm};
    e.capsules = test_capsules();
    return e;
}

inline Scene scene_of(std::vector<RobotEntry> robots) {
    Scene s;
    s.robots = std::move(robots);
    return s;
}

inline ObjectTrajectory line(const Vec3& a, const Vec3& b, const Mat3& ra = Mat3::Identity(),
                             const Mat3& rb = Mat3::Identity()) {
    return ObjectTrajectory({{0.0, {ra, a}}, {1.0, {rb, b}}});
}

/// Gripper above the object origin, approach axis pointing down.
inline Grasp top_grasp(const std::string& id, double height = 0.05) {
    return {id, Pose{rot_y(kPi), Vec3(0, 0, height)}};
}

/// Arm configuration realising `target` from the given platform pose.
inline std::optional<ArmConfig> solve_arm(const RobotEntry& r, const PlatformConfig& qp, const Pose& target,
                                          std::uint64_t seed = 9) {
    IkOptions o;
    o.restarts = 64;
    o.seed = seed;
    ArmConfig elbow_up = ArmConfig::Zero();
    elbow_up << 0, 0.6, 0, 1.2, 0, 1.2;
    const std::vector<ArmConfig> seeds{elbow_up};
    return ik_arm_multi(r.model.arm, inverse(arm_base_pose(r.model, qp)) * target, seeds, o);
}

}  // namespace fixtures
