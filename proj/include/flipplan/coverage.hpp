#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "flipplan/intervals.hpp"
#include "flipplan/scene.hpp"

namespace flipplan {

struct Waypoint {
    double t = 0.0;
    Pose pose;
};

/// Object trajectory over t in [0,1], geodesic between waypoints.
class ObjectTrajectory {
public:
    ObjectTrajectory() = default;

    explicit ObjectTrajectory(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {
        if (waypoints_.size() < 2) throw InputError("trajectory: at least two waypoints required");
        if (waypoints_.front().t != 0.0) throw InputError("trajectory: first waypoint must have t = 0");
        if (waypoints_.back().t != 1.0) throw InputError("trajectory: last waypoint must have t = 1");
        for (std::size_t i = 1; i < waypoints_.size(); ++i)
            if (!(waypoints_[i].t > waypoints_[i - 1].t))
                throw InputError("trajectory: waypoint t must be strictly increasing");
    }

    const std::vector<Waypoint>& waypoints() const { return waypoints_; }

    Pose pose_at(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) throw InputError("trajectory: t outside [0,1]");
        auto it = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.t; });
        if (it == waypoints_.end()) return waypoints_.back().pose;
        const Waypoint& b = *it;
        const Waypoint& a = *(it - 1);
        if (t == a.t) return a.pose;
        return interpolate(a.pose, b.pose, (t - a.t) / (b.t - a.t));
    }

private:
    std::vector<Waypoint> waypoints_;
};

inline Pose object_pose_at(const ObjectTrajectory& traj, double t) { return traj.pose_at(t); }

struct Grasp {
    std::string id;
    Pose relative;  // object frame -> end-effector frame
};

/// End-effector target under grasp `g`: object pose chained with the grasp.
inline Pose ee_target(const ObjectTrajectory& traj, const Grasp& g, double t) {
    return traj.pose_at(t) * g.relative;
}

struct PlatformSamplerOptions {
    int headings = 24;
    int radii = 6;
    double inner_fraction = 0.15;  // of the horizontal reach
    double outer_fraction = 0.95;
};

/// Candidate platform poses for reaching `target`: the current pose first,
/// then a polar grid around the target facing it, all within bounds.
inline std::vector<PlatformConfig> platform_candidates(const RobotEntry& robot, const Pose& target,
                                                       const PlatformConfig& current,
                                                       const PlatformSamplerOptions& opts = {}) {
    const auto& bounds = robot.model.platform.bounds;
    std::vector<PlatformConfig> out;
    if (bounds.contains(current, 1e-9)) out.push_back(current);

    const Pose& mount = robot.model.platform.mount;
    const Vec3 shoulder = mount.apply(robot.model.arm.joints()[0].parent_offset.translation);
    const double mount_yaw = std::atan2(mount.rotation(1, 0), mount.rotation(0, 0));
    const double reach = robot.model.arm.reach();
    const double dz = target.translation.z() - shoulder.z();
    if (std::abs(dz) >= reach) return out;
    const double horizontal = std::sqrt(reach * reach - dz * dz);

    for (int h = 0; h < opts.headings; ++h) {
        const double phi = 2.0 * kPi * h / opts.headings;
        const Vec3 dir(std::cos(phi), std::sin(phi), 0.0);
        for (int r = 0; r < opts.radii; ++r) {
            const double frac =
                opts.inner_fraction + (opts.outer_fraction - opts.inner_fraction) * (r + 0.5) / opts.radii;
            const double theta = phi - mount_yaw;
            const Vec3 shoulder_world = Vec3(target.translation.x(), target.translation.y(), 0.0) -
                                        frac * horizontal * dir;
            const Vec3 offset = rot_z(theta) * Vec3(shoulder.x(), shoulder.y(), 0.0);
            PlatformConfig q(shoulder_world.x() - offset.x(), shoulder_world.y() - offset.y(), theta);
            auto wrapped = bounds.wrap_theta(theta);
            if (!wrapped) continue;
            q.z() = *wrapped;
            if (bounds.contains(q, 1e-9)) out.push_back(q);
        }
    }
    return out;
}

/// True when the target is farther from the first joint than the arm can reach.
inline bool beyond_reach(const RobotEntry& robot, const PlatformConfig& qp, const Pose& target) {
    const Pose base = arm_base_pose(robot.model, qp);
    const Vec3 shoulder = base.apply(robot.model.arm.joints()[0].parent_offset.translation);
    return (target.translation - shoulder).norm() > robot.model.arm.reach();
}

struct CoverageOptions {
    std::size_t resolution = 201;
    std::uint64_t seed = 1;
    IkOptions ik;
    PlatformSamplerOptions sampler;
};

/// Searches platform candidates x IK seeds for a configuration realising
/// `target` that lies in C_free (other robots ignored). Seeds depend only on
/// (seed, robot, candidate index), so the verdict is a function of the target.
inline std::optional<Config> find_grasp_config(const Scene& scene, std::size_t robot_index, const Pose& target,
                                               const Pose& object_pose, const PlatformConfig& current_platform,
                                               const std::vector<ArmConfig>& arm_hints,
                                               const CoverageOptions& opts) {
    const RobotEntry& robot = scene.robots.at(robot_index);
    const auto candidates = platform_candidates(robot, target, current_platform, opts.sampler);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const PlatformConfig& qp = candidates[c];
        if (beyond_reach(robot, qp, target)) continue;
        const Pose local = inverse(arm_base_pose(robot.model, qp)) * target;
        std::vector<ArmConfig> seeds = arm_hints;
        Rng rng(derive_seed(opts.seed, {robot_index, c}));
        while (static_cast<int>(seeds.size()) < opts.ik.restarts) seeds.push_back(robot.model.arm.random_config(rng));
        for (const auto& s : seeds) {
            auto q = ik_arm(robot.model.arm, local, robot.model.arm.clamp(s), opts.ik);
            if (!q) continue;
            Config cfg{qp, *q};
            if (in_cfree(scene, robot_index, cfg, object_pose, {})) return cfg;
        }
    }
    return std::nullopt;
}

struct GraspCoverage {
    std::size_t grasp = 0;     // index into the grasp list
    SampleMask mask;           // feasible samples
    ParamIntervalSet set;      // gamma(g)
    std::vector<std::optional<Config>> witnesses;
};

struct RobotCoverage {
    std::size_t robot = 0;
    std::vector<GraspCoverage> grasps;
    SampleMask union_mask;
    ParamIntervalSet gamma;  // union over grasps

    bool covers_all() const { return union_mask.all(); }

    /// Closure of the parameter ranges no grasp can realise.
    ParamIntervalSet gaps(const SampleGrid& grid) const {
        SampleMask missing(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) missing.set(i, !union_mask.test(i));
        return missing.to_intervals(grid);
    }
};

/// Per-grasp feasibility sweep over the sample grid for one robot.
inline RobotCoverage ik_check(const Scene& scene, std::size_t robot_index, const ObjectTrajectory& traj,
                              const std::vector<Grasp>& grasps, const CoverageOptions& opts = {}) {
    const SampleGrid grid(opts.resolution);
    const RobotEntry& robot = scene.robots.at(robot_index);
    RobotCoverage out;
    out.robot = robot_index;
    out.union_mask = SampleMask(grid.size());
    for (std::size_t g = 0; g < grasps.size(); ++g) {
        GraspCoverage gc;
        gc.grasp = g;
        gc.mask = SampleMask(grid.size());
        gc.witnesses.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.t(i);
            const Pose obj = traj.pose_at(t);
            const Pose target = obj * grasps[g].relative;
            auto cfg = find_grasp_config(scene, robot_index, target, obj, robot.initial.platform,
                                         {robot.initial.arm}, opts);
            if (cfg) {
                gc.mask.set(i);
                gc.witnesses[i] = cfg;
            }
        }
        gc.set = gc.mask.to_intervals(grid);
        out.union_mask |= gc.mask;
        out.grasps.push_back(std::move(gc));
    }
    out.gamma = out.union_mask.to_intervals(grid);
    return out;
}

}  // namespace flipplan
