#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "flipplan/plan.hpp"

namespace flipplan {

struct Disturbance {
    double sigma_p = 0.0;  // leader platform x/y half-width, m
    double sigma_m = 0.0;  // leader heading and arm joints half-width, rad
    std::uint64_t seed = 0;
};

struct Correction {
    Config q;
    bool platform_moved = false;
};

/// Re-solves a follower so that its end-effector sits at
/// fk(leader_actual) * planned_relative. Arm first from the planned arm,
/// then a platform shift that carries the planar part of the displacement.
inline std::optional<Correction> follower_correction(const RobotModel& follower, const Pose& planned_relative,
                                                     const RobotModel& leader, const Config& leader_actual,
                                                     const Config& follower_planned, const IkOptions& ik = {}) {
    const Pose target = fk(leader, leader_actual) * planned_relative;
    auto solve = [&](const PlatformConfig& qp) -> std::optional<ArmConfig> {
        const Pose local = inverse(arm_base_pose(follower, qp)) * target;
        return ik_arm(follower.arm, local, follower.arm.clamp(follower_planned.arm), ik);
    };
    if (auto q = solve(follower_planned.platform)) return Correction{{follower_planned.platform, *q}, false};

    const Pose planned_ee = fk(follower, follower_planned);
    const Pose delta = target * inverse(planned_ee);
    const double yaw = std::atan2(delta.rotation(1, 0), delta.rotation(0, 0));
    const Pose base = fk_platform(follower_planned.platform);
    const Pose moved = Pose{rot_z(yaw), Vec3(delta.translation.x(), delta.translation.y(), 0.0)} * base;
    const double theta = std::atan2(moved.rotation(1, 0), moved.rotation(0, 0));
    PlatformConfig qp(moved.translation.x(), moved.translation.y(),
                      follower_planned.platform.z() + std::remainder(theta - follower_planned.platform.z(), 2.0 * kPi));
    if (!follower.platform.bounds.contains(qp, 1e-9)) return std::nullopt;
    if (auto q = solve(qp)) return Correction{{qp, *q}, true};
    return std::nullopt;
}

struct PairResidual {
    std::size_t a = 0, b = 0;
    double translational = 0.0;
    double rotational = 0.0;
};

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    std::size_t reference = 0;  // robot defining the object pose
    std::vector<Config> actual;
    std::vector<bool> fault;
    std::vector<bool> platform_corrected;
    Pose object;
    std::vector<PairResidual> residuals;
};

struct ExecutionTrace {
    std::vector<StepRecord> steps;
    std::vector<std::string> disturbance_log;
    Disturbance disturbance;
    std::size_t robots = 0;

    std::size_t fault_count() const {
        std::size_t n = 0;
        for (const auto& s : steps) n += static_cast<std::size_t>(std::count(s.fault.begin(), s.fault.end(), true));
        return n;
    }
    double max_residual_pos() const {
        double m = 0.0;
        for (const auto& s : steps)
            for (const auto& r : s.residuals) m = std::max(m, r.translational);
        return m;
    }
    double max_residual_rot() const {
        double m = 0.0;
        for (const auto& s : steps)
            for (const auto& r : s.residuals) m = std::max(m, r.rotational);
        return m;
    }
    double mean_residual_pos() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : steps)
            for (const auto& r : s.residuals) {
                sum += r.translational;
                ++n;
            }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
    double mean_residual_rot() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : steps)
            for (const auto& r : s.residuals) {
                sum += r.rotational;
                ++n;
            }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
    /// Worst residual of one step over all grasping pairs.
    static std::pair<double, double> step_worst(const StepRecord& s) {
        double p = 0.0, r = 0.0;
        for (const auto& x : s.residuals) {
            p = std::max(p, x.translational);
            r = std::max(r, x.rotational);
        }
        return {p, r};
    }
};

/// Kinematic playback: the leader follows its knots plus uniform noise and
/// every grasping follower is re-solved against the leader's actual pose.
/// When the leader is released, the lowest-index holder is the reference.
inline ExecutionTrace simulate(const Scene& scene, const std::vector<Grasp>& grasps, const MultiRobotPlan& plan,
                               const Disturbance& dist, const IkOptions& ik = {}) {
    const std::size_t n = plan.robots.size();
    if (n != scene.robots.size()) throw InputError("simulate: plan and scene disagree on robot count");
    if (dist.sigma_p < 0.0 || dist.sigma_m < 0.0) throw InputError("simulate: noise must be nonnegative");
    ExecutionTrace trace;
    trace.disturbance = dist;
    trace.robots = n;
    Rng rng(derive_seed(dist.seed, {0x5eed}));
    const std::size_t leader = scene.leader;
    std::vector<Config> last_valid(n);
    for (std::size_t s = 0; s < plan.steps(); ++s) {
        StepRecord rec;
        rec.step = s;
        rec.t = plan.robots[0].knots[s].t;
        rec.actual.resize(n);
        rec.fault.assign(n, false);
        rec.platform_corrected.assign(n, false);

        std::vector<Config> planned(n);
        std::vector<std::optional<std::size_t>> held(n);
        for (std::size_t r = 0; r < n; ++r) {
            planned[r] = plan.robots[r].knots[s].q;
            held[r] = plan.robots[r].knots[s].grasp;
            rec.actual[r] = planned[r];
        }

        Config noisy = planned[leader];
        if (dist.sigma_p > 0.0 || dist.sigma_m > 0.0) {
            noisy.platform.x() += rng.uniform(-dist.sigma_p, dist.sigma_p);
            noisy.platform.y() += rng.uniform(-dist.sigma_p, dist.sigma_p);
            noisy.platform.z() += rng.uniform(-dist.sigma_m, dist.sigma_m);
            for (int j = 0; j < kArmDof; ++j) noisy.arm(j) += rng.uniform(-dist.sigma_m, dist.sigma_m);
            noisy.arm = scene.robots[leader].model.arm.clamp(noisy.arm);
        }
        rec.actual[leader] = noisy;

        std::size_t ref = leader;
        if (!held[leader]) {
            for (std::size_t r = 0; r < n; ++r)
                if (held[r]) {
                    ref = r;
                    break;
                }
        }
        rec.reference = ref;
        const RobotModel& ref_model = scene.robots[ref].model;
        const Pose ref_planned_ee = fk(ref_model, planned[ref]);
        if (held[ref]) {
            for (std::size_t r = 0; r < n; ++r) {
                if (r == ref || !held[r]) continue;
                const RobotModel& model = scene.robots[r].model;
                const Pose rel = inverse(ref_planned_ee) * fk(model, planned[r]);
                auto c = follower_correction(model, rel, ref_model, rec.actual[ref], planned[r], ik);
                if (c) {
                    rec.actual[r] = c->q;
                    rec.platform_corrected[r] = c->platform_moved;
                } else {
                    rec.fault[r] = true;
                    rec.actual[r] = s > 0 ? last_valid[r] : planned[r];
                    trace.disturbance_log.push_back("step " + std::to_string(s) + ": robot " + std::to_string(r) +
                                                    " correction infeasible, holding last valid configuration");
                }
            }
            rec.object = fk(ref_model, rec.actual[ref]) * inverse(grasps.at(*held[ref]).relative);
        } else {
            rec.object = Pose::identity();
        }

        std::vector<Pose> ee_plan(n), ee_act(n);
        for (std::size_t r = 0; r < n; ++r) {
            ee_plan[r] = fk(scene.robots[r].model, planned[r]);
            ee_act[r] = fk(scene.robots[r].model, rec.actual[r]);
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!held[a] || !held[b]) continue;
                const auto d = pose_distance(inverse(ee_plan[a]) * ee_plan[b], inverse(ee_act[a]) * ee_act[b]);
                rec.residuals.push_back({a, b, d.translational, d.rotational});
            }
        for (std::size_t r = 0; r < n; ++r)
            if (!rec.fault[r]) last_valid[r] = rec.actual[r];
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace flipplan
