#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flipplan/assign.hpp"
#include "flipplan/coverage.hpp"

namespace flipplan {

enum class KnotEvent { track, platform_transit, regrasp_free, hold };

inline const char* to_string(KnotEvent e) {
    switch (e) {
        case KnotEvent::track: return "track";
        case KnotEvent::platform_transit: return "platform_transit";
        case KnotEvent::regrasp_free: return "regrasp_free";
        case KnotEvent::hold: return "hold";
    }
    return "track";
}

inline KnotEvent knot_event_from_string(const std::string& s) {
    if (s == "track") return KnotEvent::track;
    if (s == "platform_transit") return KnotEvent::platform_transit;
    if (s == "regrasp_free") return KnotEvent::regrasp_free;
    if (s == "hold") return KnotEvent::hold;
    throw InputError("unknown knot event '" + s + "'");
}

struct Knot {
    double t = 0.0;
    Config q;
    std::optional<std::size_t> grasp;  // absent while released
    KnotEvent event = KnotEvent::track;
};

struct RobotTrajectory {
    std::vector<Knot> knots;
    double xi = 0.05;
};

struct TimelineEvent {
    std::size_t step = 0;  // first step of the regrasp block
    std::size_t length = 0;
    RegraspEvent regrasp;
};

/// Per-robot knot lists of equal length; step j of every robot is simultaneous.
struct MultiRobotPlan {
    std::vector<RobotTrajectory> robots;
    std::vector<TimelineEvent> events;
    Assignment assignment;
    std::size_t resolution = 201;
    std::vector<std::size_t> transits;  // platform transits per robot

    std::size_t steps() const { return robots.empty() ? 0 : robots.front().knots.size(); }
    std::size_t regrasp_count() const { return assignment.regrasp_count(); }
};

struct PlanOptions {
    std::size_t resolution = 201;
    double xi = 0.05;                   // overlap, trajectory-parameter units
    std::uint64_t seed = 1;
    std::optional<double> margin;       // overrides the scene clearance
    std::size_t max_alternatives = 16;
    double manipulability_floor = 1e-3;
    double arm_step_bound = 0.25;       // rad per knot
    double platform_step_bound = 0.1;   // m per knot
    double platform_turn_bound = 0.25;  // rad per knot
    int max_transits = 12;
    double retreat = 0.1;               // m along the gripper axis
    int retract_steps = 5;
    std::size_t start_candidates = 4;
    std::size_t regrasp_candidates = 4;
    double tracking_tol = 1e-4;
    double drift_tol = 1e-4;
    IkOptions ik;
    PlatformSamplerOptions sampler;
};

/// Shared, read-only planning state.
class PlanContext {
public:
    PlanContext(const Scene& scene, const ObjectTrajectory& traj, const std::vector<Grasp>& grasps,
                const PlanOptions& opts)
        : scene_(scene), traj_(traj), grasps_(grasps), grid_(opts.resolution), opts_(opts) {
        if (opts_.margin) scene_.margin = *opts_.margin;
        if (!(opts_.xi > 0.0)) throw InputError("plan: xi must be positive");
        objects_.reserve(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) objects_.push_back(traj_.pose_at(grid_.t(i)));
    }

    const Scene& scene() const { return scene_; }
    const ObjectTrajectory& trajectory() const { return traj_; }
    const std::vector<Grasp>& grasps() const { return grasps_; }
    const SampleGrid& grid() const { return grid_; }
    const PlanOptions& opts() const { return opts_; }
    const Pose& object(std::size_t i) const { return objects_[i]; }
    Pose target(std::size_t grasp, std::size_t i) const { return objects_[i] * grasps_.at(grasp).relative; }
    const RobotEntry& robot(std::size_t r) const { return scene_.robots.at(r); }

    std::size_t xi_samples() const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts_.xi * (grid_.size() - 1))));
    }

    CoverageOptions coverage_options() const {
        CoverageOptions c;
        c.resolution = opts_.resolution;
        c.seed = opts_.seed;
        c.ik = opts_.ik;
        c.sampler = opts_.sampler;
        return c;
    }

    Pose local_target(std::size_t r, const PlatformConfig& qp, const Pose& world) const {
        return inverse(arm_base_pose(robot(r).model, qp)) * world;
    }

private:
    Scene scene_;
    const ObjectTrajectory& traj_;
    const std::vector<Grasp>& grasps_;
    SampleGrid grid_;
    PlanOptions opts_;
    std::vector<Pose> objects_;
};

inline double angle_diff(double a, double b) { return std::abs(a - b); }

/// Step bounds between consecutive knots of one robot.
inline bool step_ok(const PlanOptions& o, const Config& a, const Config& b) {
    if ((a.arm - b.arm).cwiseAbs().maxCoeff() > o.arm_step_bound + 1e-12) return false;
    if ((a.platform.head<2>() - b.platform.head<2>()).norm() > o.platform_step_bound + 1e-12) return false;
    return angle_diff(a.platform.z(), b.platform.z()) <= o.platform_turn_bound + 1e-12;
}

/// Validity of a grasping configuration at sample i: C_free (other robots
/// ignored) and manipulability above the floor.
inline bool track_config_ok(const PlanContext& ctx, std::size_t r, const Config& q, std::size_t i,
                            const std::vector<OtherRobot>& others = {}) {
    if (manipulability(ctx.robot(r).model.arm, q.arm) < ctx.opts().manipulability_floor) return false;
    return in_cfree(ctx.scene(), r, q, ctx.object(i), others);
}

inline bool tracks(const PlanContext& ctx, std::size_t r, const Config& q, std::size_t grasp, std::size_t i,
                   double tol) {
    return pose_distance(fk(ctx.robot(r).model, q), ctx.target(grasp, i)).within(tol, tol);
}

struct ManipulatorRun {
    std::vector<Knot> knots;  // includes the start knot when valid
    std::size_t reached = 0;  // last feasible sample index
};

/// Arm-only continuation along the grasp target with the platform frozen,
/// from sample `start` towards `limit` (direction from their order). Stops at
/// the first IK miss, joint limit, collision, low manipulability or jump.
inline ManipulatorRun plan_manipulator(const PlanContext& ctx, std::size_t r, std::size_t grasp, std::size_t start,
                                       const Config& start_cfg, std::size_t limit) {
    ManipulatorRun run;
    run.reached = start;
    const auto& arm = ctx.robot(r).model.arm;
    if (!arm.within_limits(start_cfg.arm, 1e-9) || !tracks(ctx, r, start_cfg, grasp, start, 1e-6) ||
        !track_config_ok(ctx, r, start_cfg, start))
        return run;
    run.knots.push_back({ctx.grid().t(start), start_cfg, grasp, KnotEvent::track});
    const int dir = limit >= start ? 1 : -1;
    Config cur = start_cfg;
    for (std::size_t i = start; i != limit;) {
        i = static_cast<std::size_t>(static_cast<long long>(i) + dir);
        const Pose local = ctx.local_target(r, cur.platform, ctx.target(grasp, i));
        auto q = ik_arm(arm, local, cur.arm, ctx.opts().ik);
        if (!q) break;
        Config next{cur.platform, *q};
        if (!step_ok(ctx.opts(), cur, next) || !track_config_ok(ctx, r, next, i)) break;
        run.knots.push_back({ctx.grid().t(i), next, grasp, KnotEvent::track});
        run.reached = i;
        cur = next;
    }
    return run;
}

/// Platform poses near `current`: shifts along and across the heading, with
/// and without a small turn, nearest first, inside the bounds.
inline std::vector<PlatformConfig> nearby_platforms(const RobotEntry& robot, const PlatformConfig& current) {
    const auto& bounds = robot.model.platform.bounds;
    const double c = std::cos(current.z()), s = std::sin(current.z());
    const Vec3 fwd(c, s, 0.0), side(-s, c, 0.0);
    std::vector<std::pair<double, PlatformConfig>> scored;
    for (double a : {-0.4, -0.3, -0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2, 0.3, 0.4})
        for (double b : {-0.2, -0.1, 0.0, 0.1, 0.2})
            for (double turn : {0.0, -0.15, 0.15, -0.3, 0.3}) {
                if (a == 0.0 && b == 0.0 && turn == 0.0) continue;
                const Vec3 d = a * fwd + b * side;
                PlatformConfig q(current.x() + d.x(), current.y() + d.y(), current.z() + turn);
                auto wrapped = bounds.wrap_theta(q.z());
                if (!wrapped) continue;
                q.z() = *wrapped;
                if (bounds.contains(q, 1e-9)) scored.emplace_back(std::hypot(a, b) + 0.5 * std::abs(turn), q);
            }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<PlatformConfig> out;
    for (const auto& [d, q] : scored) out.push_back(q);
    return out;
}

struct ConnectResult {
    std::size_t window_start = 0;  // last kept knot before the transit
    std::vector<Knot> transit;     // knots window_start+1 .. stall sample
    PlatformConfig platform;
    std::size_t lookahead = 0;     // forward reach from the new platform
};

/// Chooses a new platform pose maximising the lookahead reach. From that
/// pose the arm-only branch must cover the stall and reach back at least
/// xi before it, so the two branches share the overlap window. The window is
/// then re-planned with the platform moving linearly, starting from the
/// kept knot, so the arm stays continuous through the hand-off.
/// `knots[k]` is the knot at sample `first + k`; its last entry is the stall.
inline std::optional<ConnectResult> connect_plan(const PlanContext& ctx, std::size_t r, std::size_t grasp,
                                                 const std::vector<Knot>& knots, std::size_t first,
                                                 std::size_t run_start, std::size_t seg_last) {
    if (knots.empty()) return std::nullopt;
    const std::size_t stall = first + knots.size() - 1;
    if (stall >= seg_last || stall <= run_start) return std::nullopt;
    const auto& opts = ctx.opts();
    const RobotEntry& robot = ctx.robot(r);
    const Config& stalled = knots.back().q;
    const std::size_t xi = ctx.xi_samples();
    const std::size_t window = stall > run_start + xi ? stall - xi : run_start;

    struct Candidate {
        Config at_stall;
        std::size_t lookahead;
        double displacement;
    };
    std::vector<Candidate> scored;
    auto platforms = nearby_platforms(robot, stalled.platform);
    for (const auto& q : platform_candidates(robot, ctx.target(grasp, stall), stalled.platform, opts.sampler))
        platforms.push_back(q);
    for (std::size_t c = 0; c < platforms.size(); ++c) {
        const PlatformConfig& qp = platforms[c];
        if ((qp - stalled.platform).norm() < 1e-9) continue;
        if (beyond_reach(robot, qp, ctx.target(grasp, stall))) continue;
        IkOptions ik = opts.ik;
        ik.seed = derive_seed(opts.seed, {r, grasp, stall, c});
        ik.restarts = 3;
        const std::vector<ArmConfig> seeds{stalled.arm};
        auto arm = ik_arm_multi(robot.model.arm, ctx.local_target(r, qp, ctx.target(grasp, stall)), seeds, ik);
        if (!arm) continue;
        const Config at{qp, *arm};
        if (!track_config_ok(ctx, r, at, stall)) continue;
        const auto back = plan_manipulator(ctx, r, grasp, stall, at, window);
        if (back.reached > window) continue;  // overlap shorter than xi
        const auto fwd = plan_manipulator(ctx, r, grasp, stall, at, seg_last);
        if (fwd.reached <= stall) continue;
        const double disp = (qp.head<2>() - stalled.platform.head<2>()).norm() +
                            0.5 * angle_diff(qp.z(), stalled.platform.z());
        scored.push_back({at, fwd.reached, disp});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        return a.lookahead != b.lookahead ? a.lookahead > b.lookahead : a.displacement < b.displacement;
    });

    const std::size_t windows[] = {window, (window + stall) / 2};
    for (const auto& cand : scored) {
        for (std::size_t w : windows) {
            if (w >= stall || w < first) continue;
            const Config& from = knots[w - first].q;
            std::vector<Knot> transit;
            Config cur = from;
            bool ok = true;
            for (std::size_t i = w + 1; i <= stall && ok; ++i) {
                const double s = static_cast<double>(i - w) / static_cast<double>(stall - w);
                const PlatformConfig qp = (1.0 - s) * from.platform + s * cand.at_stall.platform;
                const Pose local = ctx.local_target(r, qp, ctx.target(grasp, i));
                auto q = ik_arm(robot.model.arm, local, cur.arm, opts.ik);
                if (!q) {
                    ok = false;
                    break;
                }
                Config next{qp, *q};
                if (!step_ok(opts, cur, next) || !track_config_ok(ctx, r, next, i)) {
                    ok = false;
                    break;
                }
                transit.push_back({ctx.grid().t(i), next, grasp, KnotEvent::platform_transit});
                cur = next;
            }
            if (!ok) continue;
            // The window must actually connect to the candidate's forward branch.
            const auto fwd = plan_manipulator(ctx, r, grasp, stall, cur, seg_last);
            if (fwd.reached <= stall) continue;
            return ConnectResult{w, std::move(transit), cand.at_stall.platform, fwd.reached};
        }
    }
    return std::nullopt;
}

struct SegmentPlan {
    bool ok = false;
    std::vector<Knot> knots;  // one per sample from seg_first
    std::size_t reached = 0;
    std::size_t transits = 0;
    std::string failure;
};

/// Holds one grasp over [seg_first, seg_last], alternating arm-only
/// continuation with platform transits when the arm stalls.
inline SegmentPlan coordinated_platform_plan(const PlanContext& ctx, std::size_t r, std::size_t grasp,
                                             std::size_t seg_first, std::size_t seg_last, const Config& start) {
    SegmentPlan out;
    out.reached = seg_first;
    std::size_t run_start = seg_first;
    Config cfg = start;
    while (true) {
        auto run = plan_manipulator(ctx, r, grasp, run_start, cfg, seg_last);
        if (run.knots.empty()) {
            out.failure = "start configuration invalid at t=" + std::to_string(ctx.grid().t(run_start));
            return out;
        }
        const std::size_t skip = out.knots.empty() ? 0 : 1;
        out.knots.insert(out.knots.end(), run.knots.begin() + static_cast<long>(skip), run.knots.end());
        out.reached = run.reached;
        if (run.reached == seg_last) {
            out.ok = true;
            return out;
        }
        if (static_cast<int>(out.transits) >= ctx.opts().max_transits) {
            out.failure = "transit budget exhausted";
            return out;
        }
        auto conn = connect_plan(ctx, r, grasp, out.knots, seg_first, run_start, seg_last);
        if (!conn) {
            out.failure = "connect_plan found no platform pose at t=" + std::to_string(ctx.grid().t(run.reached));
            return out;
        }
        out.knots.resize(conn->window_start - seg_first + 1);
        out.knots.insert(out.knots.end(), conn->transit.begin(), conn->transit.end());
        ++out.transits;
        run_start = seg_first + out.knots.size() - 1;
        cfg = out.knots.back().q;
    }
}

struct GraspCandidate {
    Config q;
    double manipulability = 0.0;
};

/// Index of the candidate with the largest manipulability (first on ties).
inline std::optional<std::size_t> select_max_manipulability(const std::vector<GraspCandidate>& c) {
    if (c.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i].manipulability > c[best].manipulability) best = i;
    return best;
}

/// All distinct valid configurations realising `grasp` at sample i over the
/// sampled platform poses, ordered by decreasing manipulability.
inline std::vector<GraspCandidate> grasp_candidates(const PlanContext& ctx, std::size_t r, std::size_t grasp,
                                                    std::size_t i, const Config& current,
                                                    const std::vector<OtherRobot>& others) {
    const RobotEntry& robot = ctx.robot(r);
    const Pose target = ctx.target(grasp, i);
    std::vector<GraspCandidate> out;
    const auto platforms = platform_candidates(robot, target, current.platform, ctx.opts().sampler);
    for (std::size_t c = 0; c < platforms.size(); ++c) {
        const PlatformConfig& qp = platforms[c];
        if (beyond_reach(robot, qp, target)) continue;
        const Pose local = ctx.local_target(r, qp, target);
        std::vector<ArmConfig> seeds{current.arm, robot.initial.arm};
        Rng rng(derive_seed(ctx.opts().seed, {r, c, 7}));
        while (static_cast<int>(seeds.size()) < ctx.opts().ik.restarts) seeds.push_back(robot.model.arm.random_config(rng));
        std::vector<ArmConfig> found;
        for (const auto& s : seeds) {
            auto q = ik_arm(robot.model.arm, local, robot.model.arm.clamp(s), ctx.opts().ik);
            if (!q) continue;
            if (std::any_of(found.begin(), found.end(),
                            [&](const ArmConfig& f) { return (f - *q).cwiseAbs().maxCoeff() < 1e-3; }))
                continue;
            found.push_back(*q);
            Config cfg{qp, *q};
            if (!track_config_ok(ctx, r, cfg, i, others)) continue;
            out.push_back({cfg, manipulability(robot.model.arm, *q)});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GraspCandidate& a, const GraspCandidate& b) { return a.manipulability > b.manipulability; });
    return out;
}

namespace detail {

inline Pose along_gripper(const Pose& ee, double back, double lift) {
    Pose p = ee * Pose::from_translation(Vec3(0.0, 0.0, -back));
    p.translation.z() += lift;
    return p;
}

/// Straight Cartesian motion of the end-effector with the platform fixed.
inline std::optional<std::vector<Config>> cartesian_path(const PlanContext& ctx, std::size_t r, std::size_t i,
                                                         const Config& from, const Pose& goal,
                                                         const std::vector<OtherRobot>& others) {
    const auto& arm = ctx.robot(r).model.arm;
    const Pose start = fk(ctx.robot(r).model, from);
    const int steps = ctx.opts().retract_steps;
    std::vector<Config> out;
    Config cur = from;
    for (int k = 1; k <= steps; ++k) {
        const Pose p = interpolate(start, goal, static_cast<double>(k) / steps);
        auto q = ik_arm(arm, ctx.local_target(r, cur.platform, p), cur.arm, ctx.opts().ik);
        if (!q) return std::nullopt;
        Config next{cur.platform, *q};
        if (!step_ok(ctx.opts(), cur, next) || !in_cfree(ctx.scene(), r, next, ctx.object(i), others)) return std::nullopt;
        out.push_back(next);
        cur = next;
    }
    return out;
}

/// Straight joint-space motion (platform and arm) with step bounds.
inline std::optional<std::vector<Config>> joint_path(const PlanContext& ctx, std::size_t r, std::size_t i,
                                                     const Config& from, const Config& to,
                                                     const std::vector<OtherRobot>& others) {
    const auto& o = ctx.opts();
    const double n_arm = (to.arm - from.arm).cwiseAbs().maxCoeff() / (0.5 * o.arm_step_bound);
    const double n_xy = (to.platform.head<2>() - from.platform.head<2>()).norm() / (0.5 * o.platform_step_bound);
    const double n_th = angle_diff(to.platform.z(), from.platform.z()) / (0.5 * o.platform_turn_bound);
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max({n_arm, n_xy, n_th}))));
    std::vector<Config> out;
    for (int k = 1; k <= steps; ++k) {
        const double s = static_cast<double>(k) / steps;
        Config q{(1.0 - s) * from.platform + s * to.platform, (1.0 - s) * from.arm + s * to.arm};
        if (!in_cfree(ctx.scene(), r, q, ctx.object(i), others)) return std::nullopt;
        out.push_back(q);
    }
    return out;
}

}  // namespace detail

/// Release, retreat, free transfer, approach and regrasp at sample i.
/// The object and all other robots are frozen. Empty when from == to.
inline std::optional<std::vector<Knot>> regrasp_path(const PlanContext& ctx, std::size_t r, std::size_t i,
                                                     const Config& from, std::size_t from_grasp, const Config& to,
                                                     std::size_t to_grasp, const std::vector<OtherRobot>& others) {
    if (from_grasp == to_grasp && from == to) return std::vector<Knot>{};
    const auto& model = ctx.robot(r).model;
    const double t = ctx.grid().t(i);
    const Pose ee_from = fk(model, from);
    const Pose ee_to = ctx.target(to_grasp, i);
    const double d0 = ctx.opts().retreat;
    const std::pair<double, double> attempts[] = {{d0, 0.0},       {1.5 * d0, 0.0}, {2.0 * d0, 0.0},
                                                  {d0, 0.5 * d0},   {1.5 * d0, d0},  {2.0 * d0, 2.0 * d0}};
    for (auto [back, lift] : attempts) {
        auto retract = detail::cartesian_path(ctx, r, i, from, detail::along_gripper(ee_from, back, lift), others);
        if (!retract) continue;
        IkOptions ik = ctx.opts().ik;
        auto pre_arm = ik_arm(model.arm, ctx.local_target(r, to.platform, detail::along_gripper(ee_to, back, lift)),
                              to.arm, ik);
        if (!pre_arm) continue;
        const Config pre{to.platform, *pre_arm};
        auto approach = detail::cartesian_path(ctx, r, i, pre, ee_to, others);
        if (!approach) continue;
        auto transfer = detail::joint_path(ctx, r, i, retract->back(), pre, others);
        if (!transfer) continue;
        std::vector<Knot> knots;
        auto emit = [&](const Config& q) { knots.push_back({t, q, std::nullopt, KnotEvent::regrasp_free}); };
        for (const auto& q : *retract) emit(q);
        for (const auto& q : *transfer) emit(q);
        for (std::size_t k = 0; k + 1 < approach->size(); ++k) emit((*approach)[k]);
        emit(to);
        if (!step_ok(ctx.opts(), knots.size() > 1 ? knots[knots.size() - 2].q : from, to)) continue;
        return knots;
    }
    return std::nullopt;
}

struct RegraspPlan {
    std::vector<Knot> knots;
    Config target;
    double manipulability = 0.0;
};

/// Regrasp at sample i: the manipulability-maximising configuration for the
/// new grasp over sampled platform poses, plus a collision-free path to it.
/// Candidates are tried in decreasing manipulability until a path exists.
inline std::vector<RegraspPlan> plan_regrasp(const PlanContext& ctx, std::size_t r, std::size_t i,
                                             std::size_t from_grasp, std::size_t to_grasp, const Config& current,
                                             const std::vector<OtherRobot>& others, std::size_t max_plans = 1) {
    std::vector<RegraspPlan> out;
    if (from_grasp == to_grasp) {
        out.push_back({{}, current, manipulability(ctx.robot(r).model.arm, current.arm)});
        return out;
    }
    const auto cands = grasp_candidates(ctx, r, to_grasp, i, current, others);
    for (const auto& c : cands) {
        auto path = regrasp_path(ctx, r, i, current, from_grasp, c.q, to_grasp, others);
        if (!path) continue;
        out.push_back({std::move(*path), c.q, c.manipulability});
        if (out.size() >= max_plans) break;
    }
    return out;
}

struct Violation {
    std::size_t step = 0;
    std::size_t robot = 0;
    std::string kind;
    double value = 0.0;
    std::string detail;
};

struct CheckReport {
    bool pass = true;
    std::vector<Violation> violations;
    double max_tracking_pos = 0.0, max_tracking_rot = 0.0;
    double max_drift_pos = 0.0, max_drift_rot = 0.0;
};

/// Verifies tracking, closed-chain drift, C_free (all robot pairs), step
/// continuity, platform parsimony and the frozen-object regrasp rule.
inline CheckReport trajectory_check(const PlanContext& ctx, const MultiRobotPlan& plan) {
    CheckReport rep;
    const auto& o = ctx.opts();
    const std::size_t n = plan.robots.size();
    if (n != ctx.scene().robots.size()) {
        rep.pass = false;
        rep.violations.push_back({0, 0, "shape", 0.0, "robot count mismatch"});
        return rep;
    }
    const std::size_t steps = plan.steps();
    for (const auto& rt : plan.robots)
        if (rt.knots.size() != steps) {
            rep.pass = false;
            rep.violations.push_back({0, 0, "shape", 0.0, "unequal knot counts"});
            return rep;
        }
    auto flag = [&](std::size_t s, std::size_t r, std::string kind, double v, std::string d = {}) {
        rep.pass = false;
        if (rep.violations.size() < 200) rep.violations.push_back({s, r, std::move(kind), v, std::move(d)});
    };
    std::map<std::pair<std::size_t, std::size_t>, Pose> reference;
    std::vector<std::optional<std::size_t>> prev_grasps(n);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = plan.robots[0].knots[s].t;
        const Pose obj = ctx.trajectory().pose_at(t);
        std::vector<std::optional<std::size_t>> grasps(n);
        std::vector<Pose> ee(n);
        bool any_free = false;
        for (std::size_t r = 0; r < n; ++r) {
            const Knot& k = plan.robots[r].knots[s];
            grasps[r] = k.grasp;
            ee[r] = fk(ctx.robot(r).model, k.q);
            if (k.event == KnotEvent::regrasp_free) any_free = true;
            if (k.t != t) flag(s, r, "timeline", k.t - t, "robots disagree on t");
            if (k.grasp) {
                const auto d = pose_distance(ee[r], obj * ctx.grasps().at(*k.grasp).relative);
                rep.max_tracking_pos = std::max(rep.max_tracking_pos, d.translational);
                rep.max_tracking_rot = std::max(rep.max_tracking_rot, d.rotational);
                if (!d.within(o.tracking_tol, o.tracking_tol))
                    flag(s, r, "tracking", std::max(d.translational, d.rotational));
            }
            std::vector<OtherRobot> others;
            for (std::size_t q = 0; q < n; ++q)
                if (q != r) others.push_back({q, plan.robots[q].knots[s].q});
            if (auto why = find_collision(ctx.scene(), r, k.q, obj, others)) flag(s, r, "collision", 0.0, *why);
            if (s > 0) {
                const Knot& p = plan.robots[r].knots[s - 1];
                if (k.t < p.t) flag(s, r, "timeline", k.t - p.t, "t decreased");
                if (!step_ok(o, p.q, k.q)) flag(s, r, "continuity", (k.q.arm - p.q.arm).cwiseAbs().maxCoeff());
                const bool platform_moved = (k.q.platform - p.q.platform).cwiseAbs().maxCoeff() > 1e-12;
                if (platform_moved && k.event != KnotEvent::platform_transit && k.event != KnotEvent::regrasp_free)
                    flag(s, r, "parsimony", (k.q.platform - p.q.platform).norm(), "platform moved outside transit");
                if (k.event == KnotEvent::hold && !(k.q == p.q)) flag(s, r, "hold", 0.0, "hold knot moved");
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (grasps[a] && grasps[b] && *grasps[a] == *grasps[b]) flag(s, b, "distinct_grasps", 0.0);
        if (any_free) {
            for (std::size_t r = 0; r < n; ++r) {
                const Knot& k = plan.robots[r].knots[s];
                if (k.event != KnotEvent::regrasp_free && k.event != KnotEvent::hold)
                    flag(s, r, "frozen", 0.0, "robot moves while another regrasps");
                if (s > 0 && k.t != plan.robots[r].knots[s - 1].t) flag(s, r, "frozen", 0.0, "object moved during regrasp");
            }
        }
        if (grasps != prev_grasps) reference.clear();
        prev_grasps = grasps;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!grasps[a] || !grasps[b]) continue;
                const Pose rel = inverse(ee[a]) * ee[b];
                auto [it, inserted] = reference.try_emplace({a, b}, rel);
                if (inserted) continue;
                const auto d = pose_distance(it->second, rel);
                rep.max_drift_pos = std::max(rep.max_drift_pos, d.translational);
                rep.max_drift_rot = std::max(rep.max_drift_rot, d.rotational);
                if (!d.within(o.drift_tol, o.drift_tol)) flag(s, b, "closed_chain", std::max(d.translational, d.rotational));
            }
    }
    return rep;
}

struct AttemptReport {
    std::size_t rank = 0;
    std::size_t regrasps = 0;
    std::string failure;  // empty when the attempt passed
};

struct PlanReport {
    std::vector<RobotCoverage> coverage;
    std::vector<std::size_t> min_cover_size;  // per robot
    std::size_t assignments_available = 0;
    std::vector<AttemptReport> attempts;
    std::optional<CheckReport> check;
};

/// Coverage gap: some parameter is unreachable by every grasp for a robot.
class CoverageGapError : public InfeasibleError {
public:
    CoverageGapError(std::string msg, std::vector<std::pair<std::size_t, ParamIntervalSet>> gaps)
        : InfeasibleError(std::move(msg)), gaps_(std::move(gaps)) {}
    const std::vector<std::pair<std::size_t, ParamIntervalSet>>& gaps() const { return gaps_; }

private:
    std::vector<std::pair<std::size_t, ParamIntervalSet>> gaps_;
};

class PlanningFailure : public InfeasibleError {
public:
    PlanningFailure(std::string msg, std::vector<AttemptReport> attempts)
        : InfeasibleError(std::move(msg)), attempts_(std::move(attempts)) {}
    const std::vector<AttemptReport>& attempts() const { return attempts_; }

private:
    std::vector<AttemptReport> attempts_;
};

namespace detail {

struct RobotPlan {
    std::vector<Knot> track;                        // one knot per sample
    std::map<std::size_t, std::vector<Knot>> blocks;  // regrasp knots keyed by sample
    std::size_t transits = 0;
};

/// Valid configurations for grasp g at sample i, current platform first.
inline std::vector<Config> start_configs(const PlanContext& ctx, std::size_t r, std::size_t g, std::size_t i,
                                         const Config& hint, std::size_t count) {
    std::vector<Config> out;
    const RobotEntry& robot = ctx.robot(r);
    const Pose target = ctx.target(g, i);
    const auto platforms = platform_candidates(robot, target, hint.platform, ctx.opts().sampler);
    for (std::size_t c = 0; c < platforms.size() && out.size() < count; ++c) {
        if (beyond_reach(robot, platforms[c], target)) continue;
        IkOptions ik = ctx.opts().ik;
        ik.seed = derive_seed(ctx.opts().seed, {r, g, i, c, 11});
        const std::vector<ArmConfig> seeds{hint.arm};
        auto q = ik_arm_multi(robot.model.arm, ctx.local_target(r, platforms[c], target), seeds, ik);
        if (!q) continue;
        Config cfg{platforms[c], *q};
        if (track_config_ok(ctx, r, cfg, i)) out.push_back(cfg);
    }
    return out;
}

inline std::vector<OtherRobot> others_at(const std::vector<RobotPlan>& done, std::size_t i) {
    std::vector<OtherRobot> out;
    for (std::size_t q = 0; q < done.size(); ++q) {
        auto it = done[q].blocks.find(i);
        const Config& cfg = it != done[q].blocks.end() && !it->second.empty() ? it->second.back().q : done[q].track[i].q;
        out.push_back({q, cfg});
    }
    return out;
}

/// Plans segments k.. of a scheme recursively, retrying ranked regrasp
/// targets when the following segment fails.
inline bool plan_segments(const PlanContext& ctx, const CoverScheme& scheme, std::size_t k, const Config& start,
                          const std::vector<RobotPlan>& done, RobotPlan& out, std::string& failure) {
    const Segment& seg = scheme.segments[k];
    const std::size_t r = scheme.owner;
    auto sp = coordinated_platform_plan(ctx, r, seg.grasp, seg.active_first, seg.active_last, start);
    if (!sp.ok) {
        failure = "robot " + std::to_string(r) + " segment " + std::to_string(k) + " (grasp " +
                  ctx.grasps()[seg.grasp].id + ") reached t=" + std::to_string(ctx.grid().t(sp.reached)) + ": " +
                  sp.failure;
        return false;
    }
    const std::size_t keep = out.track.size();
    const std::size_t keep_transits = out.transits;
    const std::size_t skip = k == 0 ? 0 : 1;  // sample shared with the previous segment
    out.track.insert(out.track.end(), sp.knots.begin() + static_cast<long>(skip), sp.knots.end());
    out.transits += sp.transits;
    if (k + 1 == scheme.segments.size()) return true;

    const std::size_t h = seg.active_last;
    const Segment& next = scheme.segments[k + 1];
    const auto others = others_at(done, h);
    const auto regrasps = plan_regrasp(ctx, r, h, seg.grasp, next.grasp, sp.knots.back().q, others,
                                       ctx.opts().regrasp_candidates);
    if (regrasps.empty())
        failure = "robot " + std::to_string(r) + " regrasp at t=" + std::to_string(ctx.grid().t(h)) +
                  " found no reachable configuration/path for grasp " + ctx.grasps()[next.grasp].id;
    for (const auto& rg : regrasps) {
        out.blocks[h] = rg.knots;
        if (plan_segments(ctx, scheme, k + 1, rg.target, done, out, failure)) return true;
        out.blocks.erase(h);
        out.track.resize(keep + sp.knots.size() - skip);
        out.transits = keep_transits + sp.transits;
    }
    out.track.resize(keep);
    out.transits = keep_transits;
    return false;
}

inline MultiRobotPlan merge_timeline(const PlanContext& ctx, const std::vector<RobotPlan>& robots,
                                     const Assignment& assignment) {
    const std::size_t n = robots.size();
    MultiRobotPlan plan;
    plan.assignment = assignment;
    plan.resolution = ctx.grid().size();
    plan.robots.resize(n);
    for (auto& rt : plan.robots) rt.xi = ctx.opts().xi;
    for (const auto& rp : robots) plan.transits.push_back(rp.transits);
    std::vector<Config> last(n);
    std::vector<std::optional<std::size_t>> holding(n);
    for (std::size_t i = 0; i < ctx.grid().size(); ++i) {
        for (std::size_t r = 0; r < n; ++r) {
            const Knot& k = robots[r].track[i];
            plan.robots[r].knots.push_back(k);
            last[r] = k.q;
            holding[r] = k.grasp;
        }
        for (const auto& ev : assignment.regrasp_events) {
            if (ev.sample != i) continue;
            auto it = robots[ev.robot].blocks.find(i);
            if (it == robots[ev.robot].blocks.end() || it->second.empty()) continue;
            TimelineEvent te{plan.robots[0].knots.size(), it->second.size(), ev};
            for (const Knot& k : it->second) {
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == ev.robot) plan.robots[r].knots.push_back(k);
                    else plan.robots[r].knots.push_back({k.t, last[r], holding[r], KnotEvent::hold});
                }
            }
            last[ev.robot] = it->second.back().q;
            holding[ev.robot] = ev.to;
            plan.events.push_back(te);
        }
    }
    return plan;
}

}  // namespace detail

/// Coverage sweep for every robot.
inline std::vector<RobotCoverage> coverage_all(const PlanContext& ctx) {
    std::vector<RobotCoverage> cov;
    for (std::size_t r = 0; r < ctx.scene().robots.size(); ++r)
        cov.push_back(ik_check(ctx.scene(), r, ctx.trajectory(), ctx.grasps(), ctx.coverage_options()));
    return cov;
}

inline void require_full_coverage(const PlanContext& ctx, const std::vector<RobotCoverage>& cov) {
    std::vector<std::pair<std::size_t, ParamIntervalSet>> gaps;
    std::ostringstream msg;
    for (const auto& c : cov)
        if (!c.covers_all()) {
            auto g = c.gaps(ctx.grid());
            msg << (gaps.empty() ? "" : "; ") << "robot " << c.robot << " cannot hold the object on";
            for (const auto& iv : g.intervals()) msg << " [" << iv.lo << ", " << iv.hi << "]";
            gaps.emplace_back(c.robot, std::move(g));
        }
    if (!gaps.empty()) throw CoverageGapError("coverage gap: " + msg.str(), std::move(gaps));
}

/// Plans every robot for one assignment; nullopt with `failure` set on error.
/// Coverage witnesses at the first sample, when given, are extra start candidates.
inline std::optional<MultiRobotPlan> plan_assignment(const PlanContext& ctx, const Assignment& a, std::string& failure,
                                                     const std::vector<RobotCoverage>* coverage = nullptr) {
    std::vector<detail::RobotPlan> done;
    for (const auto& scheme : a.schemes) {
        const std::size_t r = scheme.owner;
        const Segment& first = scheme.segments.front();
        auto starts = detail::start_configs(ctx, r, first.grasp, 0, ctx.robot(r).initial, ctx.opts().start_candidates);
        if (coverage) {
            const auto& w = (*coverage)[r].grasps[first.grasp].witnesses.front();
            if (w && track_config_ok(ctx, r, *w, 0) &&
                std::find(starts.begin(), starts.end(), *w) == starts.end())
                starts.push_back(*w);
        }
        if (starts.empty()) {
            failure = "robot " + std::to_string(r) + " has no valid start configuration for grasp " +
                      ctx.grasps()[first.grasp].id;
            return std::nullopt;
        }
        bool ok = false;
        detail::RobotPlan rp;
        for (const auto& s : starts) {
            rp = {};
            if (detail::plan_segments(ctx, scheme, 0, s, done, rp, failure)) {
                ok = true;
                break;
            }
        }
        if (!ok) return std::nullopt;
        done.push_back(std::move(rp));
    }
    return detail::merge_timeline(ctx, done, a);
}

/// Coverage, early failure, minimum-regrasp assignment, per-robot planning
/// and verification, retrying the next assignment until one passes.
inline MultiRobotPlan global_plan(const PlanContext& ctx, PlanReport* report = nullptr) {
    const auto& scene = ctx.scene();
    if (ctx.grasps().empty()) throw InputError("plan: empty grasp set");
    if (ctx.grasps().size() < scene.robots.size()) throw InputError("plan: fewer grasps than robots");
    PlanReport local;
    PlanReport& rep = report ? *report : local;
    rep.coverage = coverage_all(ctx);
    require_full_coverage(ctx, rep.coverage);

    std::vector<std::vector<SampleMask>> masks;
    for (const auto& c : rep.coverage) {
        std::vector<SampleMask> m;
        for (const auto& g : c.grasps) m.push_back(g.mask);
        rep.min_cover_size.push_back(min_cover(m).min_size);
        masks.push_back(std::move(m));
    }
    AllocateOptions aopts;
    aopts.leader = scene.leader;
    AssignmentSearch search(masks, ctx.grid(), aopts);
    rep.assignments_available = search.size();
    for (std::size_t attempt = 0; attempt < ctx.opts().max_alternatives; ++attempt) {
        auto a = search.next();
        if (!a) break;
        std::string failure;
        auto plan = plan_assignment(ctx, *a, failure, &rep.coverage);
        if (!plan) {
            rep.attempts.push_back({a->rank, a->regrasp_count(), failure});
            continue;
        }
        auto check = trajectory_check(ctx, *plan);
        if (!check.pass) {
            const auto& v = check.violations.front();
            rep.attempts.push_back({a->rank, a->regrasp_count(),
                                    "trajectory_check: " + v.kind + " at step " + std::to_string(v.step) + " robot " +
                                        std::to_string(v.robot) + (v.detail.empty() ? "" : " (" + v.detail + ")")});
            continue;
        }
        rep.attempts.push_back({a->rank, a->regrasp_count(), ""});
        rep.check = check;
        return std::move(*plan);
    }
    if (rep.attempts.empty()) throw PlanningFailure("no assignment keeps grasps distinct across robots", rep.attempts);
    throw PlanningFailure("all " + std::to_string(rep.attempts.size()) + " assignment alternatives failed", rep.attempts);
}

}  // namespace flipplan
