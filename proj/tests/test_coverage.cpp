#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace flipplan;

namespace {

struct Fixture {
    Scene scene;
    ObjectTrajectory traj;
    std::vector<Grasp> grasps;
};

Fixture reachable() {
    Fixture f;
    f.traj = fixtures::line({0.55, -0.1, 0.45}, {0.55, 0.1, 0.5});
    f.grasps = {fixtures::top_grasp("top")};
    auto r = fixtures::test_entry(PlatformConfig::Zero());
    r.initial.arm = *fixtures::solve_arm(r, r.initial.platform, ee_target(f.traj, f.grasps[0], 0.0));
    r.model.platform.bounds = {-0.5, 0.5, -0.5, 0.5, -kPi, kPi};
    f.scene = fixtures::scene_of({r});
    return f;
}

// Independent per-sample existence check with ten times the seeds.
bool oracle_feasible(const Scene& s, const Pose& target, const Pose& obj, const CoverageOptions& o) {
    const RobotEntry& r = s.robots[0];
    Rng rng(987654321);
    for (const auto& qp : platform_candidates(r, target, r.initial.platform, o.sampler)) {
        const Pose local = inverse(arm_base_pose(r.model, qp)) * target;
        for (int k = 0; k < 10 * o.ik.restarts; ++k) {
            auto q = ik_arm(r.model.arm, local, r.model.arm.random_config(rng), o.ik);
            if (q && in_cfree(s, 0, {qp, *q}, obj, {})) return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("object trajectory") {
    const Pose a = pose_from_xyz_rpy_deg({0, 0, 1}, {0, 0, 0});
    const Pose b = pose_from_xyz_rpy_deg({1, 0, 1}, {180, 0, 0});
    const ObjectTrajectory traj({{0.0, a}, {1.0, b}});
    CHECK(object_pose_at(traj, 0.0).matrix() == a.matrix());
    CHECK(object_pose_at(traj, 1.0).matrix() == b.matrix());
    const Pose mid = object_pose_at(traj, 0.5);
    CHECK(pose_distance(mid, pose_from_xyz_rpy_deg({0.5, 0, 1}, {90, 0, 0})).rotational <= 1e-9);
    CHECK_THROWS_AS(object_pose_at(traj, 1.01), InputError);
    CHECK_THROWS_AS(ObjectTrajectory({{0.0, a}, {0.0, b}}), InputError);
    CHECK_THROWS_AS(ObjectTrajectory({{0.1, a}, {1.0, b}}), InputError);

    const ObjectTrajectory chair({{0.0, pose_from_xyz_rpy_deg({0, 0, 0.5}, {90, 0, 0})},
                                  {1.0, pose_from_xyz_rpy_deg({0, 0, 0.5}, {-180, 45, 90})}});
    const Vec3 end = rpy_from_rotation(object_pose_at(chair, 1.0).rotation) * (180.0 / kPi);
    CHECK(pose_distance(object_pose_at(chair, 1.0), pose_from_xyz_rpy_deg({0, 0, 0.5}, end)).rotational <= 1e-9);
    CHECK(pose_distance(object_pose_at(chair, 0.0), pose_from_xyz_rpy_deg({0, 0, 0.5}, {90, 0, 0})).rotational <=
          1e-12);

    // Three waypoints: each waypoint reproduced exactly.
    const Pose c = pose_from_xyz_rpy_deg({2, 0, 1}, {0, 90, 0});
    const ObjectTrajectory three({{0.0, a}, {0.4, b}, {1.0, c}});
    CHECK(three.pose_at(0.4).matrix() == b.matrix());
}

TEST_CASE("end-effector target chains the grasp") {
    const auto traj = fixtures::line({0, 0, 1}, {1, 0, 1});
    const Grasp id{"id", Pose::identity()};
    CHECK(ee_target(traj, id, 0.3).matrix() == traj.pose_at(0.3).matrix());
    const Grasp off{"off", Pose::from_translation({0, 0, 0.2})};
    const auto still = fixtures::line({0, 0, 1}, {0, 0, 1});
    for (double t : {0.0, 0.5, 1.0}) CHECK(ee_target(still, off, t).translation.isApprox(Vec3(0, 0, 1.2)));
    Rng rng(61);
    for (int i = 0; i < 50; ++i) {
        const Pose a{rot_axis(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1).normalized(), rng.uniform(0, 3)),
                     Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))};
        const Pose b{rot_axis(Vec3(1, rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(), rng.uniform(0, 3)),
                     Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))};
        const Grasp g{"g", Pose{rot_z(rng.uniform(-3, 3)), Vec3(rng.uniform(-1, 1), 0, 0)}};
        const ObjectTrajectory tr({{0.0, a}, {1.0, b}});
        const double t = rng.uniform();
        const Eigen::Matrix4d oracle = interpolate(a, b, t).matrix() * g.relative.matrix();
        CHECK((ee_target(tr, g, t).matrix() - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("unreachable trajectory yields empty coverage") {
    Fixture f = reachable();
    f.traj = fixtures::line({0, 0, 10}, {0.5, 0, 10});
    CoverageOptions o;
    o.resolution = 11;
    const auto cov = ik_check(f.scene, 0, f.traj, f.grasps, o);
    CHECK(cov.grasps[0].set.empty());
    CHECK(cov.gamma.empty());
    CHECK_FALSE(cov.covers_all());
    CHECK(cov.gaps(SampleGrid(11)) == ParamIntervalSet::full());
}

TEST_CASE("reachable trajectory is fully covered and re-verifies") {
    const Fixture f = reachable();
    CoverageOptions o;
    o.resolution = 21;
    const auto cov = ik_check(f.scene, 0, f.traj, f.grasps, o);
    CHECK(cov.covers_all());
    CHECK(cov.gamma == ParamIntervalSet::full());
    const SampleGrid grid(o.resolution);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Pose obj = f.traj.pose_at(grid.t(i));
        const Pose target = obj * f.grasps[0].relative;
        CHECK(oracle_feasible(f.scene, target, obj, o));
        REQUIRE(cov.grasps[0].witnesses[i]);
        const Config& q = *cov.grasps[0].witnesses[i];
        CHECK(pose_distance(fk(f.scene.robots[0].model, q), target).within(1e-6, 1e-6));
        CHECK(in_cfree(f.scene, 0, q, obj, {}));
    }
}

TEST_CASE("coverage of a receding object, union and refinement") {
    Fixture f = reachable();
    f.scene.robots[0].model.platform.bounds = PlatformBounds::clamped_at(PlatformConfig::Zero());
    f.traj = fixtures::line({0.55, 0, 0.45}, {1.4, 0, 0.45});
    f.grasps.push_back({"side", Pose{rot_y(kPi / 2), Vec3(-0.05, 0, 0)}});
    CoverageOptions coarse;
    coarse.resolution = 41;
    CoverageOptions fine = coarse;
    fine.resolution = 81;
    const auto c1 = ik_check(f.scene, 0, f.traj, f.grasps, coarse);
    const auto c2 = ik_check(f.scene, 0, f.traj, f.grasps, fine);
    CHECK_FALSE(c1.covers_all());
    CHECK(c1.union_mask.test(0));
    CHECK_FALSE(c1.union_mask.test(40));

    ParamIntervalSet u;
    for (const auto& g : c1.grasps) u = u.unite(g.set);
    CHECK(u == c1.gamma);

    for (std::size_t g = 0; g < f.grasps.size(); ++g)
        for (std::size_t i = 0; i < 41; ++i)
            if (c1.grasps[g].mask.test(i)) CHECK(c2.grasps[g].mask.test(2 * i));

    // Feasible samples are pointwise: re-checking one sample alone gives the same verdict.
    const SampleGrid grid(41);
    for (std::size_t i = 0; i < 41; i += 5) {
        const Pose obj = f.traj.pose_at(grid.t(i));
        const auto again = find_grasp_config(f.scene, 0, obj * f.grasps[0].relative, obj,
                                              f.scene.robots[0].initial.platform, {f.scene.robots[0].initial.arm}, coarse);
        CHECK(again.has_value() == c1.grasps[0].mask.test(i));
    }
}

TEST_CASE("platform candidates") {
    const auto r = fixtures::test_entry(PlatformConfig(0.2, 0.1, 0.3));
    const Pose target = Pose::from_translation({1.0, 0.0, 0.6});
    const auto c = platform_candidates(r, target, r.initial.platform);
    REQUIRE(!c.empty());
    CHECK(c.front() == r.initial.platform);
    CHECK(c.size() == 1 + 24 * 6);
    auto bounded = r;
    bounded.model.platform.bounds = PlatformBounds::clamped_at(r.initial.platform);
    CHECK(platform_candidates(bounded, target, r.initial.platform).size() == 1);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK_FALSE(beyond_reach(r, c[k], target));
}
