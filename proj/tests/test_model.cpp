#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace flipplan;

namespace {

// Per-joint homogeneous matrices multiplied out explicitly.
Eigen::Matrix4d fk_oracle(const ArmModel& arm, const ArmConfig& q) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    for (int j = 0; j < kArmDof; ++j) {
        Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
        rot.topLeftCorner<3, 3>() = Eigen::AngleAxisd(q(j), arm.joints()[j].axis).toRotationMatrix();
        t = t * arm.joints()[j].parent_offset.matrix() * rot;
    }
    return t * arm.tool().matrix();
}

Mat6 fd_jacobian(const ArmModel& arm, const ArmConfig& q, double h) {
    Mat6 jac;
    const Pose p0 = fk_arm(arm, q);
    for (int j = 0; j < kArmDof; ++j) {
        ArmConfig a = q, b = q;
        a(j) += h;
        b(j) -= h;
        const Pose pa = fk_arm(arm, a), pb = fk_arm(arm, b);
        jac.block<3, 1>(0, j) = (pa.translation - pb.translation) / (2 * h);
        // Angular velocity from the skew part of dR R^T.
        const Mat3 w = (pa.rotation - pb.rotation) / (2 * h) * p0.rotation.transpose();
        jac.block<3, 1>(3, j) = Vec3(w(2, 1) - w(1, 2), w(0, 2) - w(2, 0), w(1, 0) - w(0, 1)) / 2;
    }
    return jac;
}

ArmConfig random_q(const ArmModel& arm, Rng& rng) { return arm.random_config(rng); }

}  // namespace

TEST_CASE("platform forward kinematics") {
    CHECK(fk_platform(PlatformConfig(0, 0, 0)).matrix() == Eigen::Matrix4d::Identity());
    const Pose p = fk_platform(PlatformConfig(1, 0, kPi / 2));
    CHECK(p.translation.isApprox(Vec3(1, 0, 0)));
    CHECK((p.rotation - rot_z(kPi / 2)).cwiseAbs().maxCoeff() <= 1e-15);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const PlatformConfig q(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-kPi, kPi));
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m(0, 0) = std::cos(q.z());
        m(0, 1) = -std::sin(q.z());
        m(1, 0) = std::sin(q.z());
        m(1, 1) = std::cos(q.z());
        m(0, 3) = q.x();
        m(1, 3) = q.y();
        const auto d = pose_distance(fk_platform(q), Pose{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()});
        CHECK(d.translational <= 1e-15);
        CHECK(d.rotational <= 1e-7);
    }
}

TEST_CASE("arm forward kinematics") {
    const ArmModel arm = fixtures::test_arm();
    const Pose zero = fk_arm(arm, ArmConfig::Zero());
    CHECK(zero.translation.isApprox(Vec3(0, 0, 1.0)));
    CHECK((zero.rotation - Mat3::Identity()).norm() <= 1e-15);

    std::array<Joint, kArmDof> j{};
    for (auto& x : j) x = {Pose::identity(), Vec3::UnitX()};
    j[0] = {Pose::from_translation({0.1, 0.2, 0.3}), Vec3::UnitZ()};
    std::array<JointLimit, kArmDof> lim{};
    const Pose tool = Pose::from_translation({0.5, 0, 0});
    const ArmModel single(j, lim, tool);
    ArmConfig q = ArmConfig::Zero();
    q(0) = kPi / 2;
    const Pose expected = Pose::from_translation({0.1, 0.2, 0.3}) * Pose::from_rotation(rot_z(kPi / 2)) * tool;
    CHECK((fk_arm(single, q).matrix() - expected.matrix()).cwiseAbs().maxCoeff() <= 1e-15);

    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const ArmConfig r = random_q(arm, rng);
        CHECK((fk_arm(arm, r).matrix() - fk_oracle(arm, r)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("full chain forward kinematics") {
    const RobotModel robot = fixtures::test_robot();
    const Config home{PlatformConfig::Zero(), ArmConfig::Zero()};
    CHECK((fk(robot, home).matrix() - (robot.platform.mount * fk_arm(robot.arm, home.arm)).matrix())
              .cwiseAbs()
              .maxCoeff() == 0.0);
    Config moved = home;
    moved.platform << 1, 2, 0;
    CHECK((fk(robot, moved).translation - fk(robot, home).translation - Vec3(1, 2, 0)).norm() <= 1e-15);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Config q{PlatformConfig(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)),
                       random_q(robot.arm, rng)};
        const Eigen::Matrix4d oracle = fk_platform(q.platform).matrix() * robot.platform.mount.matrix() *
                                       fk_oracle(robot.arm, q.arm);
        CHECK((fk(robot, q).matrix() - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("jacobian columns") {
    std::array<Joint, kArmDof> j{};
    for (auto& x : j) x = {Pose::identity(), Vec3::UnitZ()};
    std::array<JointLimit, kArmDof> lim{};
    const double L = 0.7;
    const ArmModel lever(j, lim, Pose::from_translation({L, 0, 0}));
    const Mat6 jac = jacobian_arm(lever, ArmConfig::Zero());
    CHECK((jac.block<3, 1>(0, 0) - Vec3(0, L, 0)).norm() <= 1e-15);
    CHECK((jac.block<3, 1>(3, 0) - Vec3(0, 0, 1)).norm() == 0.0);

    // With q2 = 0 the first and third axes are the same line.
    const ArmModel arm = fixtures::test_arm();
    ArmConfig q = ArmConfig::Zero();
    q(3) = 0.7;
    Eigen::FullPivLU<Mat6> lu(jacobian_arm(arm, q));
    lu.setThreshold(1e-10);
    CHECK(lu.rank() <= 5);
}

TEST_CASE("jacobian matches central differences") {
    const ArmModel arm = fixtures::test_arm();
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const ArmConfig q = random_q(arm, rng);
        CHECK((jacobian_arm(arm, q) - fd_jacobian(arm, q, 1e-6)).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("manipulability") {
    const ArmModel arm = fixtures::test_arm();
    CHECK(manipulability(arm, ArmConfig::Zero()) <= 1e-12);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const ArmConfig q = random_q(arm, rng);
        const double w = manipulability(arm, q);
        CHECK(std::abs(manipulability_gram(arm, q) - w) <= 1e-9 * std::max(w, 1e-12) + 1e-15);
        const Eigen::JacobiSVD<Mat6> svd(jacobian_arm(arm, q));
        CHECK(std::abs(svd.singularValues().prod() - w) <= 1e-9 * std::max(w, 1e-12) + 1e-15);
    }
}

TEST_CASE("manipulability ignores the platform") {
    const RobotModel robot = fixtures::test_robot();
    Rng rng(6);
    const ArmConfig q = random_q(robot.arm, rng);
    const double w = manipulability(robot.arm, q);
    for (int i = 0; i < 10; ++i) {
        const Config c{PlatformConfig(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)), q};
        CHECK(manipulability(robot.arm, c.arm) == w);
    }
}

TEST_CASE("inverse kinematics") {
    const ArmModel arm = fixtures::test_arm();
    Rng rng(7);
    const ArmConfig seed = random_q(arm, rng);
    const auto same = ik_arm(arm, fk_arm(arm, seed), seed);
    REQUIRE(same);
    CHECK(*same == seed);

    const auto far = ik_arm(arm, Pose::from_translation({10, 0, 0}), seed);
    CHECK_FALSE(far);
    CHECK_THROWS_AS(ik_arm(arm, Pose::identity(), ArmConfig::Constant(4.0)), InputError);

    int converged = 0;
    for (int i = 0; i < 100; ++i) {
        ArmConfig target_q = random_q(arm, rng);
        target_q = arm.clamp(target_q * 0.9);
        ArmConfig start = target_q;
        for (int j = 0; j < kArmDof; ++j) start(j) += rng.uniform(-0.05, 0.05);
        start = arm.clamp(start);
        const Pose target = fk_arm(arm, target_q);
        auto q = ik_arm(arm, target, start);
        if (!q) continue;
        ++converged;
        const auto d = pose_distance(fk_arm(arm, *q), target);
        CHECK(d.translational <= 1e-6);
        CHECK(d.rotational <= 1e-6);
        CHECK(arm.within_limits(*q));
    }
    CHECK(converged >= 95);
}

TEST_CASE("multi-seed inverse kinematics is deterministic") {
    const ArmModel arm = fixtures::test_arm();
    Rng rng(8);
    const Pose target = fk_arm(arm, random_q(arm, rng));
    IkOptions o;
    o.seed = 42;
    const std::vector<ArmConfig> seeds{ArmConfig::Zero()};
    const auto a = ik_arm_multi(arm, target, seeds, o);
    const auto b = ik_arm_multi(arm, target, seeds, o);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*a == *b);
}
