#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flipplan/exec.hpp"
#include "flipplan/plan.hpp"

namespace flipplan {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Scene, object trajectory and grasp set as read from one scene file.
struct Problem {
    Scene scene;
    ObjectTrajectory trajectory;
    std::vector<Grasp> grasps;
};

struct ScenarioSpec {
    std::string scene_path;
    std::string name;
    bool must_succeed = true;
    std::size_t max_regrasps = 0;
    std::optional<std::size_t> min_regrasps;
    bool platform_motion_allowed = true;
};

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline void write_number(std::ostream& os, double v) {
    if (!std::isfinite(v)) throw InputError("cannot serialise non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << Json(it.key()).dump() << ": ";
                write_json(os, it.value(), indent, depth + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
            if (flat) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    write_json(os, j[i], indent, depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                write_json(os, j[i], indent, depth + 1);
            }
            os << "\n" << close << "]";
            return;
        }
        case Json::value_t::number_float: write_number(os, j.get<double>()); return;
        default: os << j.dump(); return;
    }
}

}  // namespace detail

/// Deterministic text: sorted keys, floats with 17 significant digits.
inline std::string dump_json(const Json& j) {
    std::ostringstream os;
    detail::write_json(os, j, 2, 0);
    os << "\n";
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InputError(source + ": invalid JSON: " + e.what());
    }
}

inline Json read_json(const std::string& path) { return parse_json_text(read_text(path), path); }

// ---------------------------------------------------------------------------
// Schema-checked reading. Every error names the JSON path it refers to.

class Node {
public:
    Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const Json& json() const { return *j_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& what) const { throw InputError(path_ + ": " + what); }

    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

    Node operator[](const std::string& key) const {
        if (!j_->is_object()) fail("expected an object");
        auto it = j_->find(key);
        if (it == j_->end()) throw InputError(path_ + "." + key + ": missing");
        return {*it, path_ + "." + key};
    }

    Node operator[](std::size_t i) const {
        if (!j_->is_array()) fail("expected an array");
        if (i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
        return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
    }

    std::size_t size(std::optional<std::size_t> expected = std::nullopt) const {
        if (!j_->is_array()) fail("expected an array");
        if (expected && j_->size() != *expected)
            fail("expected " + std::to_string(*expected) + " entries, got " + std::to_string(j_->size()));
        return j_->size();
    }

    double number() const {
        if (!j_->is_number()) fail("expected a number");
        const double v = j_->get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    std::size_t index() const {
        if (!j_->is_number_integer() || j_->get<long long>() < 0) fail("expected a nonnegative integer");
        return j_->get<std::size_t>();
    }

    std::string string() const {
        if (!j_->is_string()) fail("expected a string");
        return j_->get<std::string>();
    }

    bool boolean() const {
        if (!j_->is_boolean()) fail("expected true or false");
        return j_->get<bool>();
    }

    Vec3 vec3() const {
        size(3);
        return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
    }

    std::vector<double> numbers(std::size_t n) const {
        size(n);
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i) v.push_back((*this)[i].number());
        return v;
    }

private:
    const Json* j_;
    std::string path_;
};

/// {"xyz": [m], "rpy": [deg]}; either key may be omitted.
inline Pose parse_pose(const Node& n) {
    const Vec3 xyz = n.has("xyz") ? n["xyz"].vec3() : Vec3::Zero();
    const Vec3 rpy = n.has("rpy") ? n["rpy"].vec3() : Vec3::Zero();
    return pose_from_xyz_rpy_deg(xyz, rpy);
}

inline Capsule parse_capsule(const Node& n) {
    Capsule c{n["a"].vec3(), n["b"].vec3(), n["radius"].number()};
    if (!(c.radius > 0.0)) n["radius"].fail("must be positive");
    return c;
}

inline std::pair<double, double> parse_range(const Node& n) {
    const auto v = n.numbers(2);
    if (!(v[0] <= v[1])) n.fail("expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

inline PlatformBounds parse_bounds(const Node& n) {
    PlatformBounds b;
    if (n.has("x")) std::tie(b.x_min, b.x_max) = parse_range(n["x"]);
    if (n.has("y")) std::tie(b.y_min, b.y_max) = parse_range(n["y"]);
    if (n.has("theta")) {
        auto [lo, hi] = parse_range(n["theta"]);
        b.theta_min = deg2rad(lo);
        b.theta_max = deg2rad(hi);
    }
    return b;
}

struct RobotTemplate {
    RobotModel model;
    std::vector<LinkCapsule> capsules;
};

inline RobotTemplate parse_robot_model(const Node& n) {
    RobotTemplate t;
    t.model.platform.mount = n.has("mount") ? parse_pose(n["mount"]) : Pose::identity();
    if (n.has("bounds")) t.model.platform.bounds = parse_bounds(n["bounds"]);
    const Node joints = n["joints"];
    joints.size(kArmDof);
    const Node limits = n["limits"];
    limits.size(kArmDof);
    std::array<Joint, kArmDof> js{};
    std::array<JointLimit, kArmDof> ls{};
    for (std::size_t j = 0; j < kArmDof; ++j) {
        const Node jn = joints[j];
        js[j].parent_offset = jn.has("offset") ? parse_pose(jn["offset"]) : Pose::identity();
        js[j].axis = jn["axis"].vec3();
        if (js[j].axis.norm() < 1e-12) jn["axis"].fail("must be nonzero");
        js[j].axis.normalize();
        auto [lo, hi] = parse_range(limits[j]);
        if (!(lo < hi)) limits[j].fail("expected lo < hi");
        ls[j] = {deg2rad(lo), deg2rad(hi)};
    }
    const Pose tool = n.has("tool") ? parse_pose(n["tool"]) : Pose::identity();
    try {
        t.model.arm = ArmModel(js, ls, tool);
    } catch (const InputError& e) {
        n.fail(e.what());
    }
    if (n.has("capsules")) {
        const Node caps = n["capsules"];
        for (std::size_t i = 0; i < caps.size(); ++i) {
            const Node c = caps[i];
            const double link = c["link"].number();
            if (link != std::floor(link) || link < kPlatformLink || link > kGripperLink)
                c["link"].fail("link must be an integer in [-1, 6]");
            t.capsules.push_back({static_cast<int>(link), parse_capsule(c)});
        }
    }
    return t;
}

inline ObjectTrajectory parse_trajectory(const Node& n) {
    const Node wps = n.has("waypoints") ? n["waypoints"] : n;
    std::vector<Waypoint> out;
    for (std::size_t i = 0; i < wps.size(); ++i) out.push_back({wps[i]["t"].number(), parse_pose(wps[i]["pose"])});
    try {
        return ObjectTrajectory(std::move(out));
    } catch (const InputError& e) {
        wps.fail(e.what());
    }
}

inline Problem parse_problem(const Json& root, const std::string& source = "scene") {
    const Node n(root, source);
    if (!root.is_object()) n.fail("expected an object");
    if (n.has("format_version") && n["format_version"].index() != static_cast<std::size_t>(kFormatVersion))
        n["format_version"].fail("unsupported version");
    Problem p;
    std::map<std::string, RobotTemplate> templates;
    if (n.has("models")) {
        const Node models = n["models"];
        if (!models.json().is_object()) models.fail("expected an object");
        for (auto it = models.json().begin(); it != models.json().end(); ++it)
            templates.emplace(it.key(), parse_robot_model(models[it.key()]));
    }
    const Node robots = n["robots"];
    if (robots.size() == 0) robots.fail("at least one robot required");
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const Node r = robots[i];
        RobotEntry e;
        e.name = r.has("name") ? r["name"].string() : "robot" + std::to_string(i);
        RobotTemplate t;
        const Node m = r["model"];
        if (m.json().is_string()) {
            auto it = templates.find(m.string());
            if (it == templates.end()) m.fail("unknown model '" + m.string() + "'");
            t = it->second;
        } else {
            t = parse_robot_model(m);
        }
        e.model = t.model;
        e.capsules = t.capsules;
        if (r.has("bounds")) e.model.platform.bounds = parse_bounds(r["bounds"]);
        const Node init = r["initial"];
        const Vec3 pl = init["platform"].vec3();
        e.initial.platform = PlatformConfig(pl.x(), pl.y(), deg2rad(pl.z()));
        const auto arm = init["arm"].numbers(kArmDof);
        for (int j = 0; j < kArmDof; ++j) e.initial.arm(j) = deg2rad(arm[static_cast<std::size_t>(j)]);
        p.scene.robots.push_back(std::move(e));
    }
    if (n.has("object")) {
        const Node o = n["object"];
        if (o.has("half_extents")) p.scene.object.half_extents = o["half_extents"].vec3();
        if (o.has("capsules"))
            for (std::size_t i = 0; i < o["capsules"].size(); ++i)
                p.scene.object.capsules.push_back(parse_capsule(o["capsules"][i]));
    }
    if (n.has("obstacles"))
        for (std::size_t i = 0; i < n["obstacles"].size(); ++i) p.scene.obstacles.push_back(parse_capsule(n["obstacles"][i]));
    if (n.has("floor_z")) p.scene.floor_z = n["floor_z"].number();
    if (n.has("leader")) p.scene.leader = n["leader"].index();
    if (n.has("margin")) p.scene.margin = n["margin"].number();
    if (n.has("grasp_approach_radius")) p.scene.grasp_approach_radius = n["grasp_approach_radius"].number();
    try {
        p.scene.validate();
    } catch (const InputError& e) {
        n.fail(e.what());
    }
    p.trajectory = parse_trajectory(n["trajectory"]);
    const Node grasps = n["grasps"];
    for (std::size_t i = 0; i < grasps.size(); ++i) {
        const Node g = grasps[i];
        const std::string id = g["id"].string();
        for (const auto& prev : p.grasps)
            if (prev.id == id) g["id"].fail("duplicate grasp id '" + id + "'");
        p.grasps.push_back({id, parse_pose(g["pose"])});
    }
    return p;
}

inline Problem load_problem(const std::string& path) { return parse_problem(read_json(path), path); }

/// Collapses every platform's workspace to its initial pose.
inline void clamp_platforms(Scene& scene) {
    for (auto& r : scene.robots) r.model.platform.bounds = PlatformBounds::clamped_at(r.initial.platform);
}

inline ScenarioSpec parse_scenario(const Json& root, const std::string& source = "scenario") {
    const Node n(root, source);
    ScenarioSpec s;
    s.scene_path = n["scene"].string();
    s.name = n.has("name") ? n["name"].string() : s.scene_path;
    if (n.has("expect")) {
        const Node e = n["expect"];
        if (e.has("must_succeed")) s.must_succeed = e["must_succeed"].boolean();
        if (e.has("max_regrasps")) s.max_regrasps = e["max_regrasps"].index();
        if (e.has("min_regrasps")) s.min_regrasps = e["min_regrasps"].index();
        if (e.has("platform_motion_allowed")) s.platform_motion_allowed = e["platform_motion_allowed"].boolean();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Artifacts

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const ArmConfig& v) {
    Json a = Json::array();
    for (int j = 0; j < kArmDof; ++j) a.push_back(v(j));
    return a;
}

inline Json intervals_json(const ParamIntervalSet& s) {
    Json a = Json::array();
    for (const auto& i : s.intervals()) a.push_back(Json::array({i.lo, i.hi}));
    return a;
}

inline Json coverage_json(const Problem& p, const std::vector<RobotCoverage>& cov, const CoverageOptions& opts) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "coverage";
    j["resolution"] = opts.resolution;
    j["seed"] = opts.seed;
    j["leader"] = p.scene.leader;
    Json ids = Json::array();
    for (const auto& g : p.grasps) ids.push_back(g.id);
    j["grasps"] = ids;
    bool all = true;
    Json robots = Json::array();
    for (const auto& c : cov) {
        Json r;
        r["robot"] = c.robot;
        r["name"] = p.scene.robots[c.robot].name;
        Json gs = Json::array();
        for (const auto& g : c.grasps) {
            Json gj;
            gj["id"] = p.grasps[g.grasp].id;
            gj["intervals"] = intervals_json(g.set);
            gj["feasible_samples"] = g.mask.count();
            gs.push_back(gj);
        }
        r["grasps"] = gs;
        r["gamma"] = intervals_json(c.gamma);
        r["covers"] = c.covers_all();
        r["gaps"] = intervals_json(c.gaps(SampleGrid(opts.resolution)));
        all = all && c.covers_all();
        robots.push_back(r);
    }
    j["robots"] = robots;
    j["covers_all"] = all;
    return j;
}

/// Per-robot, per-grasp sample masks recovered from a coverage report.
struct CoverageInput {
    SampleGrid grid{201};
    std::vector<std::string> grasp_ids;
    std::vector<std::vector<SampleMask>> masks;
    std::size_t leader = 0;
};

inline CoverageInput parse_coverage(const Json& root, const std::string& source = "coverage") {
    const Node n(root, source);
    if (n["kind"].string() != "coverage") n["kind"].fail("expected a coverage report");
    CoverageInput in;
    in.grid = SampleGrid(n["resolution"].index());
    in.leader = n.has("leader") ? n["leader"].index() : 0;
    for (std::size_t i = 0; i < n["grasps"].size(); ++i) in.grasp_ids.push_back(n["grasps"][i].string());
    const Node robots = n["robots"];
    for (std::size_t r = 0; r < robots.size(); ++r) {
        const Node gs = robots[r]["grasps"];
        gs.size(in.grasp_ids.size());
        std::vector<SampleMask> masks;
        for (std::size_t g = 0; g < gs.size(); ++g) {
            if (gs[g]["id"].string() != in.grasp_ids[g]) gs[g]["id"].fail("grasp order mismatch");
            std::vector<Interval> parts;
            const Node iv = gs[g]["intervals"];
            for (std::size_t k = 0; k < iv.size(); ++k) {
                auto [lo, hi] = parse_range(iv[k]);
                parts.push_back({lo, hi});
            }
            masks.push_back(SampleMask::from_intervals(ParamIntervalSet(parts, in.grid.merge_eps()), in.grid));
        }
        in.masks.push_back(std::move(masks));
    }
    if (in.leader >= in.masks.size() && !in.masks.empty()) n["leader"].fail("out of range");
    return in;
}

inline Json assignment_json(const Assignment& a, const std::vector<std::string>& ids, const SampleGrid& grid) {
    Json j;
    j["rank"] = a.rank;
    j["optimal"] = a.optimal;
    j["total_segments"] = a.total_segments();
    j["regrasps"] = a.regrasp_count();
    Json schemes = Json::array();
    for (const auto& s : a.schemes) {
        Json sj;
        sj["owner"] = s.owner;
        Json segs = Json::array();
        for (const auto& seg : s.segments) {
            Json g;
            g["grasp"] = ids.at(seg.grasp);
            g["feasible"] = Json::array({seg.first, seg.last});
            g["active"] = Json::array({seg.active_first, seg.active_last});
            g["interval"] = Json::array({grid.t(seg.active_first), grid.t(seg.active_last)});
            segs.push_back(g);
        }
        sj["segments"] = segs;
        schemes.push_back(sj);
    }
    j["schemes"] = schemes;
    Json ev = Json::array();
    for (const auto& e : a.regrasp_events) {
        Json x;
        x["robot"] = e.robot;
        x["sample"] = e.sample;
        x["t"] = e.t;
        x["from"] = ids.at(e.from);
        x["to"] = ids.at(e.to);
        ev.push_back(x);
    }
    j["regrasp_events"] = ev;
    return j;
}

inline std::size_t grasp_index(const Node& n, const std::vector<std::string>& ids) {
    const std::string id = n.string();
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return i;
    n.fail("unknown grasp id '" + id + "'");
}

inline Assignment parse_assignment(const Node& n, const std::vector<std::string>& ids, const SampleGrid& grid) {
    Assignment a;
    a.rank = n["rank"].index();
    a.optimal = n["optimal"].boolean();
    const Node schemes = n["schemes"];
    for (std::size_t i = 0; i < schemes.size(); ++i) {
        CoverScheme s;
        s.owner = schemes[i]["owner"].index();
        const Node segs = schemes[i]["segments"];
        for (std::size_t k = 0; k < segs.size(); ++k) {
            Segment seg;
            seg.grasp = grasp_index(segs[k]["grasp"], ids);
            seg.first = segs[k]["feasible"][0].index();
            seg.last = segs[k]["feasible"][1].index();
            seg.active_first = segs[k]["active"][0].index();
            seg.active_last = segs[k]["active"][1].index();
            if (seg.active_last >= grid.size()) segs[k]["active"].fail("sample index beyond resolution");
            s.segments.push_back(seg);
        }
        a.schemes.push_back(std::move(s));
    }
    const Node ev = n["regrasp_events"];
    for (std::size_t i = 0; i < ev.size(); ++i)
        a.regrasp_events.push_back({ev[i]["robot"].index(), ev[i]["sample"].index(), ev[i]["t"].number(),
                                    grasp_index(ev[i]["from"], ids), grasp_index(ev[i]["to"], ids)});
    return a;
}

inline Json plan_json(const Problem& p, const MultiRobotPlan& plan, const PlanReport* report = nullptr) {
    std::vector<std::string> ids;
    for (const auto& g : p.grasps) ids.push_back(g.id);
    const SampleGrid grid(plan.resolution);
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "plan";
    j["resolution"] = plan.resolution;
    j["grasps"] = ids;
    j["assignment"] = assignment_json(plan.assignment, ids, grid);
    j["regrasps"] = plan.regrasp_count();
    Json robots = Json::array();
    for (std::size_t r = 0; r < plan.robots.size(); ++r) {
        Json rj;
        rj["name"] = r < p.scene.robots.size() ? p.scene.robots[r].name : "robot" + std::to_string(r);
        rj["xi"] = plan.robots[r].xi;
        rj["platform_transits"] = r < plan.transits.size() ? plan.transits[r] : 0;
        Json knots = Json::array();
        for (const auto& k : plan.robots[r].knots) {
            Json kj;
            kj["t"] = k.t;
            kj["platform"] = to_json(k.q.platform);
            kj["arm"] = to_json(k.q.arm);
            kj["grasp"] = k.grasp ? Json(ids.at(*k.grasp)) : Json(nullptr);
            kj["event"] = to_string(k.event);
            knots.push_back(kj);
        }
        rj["knots"] = knots;
        robots.push_back(rj);
    }
    j["robots"] = robots;
    Json events = Json::array();
    for (const auto& e : plan.events) {
        Json ej;
        ej["step"] = e.step;
        ej["length"] = e.length;
        ej["robot"] = e.regrasp.robot;
        ej["sample"] = e.regrasp.sample;
        ej["t"] = e.regrasp.t;
        ej["from"] = ids.at(e.regrasp.from);
        ej["to"] = ids.at(e.regrasp.to);
        events.push_back(ej);
    }
    j["events"] = events;
    if (report) {
        Json d;
        d["assignments_available"] = report->assignments_available;
        d["min_cover_size"] = report->min_cover_size;
        Json attempts = Json::array();
        for (const auto& a : report->attempts) {
            Json aj;
            aj["rank"] = a.rank;
            aj["regrasps"] = a.regrasps;
            aj["passed"] = a.failure.empty();
            if (!a.failure.empty()) aj["failure"] = a.failure;
            attempts.push_back(aj);
        }
        d["attempts"] = attempts;
        if (report->check) {
            d["max_tracking_error"] = Json::array({report->check->max_tracking_pos, report->check->max_tracking_rot});
            d["max_closed_chain_drift"] = Json::array({report->check->max_drift_pos, report->check->max_drift_rot});
        }
        j["diagnostics"] = d;
    }
    return j;
}

inline Config parse_config(const Node& platform, const Node& arm) {
    Config q;
    q.platform = platform.vec3();
    const auto a = arm.numbers(kArmDof);
    for (int j = 0; j < kArmDof; ++j) q.arm(j) = a[static_cast<std::size_t>(j)];
    return q;
}

/// Reads a plan file; grasp ids must match the problem's grasp list.
inline MultiRobotPlan parse_plan(const Json& root, const std::vector<Grasp>& grasps, const std::string& source = "plan") {
    const Node n(root, source);
    if (n["kind"].string() != "plan") n["kind"].fail("expected a plan");
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n["grasps"].size(); ++i) ids.push_back(n["grasps"][i].string());
    if (ids.size() != grasps.size()) n["grasps"].fail("grasp list does not match the scene");
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != grasps[i].id) n["grasps"][i].fail("grasp id does not match the scene");
    MultiRobotPlan plan;
    plan.resolution = n["resolution"].index();
    const SampleGrid grid(plan.resolution);
    plan.assignment = parse_assignment(n["assignment"], ids, grid);
    const Node robots = n["robots"];
    for (std::size_t r = 0; r < robots.size(); ++r) {
        RobotTrajectory rt;
        rt.xi = robots[r]["xi"].number();
        plan.transits.push_back(robots[r].has("platform_transits") ? robots[r]["platform_transits"].index() : 0);
        const Node knots = robots[r]["knots"];
        for (std::size_t k = 0; k < knots.size(); ++k) {
            const Node kn = knots[k];
            Knot knot;
            knot.t = kn["t"].number();
            knot.q = parse_config(kn["platform"], kn["arm"]);
            if (!kn["grasp"].json().is_null()) knot.grasp = grasp_index(kn["grasp"], ids);
            try {
                knot.event = knot_event_from_string(kn["event"].string());
            } catch (const InputError& e) {
                kn["event"].fail(e.what());
            }
            rt.knots.push_back(knot);
        }
        plan.robots.push_back(std::move(rt));
    }
    const Node events = n["events"];
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Node e = events[i];
        plan.events.push_back({e["step"].index(), e["length"].index(),
                               {e["robot"].index(), e["sample"].index(), e["t"].number(), grasp_index(e["from"], ids),
                                grasp_index(e["to"], ids)}});
    }
    return plan;
}

inline Json trace_json(const ExecutionTrace& tr) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = "trace";
    j["robots"] = tr.robots;
    j["disturbance"] = {{"sigma_p", tr.disturbance.sigma_p}, {"sigma_m", tr.disturbance.sigma_m},
                        {"seed", tr.disturbance.seed}};
    j["summary"] = {{"steps", tr.steps.size()},
                    {"faults", tr.fault_count()},
                    {"max_residual", Json::array({tr.max_residual_pos(), tr.max_residual_rot()})},
                    {"mean_residual", Json::array({tr.mean_residual_pos(), tr.mean_residual_rot()})}};
    Json steps = Json::array();
    for (const auto& s : tr.steps) {
        Json sj;
        sj["step"] = s.step;
        sj["t"] = s.t;
        sj["reference"] = s.reference;
        Json act = Json::array();
        for (std::size_t r = 0; r < s.actual.size(); ++r)
            act.push_back({{"platform", to_json(s.actual[r].platform)},
                           {"arm", to_json(s.actual[r].arm)},
                           {"fault", static_cast<bool>(s.fault[r])},
                           {"platform_corrected", static_cast<bool>(s.platform_corrected[r])}});
        sj["actual"] = act;
        sj["object"] = {{"translation", to_json(s.object.translation)}, {"rpy_deg", to_json(Vec3(
                            rpy_from_rotation(s.object.rotation) * (180.0 / kPi)))}};
        Json res = Json::array();
        for (const auto& r : s.residuals) res.push_back(Json::array({r.a, r.b, r.translational, r.rotational}));
        sj["residuals"] = res;
        steps.push_back(sj);
    }
    j["steps"] = steps;
    j["log"] = tr.disturbance_log;
    return j;
}

/// Summary without per-step records.
inline Json trace_summary_json(const ExecutionTrace& tr) {
    Json j = trace_json(tr);
    j.erase("steps");
    j["kind"] = "trace_summary";
    return j;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string plan_csv(const Json& plan) {
    const Node n(plan, "plan");
    std::ostringstream os;
    os << "robot,t,x,y,theta,j1,j2,j3,j4,j5,j6,grasp_id,event\n";
    const Node robots = n["robots"];
    for (std::size_t r = 0; r < robots.size(); ++r) {
        const Node knots = robots[r]["knots"];
        for (std::size_t k = 0; k < knots.size(); ++k) {
            const Node kn = knots[k];
            os << r << "," << csv_number(kn["t"].number());
            for (double v : kn["platform"].numbers(3)) os << "," << csv_number(v);
            for (double v : kn["arm"].numbers(kArmDof)) os << "," << csv_number(v);
            os << "," << (kn["grasp"].json().is_null() ? "" : kn["grasp"].string()) << "," << kn["event"].string()
               << "\n";
        }
    }
    return os.str();
}

inline std::string trace_csv(const Json& trace) {
    const Node n(trace, "trace");
    std::ostringstream os;
    os << "step,t,robot,x,y,theta,j1,j2,j3,j4,j5,j6,residual_m,residual_rad,fault\n";
    const Node steps = n["steps"];
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const Node st = steps[s];
        const Node act = st["actual"];
        const Node res = st["residuals"];
        for (std::size_t r = 0; r < act.size(); ++r) {
            double rp = 0.0, rr = 0.0;
            for (std::size_t k = 0; k < res.size(); ++k) {
                const auto row = res[k].numbers(4);
                if (static_cast<std::size_t>(row[0]) == r || static_cast<std::size_t>(row[1]) == r) {
                    rp = std::max(rp, row[2]);
                    rr = std::max(rr, row[3]);
                }
            }
            os << st["step"].index() << "," << csv_number(st["t"].number()) << "," << r;
            for (double v : act[r]["platform"].numbers(3)) os << "," << csv_number(v);
            for (double v : act[r]["arm"].numbers(kArmDof)) os << "," << csv_number(v);
            os << "," << csv_number(rp) << "," << csv_number(rr) << "," << (act[r]["fault"].boolean() ? 1 : 0) << "\n";
        }
    }
    return os.str();
}

}  // namespace flipplan
