#pragma once

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flipplan/io.hpp"

namespace flipplan {

namespace cli_detail {

struct PlanFlags {
    double xi = 0.05;
    std::size_t resolution = 201;
    std::uint64_t seed = 1;
    std::optional<double> margin;
    std::size_t max_alternatives = 16;
    bool clamp = false;
};

inline void add_plan_flags(CLI::App* cmd, PlanFlags& f, bool planning) {
    cmd->add_option("--resolution", f.resolution, "samples along the trajectory")->check(CLI::Range(2, 100000));
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--margin", f.margin, "collision clearance [m]")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--clamp-platforms", f.clamp, "freeze every platform at its initial pose");
    if (planning) {
        cmd->add_option("--xi", f.xi, "overlap between platform-transit segments (parameter units)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--max-alternatives", f.max_alternatives, "assignments to try before giving up")
            ->check(CLI::PositiveNumber);
    }
}

inline PlanOptions plan_options(const PlanFlags& f) {
    PlanOptions o;
    o.xi = f.xi;
    o.resolution = f.resolution;
    o.seed = f.seed;
    o.margin = f.margin;
    o.max_alternatives = f.max_alternatives;
    return o;
}

inline Problem load(const std::string& path, const PlanFlags& f) {
    Problem p = load_problem(path);
    if (f.clamp) clamp_platforms(p.scene);
    return p;
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") out << text;
    else write_text(path, text);
}

inline void print_coverage_table(std::ostream& os, const Problem& p, const std::vector<RobotCoverage>& cov) {
    for (const auto& c : cov) {
        os << "robot " << c.robot << " (" << p.scene.robots[c.robot].name << ")"
           << (c.covers_all() ? "  covered" : "  GAP") << "\n";
        for (const auto& g : c.grasps) {
            os << "  " << std::left << std::setw(12) << p.grasps[g.grasp].id << std::right;
            if (g.set.empty()) os << " -";
            for (const auto& iv : g.set.intervals()) os << " [" << iv.lo << ", " << iv.hi << "]";
            os << "\n";
        }
    }
}

inline void print_gaps(std::ostream& err, const CoverageGapError& e) {
    err << "infeasible: the object trajectory is not coverable\n";
    for (const auto& [robot, gaps] : e.gaps()) {
        err << "  robot " << robot << " gap:";
        for (const auto& iv : gaps.intervals()) err << " [" << iv.lo << ", " << iv.hi << "]";
        err << "\n";
    }
}

struct ScenarioOutcome {
    bool expectation_met = false;
    bool planned = false;
    std::size_t regrasps = 0;
    std::string detail;
};

inline ScenarioOutcome run_scenario(const ScenarioSpec& spec, const std::string& base_dir, const PlanFlags& flags) {
    std::filesystem::path scene = spec.scene_path;
    if (scene.is_relative()) scene = std::filesystem::path(base_dir) / scene;
    PlanFlags f = flags;
    f.clamp = f.clamp || !spec.platform_motion_allowed;
    Problem p = load(scene.string(), f);
    PlanContext ctx(p.scene, p.trajectory, p.grasps, plan_options(f));
    ScenarioOutcome out;
    try {
        const auto plan = global_plan(ctx);
        out.planned = true;
        out.regrasps = plan.regrasp_count();
        std::size_t transits = 0;
        for (auto t : plan.transits) transits += t;
        out.detail = std::to_string(out.regrasps) + " regrasps, " + std::to_string(transits) + " platform transits";
        const bool min_ok = !spec.min_regrasps || out.regrasps >= *spec.min_regrasps;
        out.expectation_met = out.regrasps <= spec.max_regrasps && min_ok;
        if (!spec.must_succeed) out.expectation_met = out.expectation_met || min_ok;
    } catch (const InfeasibleError& e) {
        out.detail = std::string("infeasible: ") + e.what();
        out.expectation_met = !spec.must_succeed;
    }
    return out;
}

}  // namespace cli_detail

/// Entry point shared by the executable and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Multi-robot object flipping planner"};
    app.require_subcommand(1);

    PlanFlags flags;
    std::string scene_path, input_path, plan_path, out_path, csv_path, format = "json";
    double sigma_p = 0.0, sigma_m = 0.0;
    std::uint64_t noise_seed = 0;
    std::vector<std::string> scenario_paths;

    auto* check = app.add_subcommand("check", "per-grasp coverage report for a scene");
    check->add_option("scene", scene_path, "scene file")->required();
    check->add_option("-o,--out", out_path, "coverage report (JSON)");
    add_plan_flags(check, flags, false);

    auto* assign = app.add_subcommand("assign", "minimum-regrasp assignment from a coverage report");
    assign->add_option("coverage", input_path, "coverage report")->required();
    assign->add_option("-o,--out", out_path, "assignment (JSON)");

    auto* plan = app.add_subcommand("plan", "plan configuration trajectories for every robot");
    plan->add_option("scene", scene_path, "scene file")->required();
    plan->add_option("-o,--out", out_path, "plan (JSON)");
    add_plan_flags(plan, flags, true);

    auto* sim = app.add_subcommand("simulate", "leader-follower playback of a plan");
    sim->add_option("scene", scene_path, "scene file")->required();
    sim->add_option("plan", plan_path, "plan file")->required();
    sim->add_option("-o,--out", out_path, "trace (JSON)");
    sim->add_option("--csv", csv_path, "trace (CSV)");
    sim->add_option("--sigma-p", sigma_p, "leader platform noise half-width [m]")->check(CLI::NonNegativeNumber);
    sim->add_option("--sigma-m", sigma_m, "leader heading/joint noise half-width [rad]")->check(CLI::NonNegativeNumber);
    sim->add_option("--seed", noise_seed, "noise seed");
    sim->add_flag("--clamp-platforms", flags.clamp, "freeze every platform at its initial pose");

    auto* exp = app.add_subcommand("export", "convert a plan or trace file");
    exp->add_option("input", input_path, "plan or trace file")->required();
    exp->add_option("--format", format, "json or csv");
    exp->add_option("-o,--out", out_path, "output file");

    auto* scen = app.add_subcommand("scenario", "run scenario fixtures and compare with their expectations");
    scen->add_option("specs", scenario_paths, "scenario files")->required();
    add_plan_flags(scen, flags, true);

    std::vector<const char*> argv{"flipplan"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*check) {
            Problem p = load(scene_path, flags);
            PlanContext ctx(p.scene, p.trajectory, p.grasps, plan_options(flags));
            const auto cov = coverage_all(ctx);
            const std::string text = dump_json(coverage_json(p, cov, ctx.coverage_options()));
            if (out_path.empty()) {
                print_coverage_table(err, p, cov);
                out << text;
            } else {
                print_coverage_table(out, p, cov);
                write_text(out_path, text);
            }
            for (const auto& c : cov)
                if (!c.covers_all()) return 2;
            return 0;
        }
        if (*assign) {
            const auto in = parse_coverage(read_json(input_path), input_path);
            AllocateOptions ao;
            ao.leader = in.leader;
            for (std::size_t r = 0; r < in.masks.size(); ++r) {
                bool covered = false;
                if (!in.masks[r].empty()) {
                    SampleMask u(in.grid.size());
                    for (const auto& m : in.masks[r]) u |= m;
                    covered = u.all();
                }
                if (!covered) {
                    err << "infeasible: robot " << r << " cannot cover the trajectory with any grasp sequence\n";
                    return 2;
                }
            }
            AssignmentSearch search(in.masks, in.grid, ao);
            auto a = search.next();
            if (!a) {
                err << "infeasible: no assignment keeps grasps distinct across robots\n";
                return 2;
            }
            Json j = assignment_json(*a, in.grasp_ids, in.grid);
            j["format_version"] = kFormatVersion;
            j["kind"] = "assignment";
            j["alternatives"] = search.size();
            emit(dump_json(j), out_path, out);
            return 0;
        }
        if (*plan) {
            Problem p = load(scene_path, flags);
            PlanContext ctx(p.scene, p.trajectory, p.grasps, plan_options(flags));
            PlanReport report;
            try {
                const auto result = global_plan(ctx, &report);
                emit(dump_json(plan_json(p, result, &report)), out_path, out);
                err << "plan: " << result.regrasp_count() << " regrasps, assignment rank " << result.assignment.rank
                    << "\n";
                return 0;
            } catch (const CoverageGapError& e) {
                print_gaps(err, e);
                return 2;
            } catch (const PlanningFailure& e) {
                err << "infeasible: " << e.what() << "\n";
                for (const auto& a : e.attempts())
                    err << "  assignment " << a.rank << " (" << a.regrasps << " regrasps): " << a.failure << "\n";
                return 2;
            }
        }
        if (*sim) {
            Problem p = load(scene_path, flags);
            const auto pl = parse_plan(read_json(plan_path), p.grasps, plan_path);
            const auto trace = simulate(p.scene, p.grasps, pl, {sigma_p, sigma_m, noise_seed});
            if (!out_path.empty()) write_text(out_path, dump_json(trace_json(trace)));
            if (!csv_path.empty()) write_text(csv_path, trace_csv(trace_json(trace)));
            const std::string summary = dump_json(trace_summary_json(trace));
            if (out_path.empty() && csv_path.empty()) out << summary;
            else err << summary;
            return 0;
        }
        if (*exp) {
            const Json j = read_json(input_path);
            const std::string kind = Node(j, input_path)["kind"].string();
            std::string text;
            if (format == "json") text = dump_json(j);
            else if (format == "csv" && kind == "plan") text = plan_csv(j);
            else if (format == "csv" && kind == "trace") text = trace_csv(j);
            else if (format == "csv") throw InputError(input_path + ": csv export supports plan and trace files");
            else throw InputError("unknown format '" + format + "' (json or csv)");
            emit(text, out_path, out);
            return 0;
        }
        if (*scen) {
            bool all_met = true;
            for (const auto& path : scenario_paths) {
                const auto spec = parse_scenario(read_json(path), path);
                const auto start = std::chrono::steady_clock::now();
                const auto res = run_scenario(spec, std::filesystem::path(path).parent_path().string(), flags);
                const double secs =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                out << (res.expectation_met ? "PASS " : "FAIL ") << spec.name << ": " << res.detail << " ("
                    << std::fixed << std::setprecision(1) << secs << " s)\n"
                    << std::defaultfloat;
                all_met = all_met && res.expectation_met;
            }
            return all_met ? 0 : 2;
        }
    } catch (const CoverageGapError& e) {
        print_gaps(err, e);
        return 2;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace flipplan
