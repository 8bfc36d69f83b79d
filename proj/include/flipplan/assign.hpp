#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "flipplan/intervals.hpp"

namespace flipplan {

struct MinCoverResult {
    std::vector<std::vector<std::size_t>> covers;  // sorted by (size, lexicographic)
    std::size_t min_size = 0;
    bool optimal = true;
};

/// Minimum set cover of the sample grid by the given per-grasp masks.
/// Exhaustive (all irredundant covers) up to `max_exact` sets, greedy above.
inline MinCoverResult min_cover(const std::vector<SampleMask>& sets, std::size_t max_exact = 20) {
    if (sets.empty()) throw InputError("min_cover: at least one grasp required");
    const std::size_t n = sets.front().size();
    SampleMask all(n);
    for (const auto& s : sets) all |= s;
    if (!all.all()) throw InfeasibleError("min_cover: the union of all grasp segments does not cover [0,1]");

    const std::size_t m = sets.size();
    MinCoverResult out;
    if (m > max_exact) {
        out.optimal = false;
        SampleMask covered(n);
        std::vector<std::size_t> chosen;
        while (!covered.all()) {
            std::size_t best = 0, gain = 0;
            for (std::size_t j = 0; j < m; ++j) {
                SampleMask fresh = sets[j];
                std::size_t before = (fresh & covered).count();
                std::size_t g = fresh.count() - before;
                if (g > gain) {
                    gain = g;
                    best = j;
                }
            }
            chosen.push_back(best);
            covered |= sets[best];
        }
        std::sort(chosen.begin(), chosen.end());
        out.min_size = chosen.size();
        out.covers.push_back(std::move(chosen));
        return out;
    }

    const std::uint32_t full = (1u << m);
    const std::size_t words = (n + 63) / 64;
    std::vector<std::vector<std::uint64_t>> set_words(m, std::vector<std::uint64_t>(words, 0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (sets[j].test(i)) set_words[j][i / 64] |= 1ULL << (i % 64);
    std::vector<std::uint64_t> full_words(words, ~0ULL);
    if (n % 64) full_words.back() = (1ULL << (n % 64)) - 1;

    std::vector<std::uint8_t> covering(full, 0);
    std::vector<std::uint64_t> unions(static_cast<std::size_t>(full) * words, 0);
    for (std::uint32_t s = 1; s < full; ++s) {
        const auto low = static_cast<std::size_t>(std::countr_zero(s));
        const std::uint64_t* prev = &unions[static_cast<std::size_t>(s & (s - 1)) * words];
        std::uint64_t* cur = &unions[static_cast<std::size_t>(s) * words];
        bool all = true;
        for (std::size_t w = 0; w < words; ++w) {
            cur[w] = prev[w] | set_words[low][w];
            all = all && cur[w] == full_words[w];
        }
        covering[s] = all ? 1 : 0;
    }
    for (std::uint32_t s = 1; s < full; ++s) {
        if (!covering[s]) continue;
        bool irredundant = true;
        for (std::uint32_t b = s; b; b &= b - 1) {
            if (covering[s & ~(b & -b)]) {
                irredundant = false;
                break;
            }
        }
        if (!irredundant) continue;
        std::vector<std::size_t> ids;
        for (std::uint32_t b = s; b; b &= b - 1) ids.push_back(static_cast<std::size_t>(std::countr_zero(b)));
        out.covers.push_back(std::move(ids));
    }
    std::sort(out.covers.begin(), out.covers.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    out.min_size = out.covers.front().size();
    return out;
}

inline MinCoverResult min_cover(const std::vector<ParamIntervalSet>& sets, const SampleGrid& grid,
                                std::size_t max_exact = 20) {
    std::vector<SampleMask> masks;
    for (const auto& s : sets) masks.push_back(SampleMask::from_intervals(s, grid));
    return min_cover(masks, max_exact);
}

/// One grasp held over a contiguous feasible run of samples.
struct Segment {
    std::size_t grasp = 0;
    std::size_t first = 0, last = 0;              // feasible run, sample indices
    std::size_t active_first = 0, active_last = 0;  // portion actually held
};

struct CoverScheme {
    std::size_t owner = 0;
    std::vector<Segment> segments;

    std::size_t regrasps() const { return segments.empty() ? 0 : segments.size() - 1; }
};

struct RegraspEvent {
    std::size_t robot = 0;
    std::size_t sample = 0;  // handover sample index
    double t = 0.0;
    std::size_t from = 0, to = 0;
};

struct Assignment {
    std::vector<CoverScheme> schemes;
    std::vector<RegraspEvent> regrasp_events;
    std::size_t rank = 0;  // position in the search order
    bool optimal = true;   // exhaustive search (not truncated)

    std::size_t total_segments() const {
        std::size_t s = 0;
        for (const auto& sc : schemes) s += sc.segments.size();
        return s;
    }
    std::size_t regrasp_count() const {
        std::size_t s = 0;
        for (const auto& sc : schemes) s += sc.regrasps();
        return s;
    }
};

struct AllocateOptions {
    std::optional<std::size_t> leader;     // tie-break: fewer regrasps for this robot
    std::size_t extra_segments = 2;        // schemes up to (shortest + extra) segments
    std::size_t max_schemes_per_robot = 48;
};

/// Active grasp ids per sample must be pairwise distinct across robots.
inline bool schemes_compatible(const CoverScheme& a, const CoverScheme& b) {
    for (const auto& sa : a.segments)
        for (const auto& sb : b.segments) {
            if (sa.grasp != sb.grasp) continue;
            if (std::max(sa.active_first, sb.active_first) <= std::min(sa.active_last, sb.active_last)) return false;
        }
    return true;
}

namespace detail {

struct Run {
    std::size_t grasp, first, last;
};

inline std::vector<Run> collect_runs(const std::vector<SampleMask>& masks) {
    std::vector<Run> runs;
    for (std::size_t g = 0; g < masks.size(); ++g)
        for (auto [a, b] : masks[g].runs()) runs.push_back({g, a, b});
    return runs;
}

/// Fewest runs chaining [0, n-1] with at least one shared sample per handover.
inline std::optional<std::size_t> shortest_chain(const std::vector<Run>& runs, std::size_t n) {
    std::size_t reach = 0, count = 0;
    bool started = false;
    for (const auto& r : runs)
        if (r.first == 0) {
            reach = std::max(reach, r.last);
            started = true;
        }
    if (!started) return std::nullopt;
    count = 1;
    while (reach < n - 1) {
        std::size_t best = reach;
        for (const auto& r : runs)
            if (r.first <= reach && r.last > best) best = r.last;
        if (best == reach) return std::nullopt;
        reach = best;
        ++count;
    }
    return count;
}

inline void chain_dfs(const std::vector<Run>& runs, std::size_t n, std::size_t max_len, std::vector<std::size_t>& chain,
                      std::vector<std::vector<std::size_t>>& out) {
    const Run& cur = runs[chain.back()];
    if (cur.last == n - 1) {
        out.push_back(chain);
        return;
    }
    if (chain.size() >= max_len) return;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Run& next = runs[k];
        if (next.first > cur.last || next.last <= cur.last || next.first <= cur.first) continue;
        if (chain.size() >= 2 && next.first <= runs[chain[chain.size() - 2]].last) continue;
        chain.push_back(k);
        chain_dfs(runs, n, max_len, chain, out);
        chain.pop_back();
    }
}

inline CoverScheme make_scheme(std::size_t owner, const std::vector<Run>& runs, const std::vector<std::size_t>& chain,
                               std::size_t n) {
    CoverScheme s;
    s.owner = owner;
    std::size_t start = 0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const Run& r = runs[chain[k]];
        std::size_t end = n - 1;
        if (k + 1 < chain.size()) {
            const Run& nx = runs[chain[k + 1]];
            end = (nx.first + r.last) / 2;  // middle of the shared run
        }
        s.segments.push_back({r.grasp, r.first, r.last, start, end});
        start = end;
    }
    return s;
}

inline auto scheme_key(const CoverScheme& s) {
    std::vector<std::size_t> ids, firsts;
    for (const auto& seg : s.segments) {
        ids.push_back(seg.grasp);
        firsts.push_back(seg.first);
    }
    return std::make_tuple(s.segments.size(), ids, firsts);
}

}  // namespace detail

/// Candidate cover schemes for one robot, shortest first.
inline std::vector<CoverScheme> robot_schemes(std::size_t owner, const std::vector<SampleMask>& masks,
                                              const AllocateOptions& opts = {}) {
    if (masks.empty()) return {};
    const std::size_t n = masks.front().size();
    const auto runs = detail::collect_runs(masks);
    const auto shortest = detail::shortest_chain(runs, n);
    if (!shortest) return {};
    std::vector<std::vector<std::size_t>> chains;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        if (runs[k].first != 0) continue;
        std::vector<std::size_t> chain{k};
        detail::chain_dfs(runs, n, *shortest + opts.extra_segments, chain, chains);
    }
    std::vector<CoverScheme> schemes;
    for (const auto& c : chains) schemes.push_back(detail::make_scheme(owner, runs, c, n));
    std::sort(schemes.begin(), schemes.end(),
              [](const CoverScheme& a, const CoverScheme& b) { return detail::scheme_key(a) < detail::scheme_key(b); });
    if (schemes.size() > opts.max_schemes_per_robot) schemes.resize(opts.max_schemes_per_robot);
    return schemes;
}

/// Enumerates Eq.-9-consistent assignments in a fixed total order: total
/// segment count, then leader segment count, then grasp ids robot by robot.
class AssignmentSearch {
public:
    /// `masks[r][g]`: feasible samples of grasp g for robot r.
    AssignmentSearch(const std::vector<std::vector<SampleMask>>& masks, const SampleGrid& grid,
                     const AllocateOptions& opts = {})
        : grid_(grid), opts_(opts) {
        if (masks.empty()) throw InputError("allocate: at least one robot required");
        std::vector<std::vector<CoverScheme>> per_robot;
        for (std::size_t r = 0; r < masks.size(); ++r) {
            per_robot.push_back(robot_schemes(r, masks[r], opts));
            if (per_robot.back().size() >= opts.max_schemes_per_robot) truncated_ = true;
            if (per_robot.back().empty()) return;
        }
        std::vector<std::size_t> pick;
        enumerate(per_robot, pick);
        std::sort(combos_.begin(), combos_.end(), [&](const Combo& a, const Combo& b) { return a.key < b.key; });
    }

    std::size_t size() const { return combos_.size(); }
    std::size_t attempted() const { return cursor_; }

    /// Next assignment in the order, never repeating one already returned.
    std::optional<Assignment> next() {
        if (cursor_ >= combos_.size()) return std::nullopt;
        Assignment a = build(combos_[cursor_].schemes);
        a.rank = cursor_++;
        a.optimal = !truncated_;
        return a;
    }

    /// Every assignment in order (oracle/diagnostics use).
    std::vector<Assignment> all() const {
        std::vector<Assignment> out;
        for (std::size_t i = 0; i < combos_.size(); ++i) {
            out.push_back(build(combos_[i].schemes));
            out.back().rank = i;
        }
        return out;
    }

private:
    using Key = std::tuple<std::size_t, std::size_t, std::vector<std::vector<std::size_t>>, std::vector<std::vector<std::size_t>>>;
    struct Combo {
        std::vector<CoverScheme> schemes;
        Key key;
    };

    void enumerate(const std::vector<std::vector<CoverScheme>>& per_robot, std::vector<std::size_t>& pick) {
        const std::size_t r = pick.size();
        if (r == per_robot.size()) {
            Combo c;
            std::size_t total = 0;
            std::vector<std::vector<std::size_t>> ids, firsts;
            for (std::size_t i = 0; i < r; ++i) {
                const CoverScheme& s = per_robot[i][pick[i]];
                c.schemes.push_back(s);
                total += s.segments.size();
                auto [len, gid, fst] = detail::scheme_key(s);
                ids.push_back(gid);
                firsts.push_back(fst);
            }
            const std::size_t lead = opts_.leader && *opts_.leader < r ? c.schemes[*opts_.leader].segments.size() : 0;
            c.key = Key{total, lead, ids, firsts};
            combos_.push_back(std::move(c));
            return;
        }
        for (std::size_t k = 0; k < per_robot[r].size(); ++k) {
            bool ok = true;
            for (std::size_t i = 0; i < r && ok; ++i) ok = schemes_compatible(per_robot[i][pick[i]], per_robot[r][k]);
            if (!ok) continue;
            pick.push_back(k);
            enumerate(per_robot, pick);
            pick.pop_back();
        }
    }

    Assignment build(const std::vector<CoverScheme>& schemes) const {
        Assignment a;
        a.schemes = schemes;
        for (const auto& s : schemes)
            for (std::size_t k = 0; k + 1 < s.segments.size(); ++k) {
                const std::size_t h = s.segments[k].active_last;
                a.regrasp_events.push_back({s.owner, h, grid_.t(h), s.segments[k].grasp, s.segments[k + 1].grasp});
            }
        std::sort(a.regrasp_events.begin(), a.regrasp_events.end(), [](const RegraspEvent& x, const RegraspEvent& y) {
            return std::tie(x.sample, x.robot) < std::tie(y.sample, y.robot);
        });
        return a;
    }

    SampleGrid grid_;
    AllocateOptions opts_;
    std::vector<Combo> combos_;
    std::size_t cursor_ = 0;
    bool truncated_ = false;
};

/// First assignment of the search order; throws when none is consistent.
inline Assignment allocate(const std::vector<std::vector<SampleMask>>& masks, const SampleGrid& grid,
                           const AllocateOptions& opts = {}) {
    AssignmentSearch search(masks, grid, opts);
    auto a = search.next();
    if (!a) throw InfeasibleError("allocate: no assignment keeps grasps distinct across robots");
    return *a;
}

}  // namespace flipplan
