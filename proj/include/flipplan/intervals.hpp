#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flipplan/error.hpp"

namespace flipplan {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t, double eps = 0.0) const { return t >= lo - eps && t <= hi + eps; }
    bool operator==(const Interval&) const = default;
};

/// Sorted union of disjoint closed subintervals of [0, 1]. Intervals closer
/// than `merge_eps` are fused, so stored gaps are always wider than that.
class ParamIntervalSet {
public:
    static constexpr double kDefaultMergeEps = 1e-9;

    explicit ParamIntervalSet(double merge_eps = kDefaultMergeEps) : eps_(merge_eps) {}

    ParamIntervalSet(std::vector<Interval> parts, double merge_eps = kDefaultMergeEps) : eps_(merge_eps) {
        for (auto& p : parts) {
            if (!(p.lo <= p.hi)) throw InputError("interval requires lo <= hi");
            p.lo = std::clamp(p.lo, 0.0, 1.0);
            p.hi = std::clamp(p.hi, 0.0, 1.0);
        }
        std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) {
            return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
        });
        for (const auto& p : parts) {
            if (!items_.empty() && p.lo - items_.back().hi <= eps_) items_.back().hi = std::max(items_.back().hi, p.hi);
            else items_.push_back(p);
        }
    }

    static ParamIntervalSet full(double merge_eps = kDefaultMergeEps) { return {{{0.0, 1.0}}, merge_eps}; }

    const std::vector<Interval>& intervals() const { return items_; }
    double merge_eps() const { return eps_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    bool contains(double t) const {
        return std::any_of(items_.begin(), items_.end(), [&](const Interval& i) { return i.contains(t); });
    }

    double measure() const {
        double m = 0.0;
        for (const auto& i : items_) m += i.hi - i.lo;
        return m;
    }

    ParamIntervalSet unite(const ParamIntervalSet& o) const {
        std::vector<Interval> all = items_;
        all.insert(all.end(), o.items_.begin(), o.items_.end());
        return {std::move(all), std::max(eps_, o.eps_)};
    }

    ParamIntervalSet intersect(const ParamIntervalSet& o) const {
        std::vector<Interval> out;
        std::size_t i = 0, j = 0;
        while (i < items_.size() && j < o.items_.size()) {
            const double lo = std::max(items_[i].lo, o.items_[j].lo);
            const double hi = std::min(items_[i].hi, o.items_[j].hi);
            if (lo <= hi) out.push_back({lo, hi});
            if (items_[i].hi < o.items_[j].hi) ++i;
            else ++j;
        }
        return {std::move(out), std::max(eps_, o.eps_)};
    }

    /// Closure of [0,1] minus this set.
    ParamIntervalSet complement() const {
        std::vector<Interval> out;
        double cursor = 0.0;
        for (const auto& i : items_) {
            if (i.lo > cursor) out.push_back({cursor, i.lo});
            cursor = std::max(cursor, i.hi);
        }
        if (items_.empty()) out.push_back({0.0, 1.0});
        else if (cursor < 1.0) out.push_back({cursor, 1.0});
        return {std::move(out), eps_};
    }

    /// True when the set contains [lo, hi] entirely.
    bool covers(double lo = 0.0, double hi = 1.0) const {
        return std::any_of(items_.begin(), items_.end(),
                           [&](const Interval& i) { return i.lo <= lo + eps_ && i.hi >= hi - eps_; });
    }

    bool operator==(const ParamIntervalSet& o) const { return items_ == o.items_; }

private:
    double eps_;
    std::vector<Interval> items_;
};

/// Uniform sample grid t_i = i / (n - 1) over [0, 1].
class SampleGrid {
public:
    explicit SampleGrid(std::size_t n = 201) : n_(n) {
        if (n < 2) throw InputError("sample grid needs at least 2 samples");
    }

    std::size_t size() const { return n_; }
    double t(std::size_t i) const { return i == n_ - 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n_ - 1); }
    std::size_t nearest(double t) const {
        const double x = std::clamp(t, 0.0, 1.0) * static_cast<double>(n_ - 1);
        return static_cast<std::size_t>(std::llround(x));
    }
    double merge_eps() const { return 1.0 / (2.0 * static_cast<double>(n_)); }

private:
    std::size_t n_;
};

/// Fixed-length bitmap over a sample grid.
class SampleMask {
public:
    SampleMask() = default;
    explicit SampleMask(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    std::size_t size() const { return n_; }
    void set(std::size_t i, bool v = true) {
        if (v) words_[i / 64] |= (1ULL << (i % 64));
        else words_[i / 64] &= ~(1ULL << (i % 64));
    }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ULL; }

    SampleMask& operator|=(const SampleMask& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
        return *this;
    }
    SampleMask& operator&=(const SampleMask& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
        return *this;
    }
    friend SampleMask operator|(SampleMask a, const SampleMask& b) { return a |= b; }
    friend SampleMask operator&(SampleMask a, const SampleMask& b) { return a &= b; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    bool all() const { return count() == n_; }
    bool none() const { return count() == 0; }
    bool operator==(const SampleMask&) const = default;

    /// Maximal runs of set samples as [first, last] index pairs.
    std::vector<std::pair<std::size_t, std::size_t>> runs() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        std::size_t i = 0;
        while (i < n_) {
            if (!test(i)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < n_ && test(j + 1)) ++j;
            out.emplace_back(i, j);
            i = j + 1;
        }
        return out;
    }

    ParamIntervalSet to_intervals(const SampleGrid& grid) const {
        std::vector<Interval> parts;
        for (auto [a, b] : runs()) parts.push_back({grid.t(a), grid.t(b)});
        return {std::move(parts), grid.merge_eps()};
    }

    static SampleMask from_intervals(const ParamIntervalSet& set, const SampleGrid& grid) {
        SampleMask m(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.t(i);
            for (const auto& iv : set.intervals())
                if (iv.contains(t, 1e-12)) {
                    m.set(i);
                    break;
                }
        }
        return m;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace flipplan
