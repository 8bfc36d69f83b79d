#include <catch2/catch_amalgamated.hpp>

#include <bitset>

#include "support.hpp"

using namespace flipplan;

namespace {

constexpr int kBits = 10000;
using Bitmap = std::vector<bool>;

// Pointwise membership on a 1e-4 lattice over [0, 1].
Bitmap rasterise(const ParamIntervalSet& s) {
    Bitmap b(kBits + 1, false);
    for (int i = 0; i <= kBits; ++i) b[i] = s.contains(static_cast<double>(i) / kBits);
    return b;
}

// Random family with endpoints on the lattice so rasterisation is exact.
ParamIntervalSet random_set(Rng& rng, double eps) {
    std::vector<Interval> parts;
    const int n = static_cast<int>(rng.uniform(0, 5));
    for (int k = 0; k < n; ++k) {
        int a = static_cast<int>(rng.uniform(0, kBits));
        int b = static_cast<int>(rng.uniform(0, kBits));
        if (a > b) std::swap(a, b);
        parts.push_back({static_cast<double>(a) / kBits, static_cast<double>(b) / kBits});
    }
    return {parts, eps};
}

}  // namespace

TEST_CASE("interval set construction merges and sorts") {
    const ParamIntervalSet u({{0.5, 1.0}, {0.0, 0.5}});
    REQUIRE(u.size() == 1);
    CHECK(u.intervals()[0] == Interval{0.0, 1.0});
    CHECK(u.covers());
    const ParamIntervalSet gap({{0.0, 0.3}, {0.30000000001, 0.8}});
    CHECK(gap.size() == 1);
    CHECK_THROWS_AS(ParamIntervalSet({{0.6, 0.4}}), InputError);
}

TEST_CASE("interval set algebra basics") {
    const ParamIntervalSet a({{0.0, 0.5}}), b({{0.5, 1.0}});
    CHECK(a.unite(b) == ParamIntervalSet::full());
    const ParamIntervalSet c({{0.0, 0.4}}), d({{0.6, 1.0}});
    CHECK(c.intersect(d).empty());
    CHECK_FALSE(c.unite(d).covers());
    const auto comp = c.unite(d).complement();
    REQUIRE(comp.size() == 1);
    CHECK(comp.intervals()[0] == Interval{0.4, 0.6});
    CHECK(ParamIntervalSet().complement() == ParamIntervalSet::full());
    CHECK(ParamIntervalSet::full().complement().empty());
    CHECK(a.measure() == Catch::Approx(0.5));
}

TEST_CASE("interval set operations agree with a bitmap oracle") {
    Rng rng(101);
    const double eps = 0.5 / kBits;  // below lattice spacing: no merging across a gap
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_set(rng, eps), b = random_set(rng, eps);
        const Bitmap ra = rasterise(a), rb = rasterise(b);
        const Bitmap ru = rasterise(a.unite(b)), ri = rasterise(a.intersect(b)), rc = rasterise(a.complement());
        bool all_a = true;
        for (int i = 0; i <= kBits; ++i) {
            REQUIRE(ru[i] == (ra[i] || rb[i]));
            REQUIRE(ri[i] == (ra[i] && rb[i]));
            // The complement is closed, so it shares boundary points with the set.
            if (!ra[i]) REQUIRE(rc[i]);
            if (rc[i] && ra[i]) {
                const bool boundary = (i > 0 && !ra[i - 1]) || (i < kBits && !ra[i + 1]) || i == 0 || i == kBits;
                REQUIRE(boundary);
            }
            all_a = all_a && ra[i];
        }
        CHECK(a.covers() == all_a);
        for (std::size_t k = 1; k < a.intervals().size(); ++k)
            CHECK(a.intervals()[k].lo - a.intervals()[k - 1].hi > eps);
    }
}

TEST_CASE("sample grid and masks") {
    const SampleGrid g(201);
    CHECK(g.t(0) == 0.0);
    CHECK(g.t(200) == 1.0);
    CHECK(g.t(100) == 0.5);
    CHECK(g.nearest(0.503) == 101);
    CHECK(g.merge_eps() == Catch::Approx(1.0 / 402));
    CHECK_THROWS_AS(SampleGrid(1), InputError);

    SampleMask m(201);
    for (std::size_t i = 20; i <= 60; ++i) m.set(i);
    for (std::size_t i = 100; i <= 200; ++i) m.set(i);
    const auto runs = m.runs();
    REQUIRE(runs.size() == 2);
    CHECK(runs[0] == std::pair<std::size_t, std::size_t>{20, 60});
    CHECK(runs[1] == std::pair<std::size_t, std::size_t>{100, 200});
    const auto set = m.to_intervals(g);
    REQUIRE(set.size() == 2);
    CHECK(set.intervals()[0] == Interval{0.1, 0.3});
    CHECK(SampleMask::from_intervals(set, g) == m);
    CHECK(m.count() == 41 + 101);
    CHECK_FALSE(m.all());
}
