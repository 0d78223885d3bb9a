#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "lineportrait/vectorize.hpp"
#include "support/oracles.hpp"

using namespace lineportrait;

namespace {

std::multiset<std::pair<double, double>> point_set(const std::vector<Path>& paths)
{
    std::multiset<std::pair<double, double>> s;
    for (const auto& p : paths)
        for (const auto& v : p.points)
            s.insert({v.x, v.y});
    return s;
}

}  // namespace

TEST_CASE("extract_points")
{
    CHECK(extract_points(EdgeMap(4, 4)).empty());

    EdgeMap e(5, 4);
    e.set(1, 0, true);
    e.set(4, 2, true);
    e.set(0, 3, true);
    const auto pts = extract_points(e);
    REQUIRE(pts.size() == 3);
    const std::set<std::pair<int, int>> got{{pts[0].x, pts[0].y}, {pts[1].x, pts[1].y}, {pts[2].x, pts[2].y}};
    CHECK(got == std::set<std::pair<int, int>>{{1, 0}, {4, 2}, {0, 3}});

    EdgeMap full(2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            full.set(x, y, true);
    CHECK(extract_points(full).size() == 4);
}

TEST_CASE("three collinear points trace into one path")
{
    const std::vector<PixelPoint> pts{{0, 0}, {1, 0}, {2, 0}};
    const auto r = trace_paths(pts, TraceConfig{1.5, 0.0, 1});
    REQUIRE(r.paths.size() == 1);
    REQUIRE(r.paths[0].size() == 3);
    auto xs = r.paths[0].points;
    if (xs.front().x > xs.back().x)
        std::reverse(xs.begin(), xs.end());
    CHECK(xs[0] == Vec2{0, 0});
    CHECK(xs[1] == Vec2{1, 0});
    CHECK(xs[2] == Vec2{2, 0});
    CHECK(r.discarded_singletons == 0);
}

TEST_CASE("clusters beyond d stay separate and singletons are discarded")
{
    std::vector<PixelPoint> pts{{0, 0}, {1, 0}, {1, 1}, {11, 0}, {12, 0}, {12, 1}};
    const auto r = trace_paths(pts, TraceConfig{1.5, 0.0, 4});
    CHECK(r.paths.size() == 2);

    const std::vector<PixelPoint> one{{5, 5}};
    const auto s = trace_paths(one, TraceConfig{2.0, 0.0, 4});
    CHECK(s.paths.empty());
    CHECK(s.discarded_singletons == 1);
    CHECK(trace_paths(std::vector<PixelPoint>{}, TraceConfig{}).paths.empty());
}

TEST_CASE("spatial grid nearest equals brute force with removals")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto edges = oracle::random_edge_map(rng, 120, 90, 50 + rng() % 2000);
        const auto pts = extract_points(edges);
        const double d = 1.0 + (rng() % 40) / 10.0;
        SpatialGrid grid(pts, d);
        std::vector<bool> alive(pts.size(), true);
        std::uniform_real_distribution<double> ux(-5, 125), uy(-5, 95);
        for (int q = 0; q < 300; ++q) {
            const Vec2 query{ux(rng), uy(rng)};
            for (const double maxd : {d, 3 * d, std::numeric_limits<double>::infinity()}) {
                const auto got = grid.nearest(query, maxd);
                const auto want = oracle::nearest(pts, alive, query, maxd);
                REQUIRE(got.has_value() == want.has_value());
                if (got)
                    CHECK(*got == *want);
            }
            const std::size_t kill = rng() % pts.size();
            if (alive[kill]) {
                grid.remove(kill);
                alive[kill] = false;
            }
        }
        CHECK(grid.live_count() == static_cast<std::size_t>(std::count(alive.begin(), alive.end(), true)));
    }
}

TEST_CASE("nearest tie goes to the lowest (y, x)")
{
    const std::vector<PixelPoint> pts{{2, 1}, {0, 1}, {1, 0}, {1, 2}};
    SpatialGrid grid(pts, 2.0);
    const auto got = grid.nearest({1.0, 1.0});
    REQUIRE(got);
    CHECK(pts[*got] == PixelPoint{1, 0});
    const std::vector<bool> alive(4, true);
    CHECK(nearest_linear_scan(pts, alive, {1.0, 1.0}) == got);
}

TEST_CASE("trace partition, distance and determinism on random maps")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 15; ++trial) {
        const auto pts = extract_points(oracle::random_edge_map(rng, 160, 120, 1 + rng() % 3000));
        const TraceConfig cfg{2.0, 0.0, rng()};
        const auto r = trace_paths(pts, cfg);
        std::size_t total = r.discarded_singletons;
        for (const auto& p : r.paths) {
            CHECK(p.size() >= 2);
            total += p.size();
            for (std::size_t i = 0; i + 1 < p.size(); ++i)
                CHECK(oracle::dist(p.points[i], p.points[i + 1]) < cfg.d);
        }
        CHECK(total == pts.size());

        // Every input pixel appears exactly once, either in a path or as a singleton.
        const auto used = point_set(r.paths);
        CHECK(used.size() + r.discarded_singletons == pts.size());
        for (const auto& p : pts)
            CHECK(used.count({p.x, p.y}) <= 1);

        const auto again = trace_paths(pts, cfg);
        CHECK(again.paths == r.paths);
    }
}

TEST_CASE("simplify examples")
{
    Path line;
    for (int i = 0; i < 10; ++i)
        line.points.push_back({double(i), 2.0 * i});
    const auto s = simplify(line, 0.5);
    REQUIRE(s.size() == 2);
    CHECK(s.points.front() == line.points.front());
    CHECK(s.points.back() == line.points.back());

    const Path corner{{{0, 0}, {4, 0}, {4, 4}}};
    CHECK(simplify(corner, 0.1).size() == 3);

    const Path with_collinear{{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 3}, {5, 7}}};
    const auto z = simplify(with_collinear, 0.0);
    CHECK(z.points == std::vector<Vec2>{{0, 0}, {2, 0}, {2, 3}, {5, 7}});
    CHECK(simplify(Path{{{1, 1}}}, 1.0).size() == 1);
}

TEST_CASE("simplify soundness against the brute-force deviation oracle")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = oracle::random_path(rng, 2 + static_cast<int>(rng() % 200));
        const double tol = (rng() % 400) / 100.0;
        const auto s = simplify(p, tol);
        CHECK(s.points.front() == p.points.front());
        CHECK(s.points.back() == p.points.back());
        CHECK(oracle::max_deviation(p, s) <= tol + 1e-9);
        // Output is a subsequence of the input.
        std::size_t j = 0;
        for (const auto& v : p.points)
            if (j < s.size() && v == s.points[j])
                ++j;
        CHECK(j == s.size());
    }
}

TEST_CASE("paths json round trip")
{
    PathsDocument doc;
    doc.paths = {Path{{{0, 0}, {1.5, 2.25}}}, Path{{{3, 4}, {5, 6}, {7, 8}}}};
    doc.image_width = 64;
    doc.image_height = 48;
    doc.config = TraceConfig{2.5, 0.5, 99};
    const auto back = paths_from_json(to_json(doc));
    CHECK(back.paths == doc.paths);
    CHECK(back.image_width == 64);
    CHECK(back.image_height == 48);
    CHECK(back.config.d == 2.5);
    CHECK(back.config.rng_seed == 99);
}
