#include <algorithm>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "predictslums/error.hpp"
#include "predictslums/ingest.hpp"
#include "predictslums/rng.hpp"
#include "predictslums/text.hpp"

using namespace psl;

TEST_CASE("point csv parsing") {
    const auto ps = parse_point_csv("x,y\n0,0\n3,4");
    REQUIRE(ps.size() == 2);
    CHECK(ps.points[1] == Point{3, 4});

    CHECK(parse_point_csv("0,0\n0,0").size() == 2);
    CHECK(parse_point_csv("\n1,2\n\n").size() == 1);

    try {
        parse_point_csv("a,b");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_point_csv("x,y\n1,2,3"), Error);
    CHECK_THROWS_AS(parse_point_csv("x,y\n1,nan"), Error);
}

TEST_CASE("point csv round trip is exact") {
    Rng rng(3);
    PointSet ps;
    for (int i = 0; i < 200; ++i) ps.points.push_back({rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6)});
    const auto back = parse_point_csv(format_point_csv(ps));
    CHECK(back.points == ps.points);
}

TEST_CASE("intersections from polylines") {
    SUBCASE("segments sharing an endpoint") {
        std::vector<Polyline> lines = {{{{0, 0}, {5, 5}}}, {{{5, 5}, {10, 0}}}};
        CHECK(extract_intersections(lines, 0.0).size() == 3);
    }
    SUBCASE("lone segment gives its endpoints") {
        std::vector<Polyline> lines = {{{{0, 0}, {10, 0}}}};
        CHECK(extract_intersections(lines, 0.0).size() == 2);
    }
    SUBCASE("near-coincident endpoints merge") {
        std::vector<Polyline> lines = {{{{0, 0}, {5, 5}}}, {{{5, 5.0005}, {10, 0}}}};
        const auto out = extract_intersections(lines, 0.001);
        CHECK(out.size() == 3);
    }
    SUBCASE("interior vertex shared by two lines is a node, unshared interior vertex is not") {
        std::vector<Polyline> lines = {{{{0, 0}, {5, 0}, {10, 0}}}, {{{5, -5}, {5, 0}, {5, 5}}}, {{{20, 0}, {25, 1}, {30, 0}}}};
        const auto out = extract_intersections(lines, 0.0);
        CHECK(out.size() == 7);
        CHECK(std::count(out.points.begin(), out.points.end(), Point{5, 0}) == 1);
        CHECK(std::count(out.points.begin(), out.points.end(), Point{25, 1}) == 0);
    }
}

TEST_CASE("snapping matches brute-force single-linkage clustering") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Polyline> lines;
        for (int i = 0; i < 60; ++i) {
            Point a{std::round(rng.uniform(0, 50)), std::round(rng.uniform(0, 50))};
            Point b{a.x + rng.uniform(-0.8, 0.8), a.y + rng.uniform(-0.8, 0.8)};
            lines.push_back({{a, {rng.uniform(100, 200), rng.uniform(100, 200)}}});
            lines.push_back({{b, {rng.uniform(300, 400), rng.uniform(300, 400)}}});
        }
        const double tol = 0.5;
        // oracle: union-find over all endpoints with the O(n^2) pair test
        std::vector<Point> ends;
        for (const auto& l : lines) {
            ends.push_back(l.vertices.front());
            ends.push_back(l.vertices.back());
        }
        std::vector<std::size_t> parent(ends.size());
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (std::size_t i = 0; i < ends.size(); ++i)
            for (std::size_t j = i + 1; j < ends.size(); ++j)
                if (squared_distance(ends[i], ends[j]) <= tol * tol) parent[find(i)] = find(j);
        std::size_t clusters = 0;
        for (std::size_t i = 0; i < ends.size(); ++i) clusters += find(i) == i;

        const auto out = extract_intersections(lines, tol);
        // merging may only combine clusters further, never split them
        CHECK(out.size() <= clusters);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = i + 1; j < out.size(); ++j) CHECK(squared_distance(out.points[i], out.points[j]) > tol * tol);
    }
}

TEST_CASE("polyline readers agree") {
    const std::string csv = "line_id,seq,x,y\n1,1,5,5\n1,0,0,0\n2,0,5,5\n2,1,10,0\n";
    const auto a = parse_polyline_csv(csv);
    REQUIRE(a.size() == 2);
    CHECK(a[0].vertices.front() == Point{0, 0});
    const std::string gj = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[5,5]]}},
      {"type":"Feature","properties":{},"geometry":{"type":"MultiLineString","coordinates":[[[5,5],[10,0]]]}}]})";
    const auto b = parse_polyline_geojson(gj);
    REQUIRE(b.size() == 2);
    CHECK(extract_intersections(a, 0.0).points.size() == extract_intersections(b, 0.0).points.size());
    CHECK_THROWS_AS(parse_polyline_geojson("{\"type\":\"Point\",\"coordinates\":[1,2]}"), Error);
    CHECK_THROWS_AS(parse_polyline_csv("1,0,0\n"), Error);
}

TEST_CASE("bounding rectangle") {
    PointSet ps{{{0, 0}, {3, 4}}};
    const Rect r = bounding_rect(ps);
    CHECK(r == Rect{0, 0, 3, 4});
    CHECK(r.area() == 12.0);

    const Rect one = bounding_rect(PointSet{{{2, 2}}});
    CHECK(one.area() == 0.0);
    CHECK(one.degenerate());

    CHECK_THROWS_AS(bounding_rect(PointSet{}), Error);

    Rng rng(5);
    PointSet u;
    for (int i = 0; i < 100; ++i) u.points.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    const Rect b = bounding_rect(u);
    double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
    for (const auto& p : u.points) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    CHECK(b == Rect{lo_x, lo_y, hi_x, hi_y});
    CHECK(b.area() <= 100.0);
}

TEST_CASE("degree-like coordinates are rejected unless forced") {
    const Rect deg{31.1, 29.9, 31.5, 30.2};
    CHECK(looks_like_degrees(deg));
    try {
        check_projected(deg, false);
        FAIL("expected data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
    }
    CHECK_NOTHROW(check_projected(deg, true));
    CHECK_NOTHROW(check_projected(Rect{300000, 3300000, 340000, 3340000}, false));
}

TEST_CASE("text helpers") {
    double v = 0;
    CHECK(text::parse_double(" 1.5 ", v));
    CHECK(text::parse_double("1.5", v));
    CHECK(v == 1.5);
    CHECK(text::parse_double("+2", v));
    CHECK(v == 2.0);
    CHECK_FALSE(text::parse_double("1.5x", v));
    CHECK(text::format_double(0.1) == "0.1");
    CHECK(text::format_double(100.0) == "100");
}
