#include <algorithm>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "predictslums/error.hpp"
#include "predictslums/hotspot.hpp"
#include "predictslums/rng.hpp"

using namespace psl;

namespace {

std::vector<std::uint32_t> random_counts(std::size_t n, std::uint32_t hi, Rng& rng) {
    std::vector<std::uint32_t> c(n);
    for (auto& v : c) v = static_cast<std::uint32_t>(rng.below(hi + 1));
    return c;
}

}  // namespace

TEST_CASE("grid aggregation") {
    SUBCASE("single point") {
        const auto g = aggregate_to_grid(PointSet{{{50, 50}}}, {0, 0, 100, 100}, 100);
        REQUIRE(g.size() == 1);
        CHECK(g.cells[0].count == 1);
    }
    SUBCASE("corners of the frame land in the corner cells") {
        const auto g = aggregate_to_grid(PointSet{{{0, 0}, {200, 0}, {0, 200}, {200, 200}}}, {0, 0, 200, 200}, 100);
        REQUIRE(g.n_cols == 2);
        REQUIRE(g.n_rows == 2);
        for (const auto& c : g.cells) CHECK(c.count == 1);
    }
    SUBCASE("outside points are rejected") {
        CHECK_THROWS_AS(aggregate_to_grid(PointSet{{{300, 0}}}, {0, 0, 200, 200}, 100), Error);
    }
    SUBCASE("binning matches brute force") {
        Rng rng(8);
        PointSet ps;
        for (int i = 0; i < 10000; ++i) ps.points.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000)});
        const auto g = aggregate_to_grid(ps, {0, 0, 1000, 1000}, 100);
        REQUIRE(g.size() == 100);
        std::vector<std::uint32_t> expect(100, 0);
        for (const auto& p : ps.points) {
            const auto c = std::min<std::size_t>(9, static_cast<std::size_t>(p.x / 100));
            const auto r = std::min<std::size_t>(9, static_cast<std::size_t>(p.y / 100));
            ++expect[r * 10 + c];
        }
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < 100; ++i) {
            CHECK(g.cells[i].count == expect[i]);
            total += g.cells[i].count;
        }
        CHECK(total == 10000);
    }
}

TEST_CASE("band neighbour counts") {
    auto g = aggregate_to_grid(PointSet{{{0, 0}}}, {0, 0, 500, 500}, 100);
    count_neighbors(PointSet{}, g, 344);
    for (const auto& c : g.cells) CHECK(*c.nneighbors == 0);

    // a point exactly at band distance from the (50,50) centroid counts
    count_neighbors(PointSet{{{50, 394}}}, g, 344);
    CHECK(*g.at(0, 0).nneighbors == 1);

    Rng rng(12);
    PointSet ps;
    for (int i = 0; i < 500; ++i) ps.points.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
    count_neighbors(ps, g, 144);
    const auto expect = oracle::radius_counts(ps.points, g, 144);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(*g.cells[i].nneighbors == expect[i]);
}

TEST_CASE("Gi* degenerate and hand cases") {
    auto flat = oracle::lattice(4, 4, 100, std::vector<std::uint32_t>(16, 5));
    gi_star(flat, 150);
    for (const auto& c : flat.cells) {
        CHECK(*c.gi_z == 0.0);
        CHECK(*c.p_value == 1.0);
    }

    std::vector<std::uint32_t> counts(25, 0);
    counts[12] = 100;
    auto g = oracle::lattice(5, 5, 100, counts);
    gi_star(g, 100);
    const double center = *g.at(2, 2).gi_z;
    CHECK(center > 0);
    for (const auto& c : g.cells) CHECK(*c.gi_z <= center);
    CHECK(*g.at(0, 0).gi_z < 0);
    CHECK(*g.at(4, 4).gi_z < 0);
}

TEST_CASE("Gi* matches direct evaluation") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t cols = 1 + rng.below(20), rows = 1 + rng.below(400 / cols);
        auto g = oracle::lattice(cols, rows, 100, random_counts(cols * rows, 30, rng));
        const double band = rng.uniform(50, 500);
        gi_star(g, band);
        const auto z = oracle::gi_star(g, band);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(*g.cells[i].gi_z == doctest::Approx(z[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("Benjamini-Hochberg") {
    const std::vector<double> p = {0.01, 0.02, 0.04, 0.5};
    const auto r = fdr_correct(p, 0.05);
    CHECK(r.rejected == std::vector<bool>{true, true, false, false});

    const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
    const auto none = fdr_correct(ones, 0.05);
    CHECK(std::none_of(none.rejected.begin(), none.rejected.end(), [](bool b) { return b; }));
    const auto all = fdr_correct(zeros, 0.05);
    CHECK(std::all_of(all.rejected.begin(), all.rejected.end(), [](bool b) { return b; }));

    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pv(1 + rng.below(60));
        for (auto& v : pv) v = rng.uniform() < 0.3 ? rng.uniform() * 0.01 : rng.uniform();
        CHECK(fdr_correct(pv, 0.05).rejected == oracle::bh(pv, 0.05));
    }
    CHECK_THROWS_AS(fdr_correct(std::vector<double>{0.5, 1.5}, 0.05), Error);
}

TEST_CASE("categorize") {
    CHECK(categorize(true, 3.1) == Category::Hot);
    CHECK(categorize(false, 3.1) == Category::NotSignificant);
    CHECK(categorize(true, -2.5) == Category::Cold);
}

TEST_CASE("homogeneous field has no hot or cold cells") {
    auto g = oracle::lattice(10, 10, 100, std::vector<std::uint32_t>(100, 3));
    const auto s = hotspot_analysis(g, 344, 0.05);
    CHECK(s.hot == 0);
    CHECK(s.cold == 0);
    CHECK(s.not_significant == 100);
}

TEST_CASE("local Moran") {
    SUBCASE("homogeneous field") {
        auto g = oracle::lattice(4, 4, 100, std::vector<std::uint32_t>(16, 2));
        local_moran(g, 150, 99, 1);
        for (const auto& c : g.cells) CHECK(*c.moran_class == MoranClass::NotSignificant);
    }
    SUBCASE("single high cell among zeros is a high-low outlier") {
        std::vector<std::uint32_t> counts(25, 0);
        counts[12] = 9;
        auto g = oracle::lattice(5, 5, 100, counts);
        local_moran(g, 100, 99, 1);
        CHECK(*g.at(2, 2).moran_quadrant == MoranClass::HighLow);
        CHECK(*g.at(2, 2).moran_i < 0);
    }
    SUBCASE("matches the direct formula") {
        Rng rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t cols = 2 + rng.below(9), rows = 1 + rng.below(100 / cols);
            auto g = oracle::lattice(cols, rows, 100, random_counts(cols * rows, 12, rng));
            const double band = rng.uniform(100, 300);
            local_moran(g, band, 19, trial);
            const auto expect = oracle::local_moran(g, band);
            for (std::size_t i = 0; i < g.size(); ++i)
                CHECK(*g.cells[i].moran_i == doctest::Approx(expect[i]).epsilon(1e-9).scale(1.0));
        }
    }
    SUBCASE("a strong cluster is significant high-high") {
        std::vector<std::uint32_t> counts(100, 1);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) counts[r * 10 + c] = 20;
        auto g = oracle::lattice(10, 10, 100, counts);
        local_moran(g, 150, 199, 3);
        CHECK(*g.at(1, 1).moran_class == MoranClass::HighHigh);
        CHECK(*g.at(1, 1).moran_p <= 0.05);
    }
    SUBCASE("permutation p-values are seeded") {
        Rng rng(5);
        auto a = oracle::lattice(8, 8, 100, random_counts(64, 9, rng));
        auto b = a;
        local_moran(a, 150, 99, 42);
        local_moran(b, 150, 99, 42);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a.cells[i].moran_p == *b.cells[i].moran_p);
    }
}

TEST_CASE("label joins") {
    SUBCASE("csv") {
        auto g = oracle::lattice(1, 1, 100, {0});
        join_labels_csv(g, "0,0,Informal");
        CHECK(g.cells[0].label == Label::Informal);
        join_labels_csv(g, "col,row,label\n0,0,F\n");
        CHECK(g.cells[0].label == Label::Formal);
        try {
            join_labels_csv(g, "3,0,I");
            FAIL("expected a data error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Data);
        }
        CHECK_THROWS_AS(join_labels_csv(g, "0,0,maybe"), Error);
    }
    SUBCASE("polygons") {
        auto g = oracle::lattice(3, 1, 100, {0, 0, 0});
        std::vector<LabeledPolygon> polys = {
            {{{{0, 0}, {100, 0}, {100, 100}, {0, 100}}, {}}, Label::Formal},
            {{{{100, 0}, {200, 0}, {200, 100}, {100, 100}}, {}}, Label::Informal},
        };
        join_labels_polygons(g, polys);
        CHECK(g.cells[0].label == Label::Formal);
        CHECK(g.cells[1].label == Label::Informal);
        CHECK(g.cells[2].label == Label::Unlabeled);
    }
    SUBCASE("holes exclude centroids") {
        auto g = oracle::lattice(3, 3, 100, std::vector<std::uint32_t>(9, 0));
        std::vector<LabeledPolygon> polys = {
            {{{{0, 0}, {300, 0}, {300, 300}, {0, 300}}, {{{100, 100}, {200, 100}, {200, 200}, {100, 200}}}}, Label::Formal}};
        join_labels_polygons(g, polys);
        CHECK(g.at(1, 1).label == Label::Unlabeled);
        CHECK(g.at(0, 0).label == Label::Formal);
    }
    SUBCASE("conflicting overlap is an error") {
        auto g = oracle::lattice(1, 1, 100, {0});
        std::vector<LabeledPolygon> polys = {
            {{{{0, 0}, {100, 0}, {100, 100}, {0, 100}}, {}}, Label::Formal},
            {{{{0, 0}, {100, 0}, {100, 100}, {0, 100}}, {}}, Label::Informal},
        };
        CHECK_THROWS_AS(join_labels_polygons(g, polys), Error);
    }
    SUBCASE("geojson round trip") {
        std::vector<LabeledPolygon> polys = {
            {{{{0, 0}, {100, 0}, {100, 100}, {0, 100}}, {}}, Label::Formal},
            {{{{100, 0}, {200, 0}, {200, 100}, {100, 100}}, {{{120, 20}, {180, 20}, {180, 80}}}}, Label::Informal},
        };
        const auto back = parse_label_geojson(format_label_geojson(polys));
        REQUIRE(back.size() == 2);
        CHECK(back[1].label == Label::Informal);
        CHECK(back[1].polygon.holes.size() == 1);
        CHECK(back[1].polygon.contains({150, 90}));
        CHECK_FALSE(back[1].polygon.contains({170, 30}));
    }
}

TEST_CASE("grid csv round trip") {
    Rng rng(6);
    auto g = oracle::lattice(7, 4, 100, random_counts(28, 9, rng));
    count_neighbors(PointSet{{{10, 10}, {500, 300}}}, g, 344);
    hotspot_analysis(g, 344, 0.05);
    g.cells[3].label = Label::Informal;
    g.cells[4].label = Label::Formal;
    const std::string csv = format_grid_csv(g);
    const auto back = parse_grid_csv(csv);
    CHECK(format_grid_csv(back) == csv);
    CHECK(back.n_cols == 7);
    CHECK(back.n_rows == 4);
    CHECK(back.cell_size == 100.0);
}
