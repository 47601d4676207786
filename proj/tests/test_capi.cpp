// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "predictslums/predictslums.h"

TEST_CASE("status and error reporting") {
    CHECK(std::strcmp(psl_status_string(PSL_OK), "ok") == 0);
    psl_points* p = nullptr;
    CHECK(psl_points_parse_csv("a,b", &p) == PSL_ERR_PARSE);
    CHECK(p == nullptr);
    CHECK(std::string(psl_last_error()).find("line 1") != std::string::npos);
    CHECK(psl_points_parse_csv(nullptr, &p) == PSL_ERR_ARGUMENT);
    CHECK(psl_points_read_csv("/nonexistent/file.csv", &p) == PSL_ERR_IO);
    psl_points_free(nullptr);
    psl_grid_free(nullptr);
    psl_ann_free(nullptr);
}

TEST_CASE("published arithmetic through the C API") {
    const double table3[2][3] = {{-0.421, -0.041, 1.603}, {-4.657, 0.085, -0.626}};
    double probs[3];
    REQUIRE(psl_mnl_predict(table3, 64, 0, probs) == PSL_OK);
    CHECK(std::fabs(probs[0] - 0.676) <= 0.002);

    psl_nn_result nn{};
    const double n = 1e6, area = std::pow(118.1095 / 0.5, 2) * n;
    REQUIRE(psl_nearest_neighbor_summary(24.9133, static_cast<size_t>(n), area, &nn) == PSL_OK);
    CHECK(std::fabs(nn.ratio - 0.210934) < 5e-7);

    const double pv[4] = {0.01, 0.02, 0.04, 0.5};
    unsigned char rej[4];
    REQUIRE(psl_fdr(pv, 4, 0.05, rej, nullptr) == PSL_OK);
    CHECK(rej[0] == 1);
    CHECK(rej[1] == 1);
    CHECK(rej[2] == 0);
    CHECK(rej[3] == 0);

    const double a[4] = {1, 2, 3, 4}, b[4] = {2, 3, 4, 5};
    psl_ttest t{};
    REQUIRE(psl_welch_t(a, 4, b, 4, &t) == PSL_OK);
    CHECK(std::fabs(t.t + 1.0954451150103321) < 1e-12);
}

TEST_CASE("synthetic city workflow") {
    char* spec = nullptr;
    REQUIRE(psl_synth_default_spec(0, 5, &spec) == PSL_OK);
    psl_rect frame{};
    REQUIRE(psl_synth_city(spec, "capi_points.csv", "capi_labels.geojson", &frame) == PSL_OK);
    psl_string_free(spec);
    CHECK(frame.max_x == 4000.0);

    psl_points* pts = nullptr;
    REQUIRE(psl_points_read_csv("capi_points.csv", &pts) == PSL_OK);
    CHECK(psl_points_count(pts) > 1000);

    psl_grid* g = nullptr;
    REQUIRE(psl_grid_build(pts, frame, 100, &g) == PSL_OK);
    size_t cols = 0, rows = 0;
    REQUIRE(psl_grid_dims(g, &cols, &rows, nullptr) == PSL_OK);
    CHECK(cols == 40);
    CHECK(rows == 40);
    REQUIRE(psl_grid_count_neighbors(g, pts, 344) == PSL_OK);
    psl_hotspot_summary hs{};
    REQUIRE(psl_grid_hotspots(g, 344, 0.05, &hs) == PSL_OK);
    CHECK(hs.hot + hs.not_significant + hs.cold == 1600);
    REQUIRE(psl_grid_join_labels(g, "capi_labels.geojson") == PSL_OK);

    psl_cell c{};
    REQUIRE(psl_grid_cell(g, 0, &c) == PSL_OK);
    CHECK(c.category != PSL_CAT_NONE);
    CHECK(std::isnan(c.prob));
    CHECK(psl_grid_cell(g, 99999, &c) == PSL_ERR_ARGUMENT);

    psl_ttest t{};
    REQUIRE(psl_grid_t_test(g, 0, &t) == PSL_OK);
    CHECK(t.mean_b > t.mean_a);

    psl_train_config cfg = psl_train_config_default();
    CHECK(cfg.epochs == 600);
    CHECK(cfg.n_hidden == 2);
    cfg.epochs = 20;
    cfg.seed = 3;
    psl_ann* m = nullptr;
    psl_eval ev{};
    REQUIRE(psl_ann_train_grid(g, &cfg, &m, &ev) == PSL_OK);
    CHECK(ev.accuracy >= 0.85);
    CHECK(psl_ann_history_length(m) == 20);
    REQUIRE(psl_ann_save(m, "capi_model.bin") == PSL_OK);

    psl_ann* loaded = nullptr;
    REQUIRE(psl_ann_load("capi_model.bin", &loaded) == PSL_OK);
    const double feats[6] = {1, 0, 0, 200, 1500, 500};
    double p1 = 0, p2 = 0;
    REQUIRE(psl_ann_predict(m, feats, &p1) == PSL_OK);
    REQUIRE(psl_ann_predict(loaded, feats, &p2) == PSL_OK);
    CHECK(p1 == p2);

    psl_grid* g2 = psl_grid_clone(g);
    REQUIRE(psl_ann_predict_grid(loaded, g2) == PSL_OK);
    REQUIRE(psl_grid_cell(g2, 0, &c) == PSL_OK);
    CHECK(c.prob > 0.0);
    CHECK(c.prob < 1.0);
    REQUIRE(psl_grid_write_csv(g2, "capi_grid.csv") == PSL_OK);
    psl_grid* g3 = nullptr;
    REQUIRE(psl_grid_read_csv("capi_grid.csv", 100, &g3) == PSL_OK);
    psl_eval ev2{};
    REQUIRE(psl_ann_evaluate_grid(loaded, g3, &ev2) == PSL_OK);
    CHECK(ev2.total > 0);

    std::FILE* f = std::fopen("capi_model.bin", "r+b");
    REQUIRE(f != nullptr);
    std::fseek(f, 8, SEEK_SET);
    std::fputc(9, f);
    std::fclose(f);
    psl_ann* bad = nullptr;
    CHECK(psl_ann_load("capi_model.bin", &bad) == PSL_ERR_VERSION);
    CHECK(bad == nullptr);

    psl_ann_free(m);
    psl_ann_free(loaded);
    psl_grid_free(g);
    psl_grid_free(g2);
    psl_grid_free(g3);
    psl_points_free(pts);
}

TEST_CASE("decay fit and pipeline entry points") {
    std::vector<uint32_t> counts;
    for (uint32_t k = 0; k < 12; ++k)
        for (int i = 0; i < static_cast<int>(1000 * std::pow(0.7, k)); ++i) counts.push_back(k);
    psl_decay_fit d{};
    REQUIRE(psl_decay_fit_counts(counts.data(), counts.size(), &d) == PSL_OK);
    CHECK(std::fabs(d.lambda + std::log(0.7)) < 0.05);
    const uint32_t flat[5] = {3, 3, 3, 3, 3};
    CHECK(psl_decay_fit_counts(flat, 5, &d) == PSL_ERR_DATA);

    char* cfg = nullptr;
    REQUIRE(psl_pipeline_default_config(&cfg) == PSL_OK);
    CHECK(std::string(cfg).find("\"band\": 344") != std::string::npos);
    psl_string_free(cfg);
    CHECK(psl_pipeline_run("{\"points\": \"missing.csv\", \"out_dir\": \"capi_out\"}", nullptr) == PSL_ERR_IO);
    CHECK(std::string(psl_last_error()).find("stage 'ingest'") != std::string::npos);
    CHECK(psl_pipeline_run("{\"pionts\": 1}", nullptr) == PSL_ERR_ARGUMENT);
}
