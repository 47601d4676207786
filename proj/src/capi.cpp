#include "predictslums/predictslums.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "predictslums/ann.hpp"
#include "predictslums/error.hpp"
#include "predictslums/hotspot.hpp"
#include "predictslums/inference.hpp"
#include "predictslums/ingest.hpp"
#include "predictslums/pipeline.hpp"
#include "predictslums/pointstats.hpp"
#include "predictslums/synth.hpp"
#include "predictslums/text.hpp"

struct psl_points {
    psl::PointSet set;
};
struct psl_grid {
    psl::GridLattice lattice;
};
struct psl_ann {
    psl::AnnModel model;
    std::vector<psl::EpochStats> history;
};

namespace {

thread_local std::string g_last_error;

psl_status status_of(psl::ErrorKind k) {
    switch (k) {
        case psl::ErrorKind::Argument: return PSL_ERR_ARGUMENT;
        case psl::ErrorKind::Parse: return PSL_ERR_PARSE;
        case psl::ErrorKind::Data: return PSL_ERR_DATA;
        case psl::ErrorKind::Numerical: return PSL_ERR_NUMERICAL;
        case psl::ErrorKind::Io: return PSL_ERR_IO;
        case psl::ErrorKind::Version: return PSL_ERR_VERSION;
        case psl::ErrorKind::Truncated: return PSL_ERR_TRUNCATED;
        case psl::ErrorKind::Checksum: return PSL_ERR_CHECKSUM;
        case psl::ErrorKind::State: return PSL_ERR_STATE;
    }
    return PSL_ERR_INTERNAL;
}

template <class Fn>
psl_status guarded(Fn&& fn) {
    try {
        fn();
        return PSL_OK;
    } catch (const psl::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return PSL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PSL_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) psl::fail(psl::ErrorKind::Argument, std::string(what) + " must not be NULL");
}

psl::Rect to_rect(psl_rect r) { return {r.min_x, r.min_y, r.max_x, r.max_y}; }
psl_rect from_rect(const psl::Rect& r) { return {r.min_x, r.min_y, r.max_x, r.max_y}; }

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

psl::TrainConfig to_train(const psl_train_config* c) {
    psl::TrainConfig t;
    if (c == nullptr) return t;
    t.learning_rate = c->learning_rate;
    t.beta1 = c->beta1;
    t.beta2 = c->beta2;
    t.epsilon = c->epsilon;
    t.batch_size = c->batch_size;
    t.epochs = c->epochs;
    t.train_fraction = c->train_fraction;
    t.dropout = c->dropout;
    t.use_coords = c->use_coords != 0;
    psl::require(c->n_hidden <= 8, "at most 8 hidden layers");
    t.hidden.assign(c->hidden, c->hidden + c->n_hidden);
    t.seed = c->seed;
    return t;
}

void fill_eval(const psl::EvalReport& r, psl_eval* out) {
    if (out == nullptr) return;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out->confusion[i][j] = r.confusion[i][j];
    out->total = r.total;
    out->accuracy = r.overall_accuracy;
}

void fill_mnl(const psl::MnlModel& m, const psl::MnlDiagnostics& d, psl_mnl_report* out) {
    for (int k = 0; k < 2; ++k)
        for (int a = 0; a < 3; ++a) {
            out->b[k][a] = m.coefficients[k][a];
            out->se[k][a] = m.std_errors[k][a];
        }
    out->log_likelihood = d.log_likelihood;
    out->null_log_likelihood = d.null_log_likelihood;
    out->pseudo_r2 = d.pseudo_r2;
    out->lr_chi2 = d.lr_chi2;
    out->lr_p = d.lr_p;
    out->lr_df = d.lr_df;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out->confusion[i][j] = d.confusion[i][j];
    out->accuracy = d.accuracy;
    out->n = m.n;
    out->iterations = m.iterations_used;
}

void fill_ttest(const psl::TTestResult& r, psl_ttest* out) {
    *out = {r.mean_a, r.mean_b, r.sd_a, r.sd_b, r.se_a, r.se_b, r.n_a, r.n_b,
            r.t,      r.df,     r.se_diff, r.ci_low, r.ci_high, r.p_value};
}

void fill_nn(const psl::NnResult& r, psl_nn_result* out) {
    *out = {r.observed_mean_dist, r.expected_mean_dist, r.ratio, r.z_score, r.n, r.area};
}

}  // namespace

extern "C" {

const char* psl_last_error(void) { return g_last_error.c_str(); }

const char* psl_status_string(psl_status s) {
    switch (s) {
        case PSL_OK: return "ok";
        case PSL_ERR_ARGUMENT: return "invalid argument";
        case PSL_ERR_PARSE: return "parse error";
        case PSL_ERR_DATA: return "data error";
        case PSL_ERR_NUMERICAL: return "numerical failure";
        case PSL_ERR_IO: return "i/o error";
        case PSL_ERR_VERSION: return "unsupported format version";
        case PSL_ERR_TRUNCATED: return "truncated file";
        case PSL_ERR_CHECKSUM: return "checksum mismatch";
        case PSL_ERR_STATE: return "invalid state";
        case PSL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* psl_version(void) { return "1.0.0"; }

void psl_string_free(char* s) { std::free(s); }

// ---- points

psl_status psl_points_read_csv(const char* path, psl_points** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new psl_points{psl::parse_point_csv(psl::text::read_file(path))};
    });
}

psl_status psl_points_parse_csv(const char* text, psl_points** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new psl_points{psl::parse_point_csv(text)};
    });
}

psl_status psl_points_from_polylines(const char* path, double snap_tol, psl_points** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        const auto lines = psl::read_polylines(path);
        *out = new psl_points{psl::extract_intersections(lines, snap_tol)};
    });
}

psl_status psl_points_from_xy(const double* xy, size_t n, psl_points** out) {
    return guarded([&] {
        need(out, "out");
        if (n > 0) need(xy, "xy");
        auto* p = new psl_points{};
        p->set.points.reserve(n);
        for (size_t i = 0; i < n; ++i) p->set.points.push_back({xy[2 * i], xy[2 * i + 1]});
        *out = p;
    });
}

psl_status psl_points_dedupe(const psl_points* p, double tol, psl_points** out) {
    return guarded([&] {
        need(p, "points");
        need(out, "out");
        *out = new psl_points{psl::dedupe(p->set, tol)};
    });
}

psl_status psl_points_write_csv(const psl_points* p, const char* path) {
    return guarded([&] {
        need(p, "points");
        need(path, "path");
        psl::text::write_file(path, psl::format_point_csv(p->set));
    });
}

size_t psl_points_count(const psl_points* p) { return p == nullptr ? 0 : p->set.size(); }

psl_status psl_points_get(const psl_points* p, size_t i, double* x, double* y) {
    return guarded([&] {
        need(p, "points");
        psl::require(i < p->set.size(), "point index out of range");
        if (x != nullptr) *x = p->set.points[i].x;
        if (y != nullptr) *y = p->set.points[i].y;
    });
}

psl_status psl_points_bounds(const psl_points* p, psl_rect* out) {
    return guarded([&] {
        need(p, "points");
        need(out, "out");
        *out = from_rect(psl::bounding_rect(p->set));
    });
}

psl_status psl_check_projected(psl_rect r, int force) {
    return guarded([&] { psl::check_projected(to_rect(r), force != 0); });
}

void psl_points_free(psl_points* p) { delete p; }

// ---- point statistics

psl_status psl_nearest_neighbor(const psl_points* p, psl_rect frame, psl_nn_result* out) {
    return guarded([&] {
        need(p, "points");
        need(out, "out");
        fill_nn(psl::nearest_neighbor_stat(p->set, to_rect(frame)), out);
    });
}

psl_status psl_nearest_neighbor_summary(double observed_mean_dist, size_t n, double area, psl_nn_result* out) {
    return guarded([&] {
        need(out, "out");
        fill_nn(psl::nearest_neighbor_from_summary(observed_mean_dist, n, area), out);
    });
}

psl_status psl_ripley_l(const psl_points* p, psl_rect frame, const double* distances, size_t n_distances,
                        size_t permutations, uint64_t seed, double* l_observed, double* l_expected,
                        double* envelope_low, double* envelope_high) {
    return guarded([&] {
        need(p, "points");
        need(distances, "distances");
        const auto k = psl::ripley_l(p->set, to_rect(frame), std::span<const double>(distances, n_distances),
                                     permutations, seed);
        for (size_t i = 0; i < n_distances; ++i) {
            if (l_observed != nullptr) l_observed[i] = k.l_observed[i];
            if (l_expected != nullptr) l_expected[i] = k.l_expected[i];
            if (envelope_low != nullptr) envelope_low[i] = k.envelope_low[i];
            if (envelope_high != nullptr) envelope_high[i] = k.envelope_high[i];
        }
    });
}

psl_status psl_ripley_l_csv(const psl_points* p, psl_rect frame, const double* distances, size_t n_distances,
                            size_t permutations, uint64_t seed, const char* path) {
    return guarded([&] {
        need(p, "points");
        need(distances, "distances");
        need(path, "path");
        const auto k = psl::ripley_l(p->set, to_rect(frame), std::span<const double>(distances, n_distances),
                                     permutations, seed);
        psl::text::write_file(path, psl::format_k_csv(k));
    });
}

// ---- grid

psl_status psl_grid_build(const psl_points* p, psl_rect frame, double cell_size, psl_grid** out) {
    return guarded([&] {
        need(p, "points");
        need(out, "out");
        *out = new psl_grid{psl::aggregate_to_grid(p->set, to_rect(frame), cell_size)};
    });
}

psl_status psl_grid_read_csv(const char* path, double cell_size_hint, psl_grid** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new psl_grid{psl::parse_grid_csv(psl::text::read_file(path), cell_size_hint)};
    });
}

psl_status psl_grid_write_csv(const psl_grid* g, const char* path) {
    return guarded([&] {
        need(g, "grid");
        need(path, "path");
        psl::text::write_file(path, psl::format_grid_csv(g->lattice));
    });
}

psl_status psl_grid_dims(const psl_grid* g, size_t* n_cols, size_t* n_rows, double* cell_size) {
    return guarded([&] {
        need(g, "grid");
        if (n_cols != nullptr) *n_cols = g->lattice.n_cols;
        if (n_rows != nullptr) *n_rows = g->lattice.n_rows;
        if (cell_size != nullptr) *cell_size = g->lattice.cell_size;
    });
}

psl_status psl_grid_cell(const psl_grid* g, size_t index, psl_cell* out) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        psl::require(index < g->lattice.size(), "cell index out of range");
        const auto& c = g->lattice.cells[index];
        out->col = c.col;
        out->row = c.row;
        out->cx = c.centroid.x;
        out->cy = c.centroid.y;
        out->count = c.count;
        out->nneighbors = c.nneighbors ? static_cast<int64_t>(*c.nneighbors) : -1;
        out->gi_z = c.gi_z.value_or(kNaN);
        out->p_value = c.p_value.value_or(kNaN);
        out->category = c.category ? static_cast<int>(*c.category) : PSL_CAT_NONE;
        out->label = static_cast<int>(c.label);
        out->moran_i = c.moran_i.value_or(kNaN);
        out->moran_p = c.moran_p.value_or(kNaN);
        out->moran_quadrant = c.moran_quadrant ? static_cast<int>(*c.moran_quadrant) : PSL_MORAN_NONE;
        out->moran_class = c.moran_class ? static_cast<int>(*c.moran_class) : PSL_MORAN_NONE;
        out->prob = c.prob.value_or(kNaN);
        out->pred = c.pred ? static_cast<int>(*c.pred) : -1;
    });
}

psl_status psl_grid_count_neighbors(psl_grid* g, const psl_points* p, double band) {
    return guarded([&] {
        need(g, "grid");
        need(p, "points");
        psl::count_neighbors(p->set, g->lattice, band);
    });
}

psl_status psl_grid_hotspots(psl_grid* g, double band, double alpha, psl_hotspot_summary* out) {
    return guarded([&] {
        need(g, "grid");
        const auto s = psl::hotspot_analysis(g->lattice, band, alpha);
        if (out != nullptr) *out = {s.hot, s.not_significant, s.cold, s.adjusted_threshold};
    });
}

psl_status psl_grid_local_moran(psl_grid* g, double band, size_t permutations, uint64_t seed, double alpha) {
    return guarded([&] {
        need(g, "grid");
        psl::local_moran(g->lattice, band, permutations, seed, alpha);
    });
}

psl_status psl_grid_join_labels(psl_grid* g, const char* path) {
    return guarded([&] {
        need(g, "grid");
        need(path, "path");
        const std::string body = psl::text::read_file(path);
        const auto t = psl::text::trim(body);
        if (!t.empty() && t.front() == '{') {
            const auto polys = psl::parse_label_geojson(body);
            psl::join_labels_polygons(g->lattice, polys);
        } else {
            psl::join_labels_csv(g->lattice, body);
        }
    });
}

psl_status psl_grid_set_label(psl_grid* g, size_t index, int label) {
    return guarded([&] {
        need(g, "grid");
        psl::require(index < g->lattice.size(), "cell index out of range");
        psl::require(label >= PSL_LABEL_FORMAL && label <= PSL_LABEL_UNLABELED, "unknown label code");
        g->lattice.cells[index].label = static_cast<psl::Label>(label);
    });
}

psl_grid* psl_grid_clone(const psl_grid* g) {
    if (g == nullptr) return nullptr;
    try {
        return new psl_grid{g->lattice};
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return nullptr;
    }
}

void psl_grid_free(psl_grid* g) { delete g; }

// ---- tests

psl_status psl_fdr(const double* p, size_t n, double alpha, unsigned char* rejected, double* threshold) {
    return guarded([&] {
        if (n > 0) need(p, "p");
        const auto r = psl::fdr_correct(std::span<const double>(p, n), alpha);
        if (rejected != nullptr)
            for (size_t i = 0; i < n; ++i) rejected[i] = r.rejected[i] ? 1 : 0;
        if (threshold != nullptr) *threshold = r.adjusted_threshold;
    });
}

psl_status psl_welch_t(const double* a, size_t n_a, const double* b, size_t n_b, psl_ttest* out) {
    return guarded([&] {
        need(a, "a");
        need(b, "b");
        need(out, "out");
        fill_ttest(psl::welch_t_test(std::span<const double>(a, n_a), std::span<const double>(b, n_b)), out);
    });
}

psl_status psl_grid_t_test(const psl_grid* g, int variable, psl_ttest* out) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        psl::require(variable == 0 || variable == 1, "variable must be 0 (nneighbors) or 1 (gi_z)");
        const auto v = variable == 0 ? psl::TTestVariable::NNeighbors : psl::TTestVariable::GiZ;
        fill_ttest(psl::formal_vs_informal_t_test(g->lattice, v), out);
    });
}

// ---- multinomial logit

psl_status psl_mnl_fit_grid(const psl_grid* g, psl_mnl_report* out) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        const auto samples = psl::mnl_samples_from_grid(g->lattice);
        const auto m = psl::fit_mnl(samples);
        fill_mnl(m, psl::mnl_diagnostics(m, samples), out);
    });
}

psl_status psl_mnl_fit(const int* category, const double* nneighbors, const int* formal, size_t n,
                       psl_mnl_report* out) {
    return guarded([&] {
        need(category, "category");
        need(nneighbors, "nneighbors");
        need(formal, "formal");
        need(out, "out");
        std::vector<psl::MnlSample> samples(n);
        for (size_t i = 0; i < n; ++i) {
            psl::require(category[i] >= PSL_CAT_HOT && category[i] <= PSL_CAT_COLD, "unknown category code");
            samples[i] = {static_cast<psl::Category>(category[i]), nneighbors[i], formal[i] != 0 ? 1 : 0};
        }
        const auto m = psl::fit_mnl(samples);
        fill_mnl(m, psl::mnl_diagnostics(m, samples), out);
    });
}

psl_status psl_mnl_predict(const double b[2][3], double nneighbors, int formal, double probs[3]) {
    return guarded([&] {
        need(b, "b");
        need(probs, "probs");
        psl::MnlCoefficients c{};
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 3; ++a) c[k][a] = b[k][a];
        const auto p = psl::mnl_predict(c, nneighbors, formal != 0 ? 1 : 0);
        for (int i = 0; i < 3; ++i) probs[i] = p[i];
    });
}

psl_status psl_mnl_write_report(const psl_mnl_report* r, const char* path) {
    return guarded([&] {
        need(r, "report");
        need(path, "path");
        using psl::text::format_double;
        std::string out = "category,term,b,se,exp_b\n";
        const char* cats[2] = {"cold", "hot"};
        const char* terms[3] = {"intercept", "nneighbors", "formal"};
        for (int k = 0; k < 2; ++k)
            for (int a = 0; a < 3; ++a)
                out += std::string(cats[k]) + ',' + terms[a] + ',' + format_double(r->b[k][a]) + ',' +
                       format_double(r->se[k][a]) + ',' + format_double(std::exp(r->b[k][a])) + '\n';
        out += "model,log_likelihood,," + format_double(r->log_likelihood) + ",\n";
        out += "model,null_log_likelihood,," + format_double(r->null_log_likelihood) + ",\n";
        out += "model,pseudo_r2,," + format_double(r->pseudo_r2) + ",\n";
        out += "model,lr_chi2,," + format_double(r->lr_chi2) + ",\n";
        out += "model,lr_p,," + format_double(r->lr_p) + ",\n";
        out += "model,accuracy,," + format_double(r->accuracy) + ",\n";
        psl::text::write_file(path, out);
    });
}

// ---- neural network

psl_train_config psl_train_config_default(void) {
    const psl::TrainConfig t;
    psl_train_config c{};
    c.learning_rate = t.learning_rate;
    c.beta1 = t.beta1;
    c.beta2 = t.beta2;
    c.epsilon = t.epsilon;
    c.batch_size = t.batch_size;
    c.epochs = t.epochs;
    c.train_fraction = t.train_fraction;
    c.dropout = t.dropout;
    c.use_coords = t.use_coords ? 1 : 0;
    c.n_hidden = t.hidden.size();
    for (size_t i = 0; i < t.hidden.size(); ++i) c.hidden[i] = t.hidden[i];
    c.seed = t.seed;
    return c;
}

psl_status psl_ann_train_grid(const psl_grid* g, const psl_train_config* cfg, psl_ann** out, psl_eval* eval) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        const auto rows = psl::rows_from_grid(g->lattice);
        auto res = psl::train(rows, to_train(cfg));
        fill_eval(res.report, eval);
        *out = new psl_ann{std::move(res.model), std::move(res.report.history)};
    });
}

size_t psl_ann_history_length(const psl_ann* m) { return m == nullptr ? 0 : m->history.size(); }

psl_status psl_ann_history(const psl_ann* m, size_t epoch, psl_epoch* out) {
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        psl::require(epoch < m->history.size(), "epoch out of range");
        const auto& h = m->history[epoch];
        *out = {h.train_loss, h.train_accuracy, h.val_loss, h.val_accuracy};
    });
}

psl_status psl_ann_write_history(const psl_ann* m, const char* path) {
    return guarded([&] {
        need(m, "model");
        need(path, "path");
        using psl::text::format_double;
        std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
        for (size_t e = 0; e < m->history.size(); ++e) {
            const auto& h = m->history[e];
            out += std::to_string(e + 1) + ',' + format_double(h.train_loss) + ',' + format_double(h.train_accuracy) +
                   ',' + format_double(h.val_loss) + ',' + format_double(h.val_accuracy) + '\n';
        }
        psl::text::write_file(path, out);
    });
}

psl_status psl_ann_evaluate_grid(const psl_ann* m, const psl_grid* g, psl_eval* out) {
    return guarded([&] {
        need(m, "model");
        need(g, "grid");
        need(out, "out");
        const auto rows = psl::rows_from_grid(g->lattice);
        if (rows.empty()) psl::fail(psl::ErrorKind::Data, "grid has no labelled cells to evaluate against");
        fill_eval(psl::evaluate(m->model, rows), out);
    });
}

psl_status psl_ann_predict_grid(const psl_ann* m, psl_grid* g) {
    return guarded([&] {
        need(m, "model");
        need(g, "grid");
        psl::predict_grid(m->model, g->lattice);
    });
}

psl_status psl_ann_predict(const psl_ann* m, const double features[6], double* prob) {
    return guarded([&] {
        need(m, "model");
        need(features, "features");
        need(prob, "prob");
        psl::RawFeatures raw{};
        for (size_t i = 0; i < raw.size(); ++i) raw[i] = features[i];
        *prob = m->model.predict_probability(raw);
    });
}

psl_status psl_ann_save(const psl_ann* m, const char* path) {
    return guarded([&] {
        need(m, "model");
        need(path, "path");
        psl::save_model(m->model, path);
    });
}

psl_status psl_ann_load(const char* path, psl_ann** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new psl_ann{psl::load_model(path), {}};
    });
}

psl_status psl_ann_kfold_grid(const psl_grid* g, size_t k, const psl_train_config* cfg, psl_kfold* out,
                              double* fold_accuracy) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        const auto rows = psl::rows_from_grid(g->lattice);
        const auto r = psl::kfold_cv(rows, k, to_train(cfg));
        *out = {r.mean_accuracy, r.variance, r.cv_squared_error, k};
        if (fold_accuracy != nullptr)
            for (size_t f = 0; f < r.fold_accuracy.size(); ++f) fold_accuracy[f] = r.fold_accuracy[f];
    });
}

void psl_ann_free(psl_ann* m) { delete m; }

psl_status psl_write_eval_csv(const psl_eval* e, const char* path) {
    return guarded([&] {
        need(e, "eval");
        need(path, "path");
        std::string out = "predicted,actual_formal,actual_informal\n";
        out += "formal," + std::to_string(e->confusion[0][0]) + ',' + std::to_string(e->confusion[0][1]) + '\n';
        out += "informal," + std::to_string(e->confusion[1][0]) + ',' + std::to_string(e->confusion[1][1]) + '\n';
        out += "total," + std::to_string(e->total) + ",\n";
        out += "accuracy," + psl::text::format_double(e->accuracy) + ",\n";
        psl::text::write_file(path, out);
    });
}

// ---- synthetic cities

psl_status psl_synth_default_spec(int which, uint64_t seed, char** spec_json) {
    return guarded([&] {
        need(spec_json, "spec_json");
        psl::require(which == 0 || which == 1, "which must be 0 (city A) or 1 (city B)");
        const auto spec = which == 0 ? psl::default_city_spec(seed) : psl::alternate_city_spec(seed);
        *spec_json = dup_string(psl::city_spec_to_json(spec));
    });
}

psl_status psl_synth_city(const char* spec_json, const char* points_path, const char* labels_path, psl_rect* frame) {
    return guarded([&] {
        need(spec_json, "spec_json");
        const auto spec = psl::city_spec_from_json(spec_json);
        const auto city = psl::generate_synthetic_city(spec);
        if (points_path != nullptr) psl::text::write_file(points_path, psl::format_point_csv(city.points));
        if (labels_path != nullptr) psl::text::write_file(labels_path, psl::format_label_geojson(city.labels));
        if (frame != nullptr) *frame = from_rect(spec.frame);
    });
}

psl_status psl_decay_fit_counts(const uint32_t* counts, size_t n, psl_decay_fit* out) {
    return guarded([&] {
        if (n > 0) need(counts, "counts");
        need(out, "out");
        const auto f = psl::fit_count_distribution(std::span<const uint32_t>(counts, n));
        *out = {f.lambda, f.amplitude, f.r_squared, f.histogram.size()};
    });
}

psl_status psl_decay_fit_grid(const psl_grid* g, psl_decay_fit* out) {
    return guarded([&] {
        need(g, "grid");
        need(out, "out");
        const auto f = psl::fit_count_distribution(g->lattice);
        *out = {f.lambda, f.amplitude, f.r_squared, f.histogram.size()};
    });
}

// ---- pipeline

psl_status psl_pipeline_run(const char* config_json, char** summary_json) {
    return guarded([&] {
        need(config_json, "config_json");
        const auto cfg = psl::config_from_json(config_json);
        const auto summary = psl::run_pipeline(cfg);
        if (summary_json != nullptr) *summary_json = dup_string(psl::summary_to_json(summary));
    });
}

psl_status psl_pipeline_default_config(char** config_json) {
    return guarded([&] {
        need(config_json, "config_json");
        *config_json = dup_string(psl::config_to_json(psl::PipelineConfig{}));
    });
}

}  // extern "C"
