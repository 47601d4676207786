#ifndef PREDICTSLUMS_H
#define PREDICTSLUMS_H

#include <stddef.h>
#include <stdint.h>

#if defined(PSL_BUILDING_LIBRARY)
#define PSL_API __attribute__((visibility("default")))
#else
#define PSL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psl_status {
    PSL_OK = 0,
    PSL_ERR_ARGUMENT = 1,
    PSL_ERR_PARSE = 2,
    PSL_ERR_DATA = 3,
    PSL_ERR_NUMERICAL = 4,
    PSL_ERR_IO = 5,
    PSL_ERR_VERSION = 6,
    PSL_ERR_TRUNCATED = 7,
    PSL_ERR_CHECKSUM = 8,
    PSL_ERR_STATE = 9,
    PSL_ERR_INTERNAL = 10
} psl_status;

/* Message of the last failing call on this thread; never NULL. */
PSL_API const char* psl_last_error(void);
PSL_API const char* psl_status_string(psl_status s);
PSL_API const char* psl_version(void);
/* Frees strings returned through char** out-parameters. */
PSL_API void psl_string_free(char* s);

typedef struct psl_rect {
    double min_x, min_y, max_x, max_y;
} psl_rect;

typedef struct psl_points psl_points;
typedef struct psl_grid psl_grid;
typedef struct psl_ann psl_ann;

/* ---- points ---- */
PSL_API psl_status psl_points_read_csv(const char* path, psl_points** out);
PSL_API psl_status psl_points_parse_csv(const char* text, psl_points** out);
/* Street intersections from polylines (CSV line_id,seq,x,y or GeoJSON). */
PSL_API psl_status psl_points_from_polylines(const char* path, double snap_tol, psl_points** out);
PSL_API psl_status psl_points_from_xy(const double* xy, size_t n, psl_points** out);
PSL_API psl_status psl_points_dedupe(const psl_points* p, double tol, psl_points** out);
PSL_API psl_status psl_points_write_csv(const psl_points* p, const char* path);
PSL_API size_t psl_points_count(const psl_points* p);
PSL_API psl_status psl_points_get(const psl_points* p, size_t i, double* x, double* y);
PSL_API psl_status psl_points_bounds(const psl_points* p, psl_rect* out);
/* Data error when the rectangle looks like geographic degrees, unless force. */
PSL_API psl_status psl_check_projected(psl_rect r, int force);
PSL_API void psl_points_free(psl_points* p);

/* ---- point-pattern statistics ---- */
typedef struct psl_nn_result {
    double observed_mean_dist, expected_mean_dist, ratio, z_score;
    size_t n;
    double area;
} psl_nn_result;

PSL_API psl_status psl_nearest_neighbor(const psl_points* p, psl_rect frame, psl_nn_result* out);
PSL_API psl_status psl_nearest_neighbor_summary(double observed_mean_dist, size_t n, double area, psl_nn_result* out);

/* Each output array holds n_distances values; any may be NULL. */
PSL_API psl_status psl_ripley_l(const psl_points* p, psl_rect frame, const double* distances, size_t n_distances,
                                size_t permutations, uint64_t seed, double* l_observed, double* l_expected,
                                double* envelope_low, double* envelope_high);
/* Writes the L-function CSV (d,l_observed,l_expected,envelope_low,envelope_high). */
PSL_API psl_status psl_ripley_l_csv(const psl_points* p, psl_rect frame, const double* distances, size_t n_distances,
                                    size_t permutations, uint64_t seed, const char* path);

/* ---- grid ---- */
enum { PSL_CAT_HOT = 0, PSL_CAT_NOT_SIGNIFICANT = 1, PSL_CAT_COLD = 2, PSL_CAT_NONE = -1 };
enum { PSL_LABEL_FORMAL = 0, PSL_LABEL_INFORMAL = 1, PSL_LABEL_UNLABELED = 2 };
enum { PSL_MORAN_HH = 0, PSL_MORAN_LL = 1, PSL_MORAN_HL = 2, PSL_MORAN_LH = 3, PSL_MORAN_NS = 4, PSL_MORAN_NONE = -1 };

/* Optional fields are NaN (doubles) or -1 (integers) when unset. */
typedef struct psl_cell {
    uint32_t col, row;
    double cx, cy;
    uint32_t count;
    int64_t nneighbors;
    double gi_z, p_value;
    int category;
    int label;
    double moran_i, moran_p;
    int moran_quadrant, moran_class;
    double prob;
    int pred;
} psl_cell;

typedef struct psl_hotspot_summary {
    size_t hot, not_significant, cold;
    double adjusted_threshold;
} psl_hotspot_summary;

PSL_API psl_status psl_grid_build(const psl_points* p, psl_rect frame, double cell_size, psl_grid** out);
PSL_API psl_status psl_grid_read_csv(const char* path, double cell_size_hint, psl_grid** out);
PSL_API psl_status psl_grid_write_csv(const psl_grid* g, const char* path);
PSL_API psl_status psl_grid_dims(const psl_grid* g, size_t* n_cols, size_t* n_rows, double* cell_size);
PSL_API psl_status psl_grid_cell(const psl_grid* g, size_t index, psl_cell* out);
PSL_API psl_status psl_grid_count_neighbors(psl_grid* g, const psl_points* p, double band);
PSL_API psl_status psl_grid_hotspots(psl_grid* g, double band, double alpha, psl_hotspot_summary* out);
PSL_API psl_status psl_grid_local_moran(psl_grid* g, double band, size_t permutations, uint64_t seed, double alpha);
/* Label CSV (col,row,label) or GeoJSON polygons, chosen by content. */
PSL_API psl_status psl_grid_join_labels(psl_grid* g, const char* path);
PSL_API psl_status psl_grid_set_label(psl_grid* g, size_t index, int label);
PSL_API psl_grid* psl_grid_clone(const psl_grid* g);
PSL_API void psl_grid_free(psl_grid* g);

/* ---- tests ---- */
/* rejected[i] is 1 when p[i] is rejected by Benjamini-Hochberg at alpha. */
PSL_API psl_status psl_fdr(const double* p, size_t n, double alpha, unsigned char* rejected, double* threshold);

typedef struct psl_ttest {
    double mean_a, mean_b, sd_a, sd_b, se_a, se_b;
    size_t n_a, n_b;
    double t, df, se_diff, ci_low, ci_high, p_value;
} psl_ttest;

PSL_API psl_status psl_welch_t(const double* a, size_t n_a, const double* b, size_t n_b, psl_ttest* out);
/* variable 0: nneighbors, 1: gi_z; group a is formal, b informal. */
PSL_API psl_status psl_grid_t_test(const psl_grid* g, int variable, psl_ttest* out);

/* ---- multinomial logit ---- */
/* Rows: 0 cold, 1 hot; columns: intercept, nneighbors, formal. */
typedef struct psl_mnl_report {
    double b[2][3];
    double se[2][3];
    double log_likelihood, null_log_likelihood, pseudo_r2, lr_chi2, lr_p;
    size_t lr_df;
    size_t confusion[3][3]; /* [observed][predicted], order hot, not significant, cold */
    double accuracy;
    size_t n, iterations;
} psl_mnl_report;

PSL_API psl_status psl_mnl_fit_grid(const psl_grid* g, psl_mnl_report* out);
/* category: PSL_CAT_*; formal: 0 or 1. */
PSL_API psl_status psl_mnl_fit(const int* category, const double* nneighbors, const int* formal, size_t n,
                               psl_mnl_report* out);
/* probs receives (hot, not significant, cold). */
PSL_API psl_status psl_mnl_predict(const double b[2][3], double nneighbors, int formal, double probs[3]);
PSL_API psl_status psl_mnl_write_report(const psl_mnl_report* r, const char* path);

/* ---- neural network ---- */
typedef struct psl_train_config {
    double learning_rate, beta1, beta2, epsilon;
    size_t batch_size, epochs;
    double train_fraction, dropout;
    int use_coords;
    size_t hidden[8];
    size_t n_hidden;
    uint64_t seed;
} psl_train_config;

typedef struct psl_eval {
    size_t confusion[2][2]; /* [predicted][actual], 0 formal, 1 informal */
    size_t total;
    double accuracy;
} psl_eval;

typedef struct psl_epoch {
    double train_loss, train_accuracy, val_loss, val_accuracy;
} psl_epoch;

typedef struct psl_kfold {
    double mean_accuracy, variance, cv_squared_error;
    size_t k;
} psl_kfold;

PSL_API psl_train_config psl_train_config_default(void);
/* Trains on the labelled cells of g; validation report goes to eval (may be NULL). */
PSL_API psl_status psl_ann_train_grid(const psl_grid* g, const psl_train_config* cfg, psl_ann** out, psl_eval* eval);
PSL_API size_t psl_ann_history_length(const psl_ann* m);
PSL_API psl_status psl_ann_history(const psl_ann* m, size_t epoch, psl_epoch* out);
PSL_API psl_status psl_ann_write_history(const psl_ann* m, const char* path);
PSL_API psl_status psl_ann_evaluate_grid(const psl_ann* m, const psl_grid* g, psl_eval* out);
PSL_API psl_status psl_ann_predict_grid(const psl_ann* m, psl_grid* g);
/* features: (hot, not significant, cold, nneighbors, cx, cy), unstandardized. */
PSL_API psl_status psl_ann_predict(const psl_ann* m, const double features[6], double* prob);
PSL_API psl_status psl_ann_save(const psl_ann* m, const char* path);
PSL_API psl_status psl_ann_load(const char* path, psl_ann** out);
/* fold_accuracy may be NULL or hold k values. */
PSL_API psl_status psl_ann_kfold_grid(const psl_grid* g, size_t k, const psl_train_config* cfg, psl_kfold* out,
                                      double* fold_accuracy);
PSL_API void psl_ann_free(psl_ann* m);
PSL_API psl_status psl_write_eval_csv(const psl_eval* e, const char* path);

/* ---- synthetic cities and count distribution ---- */
/* which: 0 city A (default), 1 city B (alternate). Returns spec JSON. */
PSL_API psl_status psl_synth_default_spec(int which, uint64_t seed, char** spec_json);
/* Writes points CSV and label GeoJSON; frame receives the spec frame. */
PSL_API psl_status psl_synth_city(const char* spec_json, const char* points_path, const char* labels_path,
                                  psl_rect* frame);

typedef struct psl_decay_fit {
    double lambda, amplitude, r_squared;
    size_t n_bins;
} psl_decay_fit;

PSL_API psl_status psl_decay_fit_counts(const uint32_t* counts, size_t n, psl_decay_fit* out);
PSL_API psl_status psl_decay_fit_grid(const psl_grid* g, psl_decay_fit* out);

/* ---- full pipeline ---- */
/* Runs the pipeline described by config_json; summary_json (optional) receives
   the run summary and must be released with psl_string_free. */
PSL_API psl_status psl_pipeline_run(const char* config_json, char** summary_json);
PSL_API psl_status psl_pipeline_default_config(char** config_json);

#ifdef __cplusplus
}
#endif

#endif
