// Command-line front end. Talks to the library only through predictslums.h.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "predictslums/predictslums.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitInternal = 1;

int exit_code(psl_status s) {
    switch (s) {
        case PSL_OK: return 0;
        case PSL_ERR_ARGUMENT: return kExitConfig;
        case PSL_ERR_NUMERICAL: return kExitNumerical;
        case PSL_ERR_INTERNAL: return kExitInternal;
        default: return kExitData;
    }
}

struct Failure {
    psl_status status;
};

void check(psl_status s) {
    if (s != PSL_OK) throw Failure{s};
}

struct PointsDel {
    void operator()(psl_points* p) const { psl_points_free(p); }
};
struct GridDel {
    void operator()(psl_grid* g) const { psl_grid_free(g); }
};
struct AnnDel {
    void operator()(psl_ann* m) const { psl_ann_free(m); }
};
using Points = std::unique_ptr<psl_points, PointsDel>;
using Grid = std::unique_ptr<psl_grid, GridDel>;
using Ann = std::unique_ptr<psl_ann, AnnDel>;

Points load_points(const std::string& points, const std::string& polylines, double snap_tol) {
    psl_points* p = nullptr;
    if (!polylines.empty())
        check(psl_points_from_polylines(polylines.c_str(), snap_tol, &p));
    else
        check(psl_points_read_csv(points.c_str(), &p));
    return Points(p);
}

Grid load_grid(const std::string& path, double cell_size) {
    psl_grid* g = nullptr;
    check(psl_grid_read_csv(path.c_str(), cell_size, &g));
    return Grid(g);
}

Ann load_ann(const std::string& path) {
    psl_ann* m = nullptr;
    check(psl_ann_load(path.c_str(), &m));
    return Ann(m);
}

psl_rect resolve_frame(const psl_points* p, const std::vector<double>& frame, bool force_degrees) {
    psl_rect r{};
    if (frame.empty())
        check(psl_points_bounds(p, &r));
    else
        r = {frame[0], frame[1], frame[2], frame[3]};
    check(psl_check_projected(r, force_degrees ? 1 : 0));
    return r;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void print_eval(const psl_eval& e) {
    std::cout << "              actual formal  actual informal\n"
              << "pred formal   " << e.confusion[0][0] << "  " << e.confusion[0][1] << '\n'
              << "pred informal " << e.confusion[1][0] << "  " << e.confusion[1][1] << '\n'
              << "accuracy " << fmt(e.accuracy) << " (" << e.total << " cells)\n";
}

struct TrainFlags {
    std::size_t epochs = 0;
    double dropout = -1.0;
    bool no_coords = false;
    std::size_t batch = 0;
    double lr = 0.0;

    void add(CLI::App* app) {
        app->add_option("--epochs", epochs, "training epochs (default 600; 100 for a quick run)");
        app->add_option("--dropout", dropout, "dropout rate for hidden layers (0.5 when enabled)")->check(CLI::Range(0.0, 0.99));
        app->add_flag("--no-coords", no_coords, "drop the centroid coordinates from the inputs");
        app->add_option("--batch-size", batch, "mini-batch size");
        app->add_option("--learning-rate", lr, "Adam step size");
    }
    psl_train_config config(std::uint64_t seed) const {
        psl_train_config c = psl_train_config_default();
        if (epochs > 0) c.epochs = epochs;
        if (dropout >= 0.0) c.dropout = dropout;
        if (no_coords) c.use_coords = 0;
        if (batch > 0) c.batch_size = batch;
        if (lr > 0.0) c.learning_rate = lr;
        c.seed = seed;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictslums: informal settlement detection from street intersections"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(psl_version()));

    std::uint64_t seed = 0;
    double band = 344.0, cell_size = 100.0, alpha = 0.05, snap_tol = 0.5;
    bool force_degrees = false;
    std::vector<double> frame;
    std::string points_in, polylines_in, grid_in, labels_in, model_in, out, out_dir;
    TrainFlags tf;

    auto add_seed = [&](CLI::App* s) { s->add_option("--seed", seed, "root random seed"); };
    auto add_frame = [&](CLI::App* s) {
        s->add_option("--frame", frame, "study frame min_x min_y max_x max_y (default: point bounds)")->expected(4)->delimiter(',');
        s->add_flag("--force-degrees", force_degrees, "accept coordinates that look like degrees");
    };
    auto add_points = [&](CLI::App* s, bool required) {
        auto* g = s->add_option_group("input");
        g->add_option("--points", points_in, "x,y CSV of intersection points");
        g->add_option("--polylines", polylines_in, "street polylines (line_id,seq,x,y CSV or GeoJSON)");
        if (required) g->require_option(1);
        s->add_option("--snap-tol", snap_tol, "node merge tolerance in meters")->check(CLI::NonNegativeNumber);
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "extract/clean intersection points");
    add_points(ingest, true);
    double dedupe_tol = 0.0;
    ingest->add_option("--dedupe", dedupe_tol, "merge points within this distance");
    ingest->add_option("-o,--out", out, "output points CSV")->required();
    ingest->add_flag("--force-degrees", force_degrees, "accept coordinates that look like degrees");

    // stats
    auto* stats = app.add_subcommand("stats", "Clark-Evans ratio and Ripley L with envelope");
    add_points(stats, true);
    add_frame(stats);
    add_seed(stats);
    std::size_t permutations = 99;
    std::vector<double> distances;
    stats->add_option("--permutations", permutations, "envelope resamples")->check(CLI::PositiveNumber);
    stats->add_option("--distances", distances, "L(d) distances (default 50..1000 step 50)")->delimiter(',');
    stats->add_option("-o,--out", out, "L-function CSV");

    // grid
    auto* grid = app.add_subcommand("grid", "aggregate points to a lattice and count band neighbours");
    add_points(grid, true);
    add_frame(grid);
    grid->add_option("--cell-size", cell_size, "cell edge in meters")->check(CLI::PositiveNumber);
    grid->add_option("--band", band, "neighbour band distance in meters")->check(CLI::PositiveNumber);
    grid->add_option("-o,--out", out, "grid CSV")->required();

    // hotspot
    auto* hotspot = app.add_subcommand("hotspot", "Getis-Ord Gi* with FDR, optional local Moran");
    hotspot->add_option("--grid", grid_in, "grid CSV")->required();
    hotspot->add_option("--band", band, "band distance in meters")->check(CLI::PositiveNumber);
    hotspot->add_option("--alpha", alpha, "FDR level")->check(CLI::Range(0.0, 1.0));
    hotspot->add_option("--labels", labels_in, "label CSV or GeoJSON to join");
    std::string moran_out;
    hotspot->add_option("--moran", moran_out, "also run local Moran and write its CSV here");
    add_seed(hotspot);
    hotspot->add_option("-o,--out", out, "grid CSV with gi_z, p and category")->required();

    // mnl
    auto* mnl = app.add_subcommand("mnl", "t-tests and multinomial logit of category on nneighbors and formality");
    mnl->add_option("--grid", grid_in, "categorised grid CSV")->required();
    mnl->add_option("--labels", labels_in, "label CSV or GeoJSON to join");
    mnl->add_option("-o,--out", out, "coefficient CSV");

    // train
    auto* trn = app.add_subcommand("train", "train the informality classifier");
    trn->add_option("--grid", grid_in, "categorised grid CSV")->required();
    trn->add_option("--labels", labels_in, "label CSV or GeoJSON to join");
    trn->add_option("--model", model_in, "output model file")->required();
    std::string history_out, confusion_out;
    trn->add_option("--history", history_out, "per-epoch CSV");
    trn->add_option("--confusion", confusion_out, "validation confusion CSV");
    tf.add(trn);
    add_seed(trn);

    // predict
    auto* pred = app.add_subcommand("predict", "apply a model to every grid cell");
    pred->add_option("--grid", grid_in, "categorised grid CSV")->required();
    pred->add_option("--model", model_in, "model file")->required();
    pred->add_option("-o,--out", out, "grid CSV with prob,pred")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "confusion matrix of a model on labelled cells");
    eval->add_option("--grid", grid_in, "categorised grid CSV")->required();
    eval->add_option("--labels", labels_in, "label CSV or GeoJSON to join");
    eval->add_option("--model", model_in, "model file")->required();
    eval->add_option("-o,--out", out, "confusion CSV");

    // cv
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    cv->add_option("--grid", grid_in, "categorised grid CSV")->required();
    cv->add_option("--labels", labels_in, "label CSV or GeoJSON to join");
    std::size_t folds = 10;
    cv->add_option("-k,--folds", folds, "number of folds")->check(CLI::Range(2, 1000));
    tf.add(cv);
    add_seed(cv);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic checkerboard city");
    std::string city = "A", spec_in, spec_out;
    synth->add_option("--city", city, "built-in layout A or B")->check(CLI::IsMember({"A", "B"}));
    synth->add_option("--spec", spec_in, "city spec JSON (overrides --city)");
    synth->add_option("--spec-out", spec_out, "write the resolved spec JSON");
    synth->add_option("--points", points_in, "output points CSV")->required();
    synth->add_option("--labels", labels_in, "output label GeoJSON")->required();
    add_seed(synth);

    // decay-fit
    auto* decay = app.add_subcommand("decay-fit", "exponential fit of the per-cell count distribution");
    decay->add_option("--grid", grid_in, "grid CSV")->required();

    // run
    auto* run = app.add_subcommand("run", "full pipeline");
    std::string config_in;
    run->add_option("--config", config_in, "pipeline config JSON");
    add_points(run, false);
    add_frame(run);
    run->add_option("--labels", labels_in, "label CSV or GeoJSON");
    run->add_option("--model", model_in, "predict with this model instead of training");
    run->add_option("--out-dir", out_dir, "output directory");
    run->add_option("--cell-size", cell_size, "cell edge in meters")->check(CLI::PositiveNumber);
    run->add_option("--band", band, "band distance in meters")->check(CLI::PositiveNumber);
    run->add_option("--alpha", alpha, "FDR level")->check(CLI::Range(0.0, 1.0));
    run->add_option("--permutations", permutations, "envelope/Moran permutations")->check(CLI::PositiveNumber);
    std::size_t kfold = 0;
    run->add_option("--kfold", kfold, "also run k-fold CV with this many folds");
    std::vector<double> sweep;
    run->add_option("--sweep-bands", sweep, "band sweep, e.g. 200,300,344,400")->delimiter(',');
    bool moran = false;
    run->add_flag("--moran", moran, "also compute local Moran");
    tf.add(run);
    add_seed(run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    auto join = [&](psl_grid* g) {
        if (!labels_in.empty()) check(psl_grid_join_labels(g, labels_in.c_str()));
    };

    try {
        if (*ingest) {
            auto p = load_points(points_in, polylines_in, snap_tol);
            psl_rect r{};
            check(psl_points_bounds(p.get(), &r));
            check(psl_check_projected(r, force_degrees ? 1 : 0));
            if (dedupe_tol > 0.0) {
                psl_points* d = nullptr;
                check(psl_points_dedupe(p.get(), dedupe_tol, &d));
                p.reset(d);
            }
            check(psl_points_write_csv(p.get(), out.c_str()));
            std::cout << psl_points_count(p.get()) << " points\n";
        } else if (*stats) {
            auto p = load_points(points_in, polylines_in, snap_tol);
            const psl_rect r = resolve_frame(p.get(), frame, force_degrees);
            psl_nn_result nn{};
            check(psl_nearest_neighbor(p.get(), r, &nn));
            std::cout << "n " << nn.n << "\narea " << fmt(nn.area) << "\nobserved_mean_dist " << fmt(nn.observed_mean_dist)
                      << "\nexpected_mean_dist " << fmt(nn.expected_mean_dist) << "\nratio " << fmt(nn.ratio)
                      << "\nz_score " << fmt(nn.z_score) << '\n';
            if (distances.empty())
                for (int k = 1; k <= 20; ++k) distances.push_back(50.0 * k);
            if (!out.empty())
                check(psl_ripley_l_csv(p.get(), r, distances.data(), distances.size(), permutations, seed, out.c_str()));
        } else if (*grid) {
            auto p = load_points(points_in, polylines_in, snap_tol);
            const psl_rect r = resolve_frame(p.get(), frame, force_degrees);
            psl_grid* g = nullptr;
            check(psl_grid_build(p.get(), r, cell_size, &g));
            Grid gg(g);
            check(psl_grid_count_neighbors(g, p.get(), band));
            check(psl_grid_write_csv(g, out.c_str()));
            std::size_t cols = 0, rows = 0;
            check(psl_grid_dims(g, &cols, &rows, nullptr));
            std::cout << cols << " x " << rows << " cells\n";
        } else if (*hotspot) {
            auto g = load_grid(grid_in, cell_size);
            psl_hotspot_summary s{};
            check(psl_grid_hotspots(g.get(), band, alpha, &s));
            if (!moran_out.empty()) {
                check(psl_grid_local_moran(g.get(), band, 99, seed, alpha));
                std::size_t cols = 0, rows = 0;
                check(psl_grid_dims(g.get(), &cols, &rows, nullptr));
                static const char* codes[] = {"HH", "LL", "HL", "LH", "NS"};
                std::ofstream mo(moran_out, std::ios::binary);
                mo << "col,row,local_i,p,quadrant,class\n";
                for (std::size_t i = 0; i < cols * rows; ++i) {
                    psl_cell c{};
                    check(psl_grid_cell(g.get(), i, &c));
                    mo << c.col << ',' << c.row << ',' << fmt(c.moran_i) << ',' << fmt(c.moran_p) << ','
                       << codes[c.moran_quadrant] << ',' << codes[c.moran_class] << '\n';
                }
                if (!mo) {
                    std::cerr << "error: cannot write " << moran_out << '\n';
                    return kExitData;
                }
            }
            join(g.get());
            check(psl_grid_write_csv(g.get(), out.c_str()));
            std::cout << "hot " << s.hot << "\nnot_significant " << s.not_significant << "\ncold " << s.cold
                      << "\nfdr_threshold " << fmt(s.adjusted_threshold) << '\n';
        } else if (*mnl) {
            auto g = load_grid(grid_in, cell_size);
            join(g.get());
            psl_mnl_report r{};
            check(psl_mnl_fit_grid(g.get(), &r));
            const char* cats[2] = {"cold", "hot"};
            const char* terms[3] = {"intercept", "nneighbors", "formal"};
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < 3; ++a)
                    std::cout << cats[k] << ' ' << terms[a] << " B " << fmt(r.b[k][a]) << " SE " << fmt(r.se[k][a]) << '\n';
            std::cout << "pseudo_r2 " << fmt(r.pseudo_r2) << "\nlr_chi2 " << fmt(r.lr_chi2) << " (df " << r.lr_df
                      << ", p " << fmt(r.lr_p) << ")\naccuracy " << fmt(r.accuracy) << '\n';
            if (!out.empty()) check(psl_mnl_write_report(&r, out.c_str()));
            const char* vars[2] = {"nneighbors", "gi_z"};
            for (int v = 0; v < 2; ++v) {
                psl_ttest t{};
                check(psl_grid_t_test(g.get(), v, &t));
                std::cout << "t-test " << vars[v] << ": formal mean " << fmt(t.mean_a) << " (n " << t.n_a
                          << "), informal mean " << fmt(t.mean_b) << " (n " << t.n_b << "), t " << fmt(t.t) << ", df "
                          << fmt(t.df) << ", p " << fmt(t.p_value) << '\n';
            }
        } else if (*trn) {
            auto g = load_grid(grid_in, cell_size);
            join(g.get());
            const psl_train_config c = tf.config(seed);
            psl_ann* m = nullptr;
            psl_eval e{};
            check(psl_ann_train_grid(g.get(), &c, &m, &e));
            Ann mm(m);
            check(psl_ann_save(m, model_in.c_str()));
            if (!history_out.empty()) check(psl_ann_write_history(m, history_out.c_str()));
            if (!confusion_out.empty()) check(psl_write_eval_csv(&e, confusion_out.c_str()));
            std::cout << "validation\n";
            print_eval(e);
        } else if (*pred) {
            auto g = load_grid(grid_in, cell_size);
            auto m = load_ann(model_in);
            check(psl_ann_predict_grid(m.get(), g.get()));
            check(psl_grid_write_csv(g.get(), out.c_str()));
        } else if (*eval) {
            auto g = load_grid(grid_in, cell_size);
            join(g.get());
            auto m = load_ann(model_in);
            psl_eval e{};
            check(psl_ann_evaluate_grid(m.get(), g.get(), &e));
            print_eval(e);
            if (!out.empty()) check(psl_write_eval_csv(&e, out.c_str()));
        } else if (*cv) {
            auto g = load_grid(grid_in, cell_size);
            join(g.get());
            const psl_train_config c = tf.config(seed);
            psl_kfold k{};
            std::vector<double> acc(folds);
            check(psl_ann_kfold_grid(g.get(), folds, &c, &k, acc.data()));
            for (std::size_t f = 0; f < folds; ++f) std::cout << "fold " << f + 1 << " accuracy " << fmt(acc[f]) << '\n';
            std::cout << "mean " << fmt(k.mean_accuracy) << "\nvariance " << fmt(k.variance) << "\ncv_squared_error "
                      << fmt(k.cv_squared_error) << '\n';
        } else if (*synth) {
            std::string spec;
            if (!spec_in.empty()) {
                std::ifstream in(spec_in, std::ios::binary);
                if (!in) {
                    std::cerr << "error: cannot read " << spec_in << '\n';
                    return kExitConfig;
                }
                std::ostringstream ss;
                ss << in.rdbuf();
                spec = ss.str();
            } else {
                char* s = nullptr;
                check(psl_synth_default_spec(city == "A" ? 0 : 1, seed, &s));
                spec = s;
                psl_string_free(s);
            }
            psl_rect r{};
            check(psl_synth_city(spec.c_str(), points_in.c_str(), labels_in.c_str(), &r));
            if (!spec_out.empty()) {
                std::ofstream so(spec_out, std::ios::binary);
                so << spec;
            }
            std::cout << "frame " << fmt(r.min_x) << ',' << fmt(r.min_y) << ',' << fmt(r.max_x) << ',' << fmt(r.max_y) << '\n';
        } else if (*decay) {
            auto g = load_grid(grid_in, cell_size);
            psl_decay_fit d{};
            check(psl_decay_fit_grid(g.get(), &d));
            std::cout << "lambda " << fmt(d.lambda) << "\namplitude " << fmt(d.amplitude) << "\nr_squared "
                      << fmt(d.r_squared) << "\nbins " << d.n_bins << '\n';
        } else if (*run) {
            nlohmann::json cfg = nlohmann::json::object();
            if (!config_in.empty()) {
                std::ifstream in(config_in, std::ios::binary);
                if (!in) {
                    std::cerr << "error: cannot read " << config_in << '\n';
                    return kExitConfig;
                }
                try {
                    in >> cfg;
                } catch (const nlohmann::json::exception& e) {
                    std::cerr << "error: " << config_in << ": " << e.what() << '\n';
                    return kExitConfig;
                }
            }
            // Command-line flags override the config file.
            auto set = [&](const char* flag, const char* key, auto value) {
                if (run->count(flag) > 0) cfg[key] = value;
            };
            set("--points", "points", points_in);
            set("--polylines", "polylines", polylines_in);
            set("--snap-tol", "snap_tol", snap_tol);
            set("--frame", "frame", frame);
            set("--force-degrees", "force_degrees", force_degrees);
            set("--labels", "labels", labels_in);
            set("--model", "model", model_in);
            set("--out-dir", "out_dir", out_dir);
            set("--cell-size", "cell_size", cell_size);
            set("--band", "band", band);
            set("--alpha", "alpha", alpha);
            set("--permutations", "permutations", permutations);
            set("--kfold", "kfold", kfold);
            set("--sweep-bands", "sweep_bands", sweep);
            set("--moran", "moran", moran);
            set("--seed", "seed", seed);
            if (run->count("--epochs") > 0) cfg["train"]["epochs"] = tf.epochs;
            if (run->count("--dropout") > 0) cfg["train"]["dropout"] = tf.dropout;
            if (run->count("--no-coords") > 0) cfg["train"]["use_coords"] = false;
            if (run->count("--batch-size") > 0) cfg["train"]["batch_size"] = tf.batch;
            if (run->count("--learning-rate") > 0) cfg["train"]["learning_rate"] = tf.lr;
            char* summary = nullptr;
            check(psl_pipeline_run(cfg.dump().c_str(), &summary));
            std::cout << summary;
            psl_string_free(summary);
        }
    } catch (const Failure& f) {
        std::cerr << "error (" << psl_status_string(f.status) << "): " << psl_last_error() << '\n';
        return exit_code(f.status);
    }
    return 0;
}
