#include "predictslums/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <sstream>

#include "json.hpp"

#include "predictslums/error.hpp"
#include "predictslums/inference.hpp"
#include "predictslums/ingest.hpp"
#include "predictslums/rng.hpp"
#include "predictslums/synth.hpp"
#include "predictslums/text.hpp"

namespace psl {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<double> default_k_distances() {
    std::vector<double> d;
    for (int k = 1; k <= 20; ++k) d.push_back(50.0 * k);
    return d;
}

class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".predictslums.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            fail(ErrorKind::Argument, "output directory '" + dir.string() + "' is locked by another run (remove " +
                                          path_.string() + " if stale)");
    }
    ~DirLock() {
        ::close(fd_);
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

bool is_json_file(const std::string& path, const std::string& body) {
    const auto t = text::trim(body);
    return (!t.empty() && t.front() == '{') || path.ends_with(".json") || path.ends_with(".geojson");
}

void join_labels_file(GridLattice& grid, const std::string& path) {
    const std::string body = text::read_file(path);
    if (is_json_file(path, body)) {
        const auto polys = parse_label_geojson(body);
        join_labels_polygons(grid, polys);
    } else {
        join_labels_csv(grid, body);
    }
}

std::string ttest_csv(const TTestResult& nn, const TTestResult& gi) {
    std::string out = "variable,n_formal,mean_formal,sd_formal,se_formal,n_informal,mean_informal,sd_informal,se_informal,t,df,se_diff,ci_low,ci_high,p\n";
    auto row = [&](const char* name, const TTestResult& r) {
        out += std::string(name) + ',' + std::to_string(r.n_a) + ',' + text::format_double(r.mean_a) + ',' +
               text::format_double(r.sd_a) + ',' + text::format_double(r.se_a) + ',' + std::to_string(r.n_b) + ',' +
               text::format_double(r.mean_b) + ',' + text::format_double(r.sd_b) + ',' + text::format_double(r.se_b) + ',' +
               text::format_double(r.t) + ',' + text::format_double(r.df) + ',' + text::format_double(r.se_diff) + ',' +
               text::format_double(r.ci_low) + ',' + text::format_double(r.ci_high) + ',' + text::format_double(r.p_value) + '\n';
    };
    row("nneighbors", nn);
    row("gi_z", gi);
    return out;
}

std::string mnl_csv(const MnlModel& m, const MnlDiagnostics& d) {
    std::string out = "category,term,b,se,exp_b\n";
    const char* cats[2] = {"cold", "hot"};
    const char* terms[3] = {"intercept", "nneighbors", "formal"};
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t a = 0; a < 3; ++a)
            out += std::string(cats[k]) + ',' + terms[a] + ',' + text::format_double(m.coefficients[k][a]) + ',' +
                   text::format_double(m.std_errors[k][a]) + ',' + text::format_double(std::exp(m.coefficients[k][a])) + '\n';
    out += "model,log_likelihood,," + text::format_double(d.log_likelihood) + ",\n";
    out += "model,null_log_likelihood,," + text::format_double(d.null_log_likelihood) + ",\n";
    out += "model,pseudo_r2,," + text::format_double(d.pseudo_r2) + ",\n";
    out += "model,lr_chi2,," + text::format_double(d.lr_chi2) + ",\n";
    out += "model,lr_p,," + text::format_double(d.lr_p) + ",\n";
    return out;
}

std::string history_csv(const std::vector<EpochStats>& h) {
    std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
    for (std::size_t e = 0; e < h.size(); ++e)
        out += std::to_string(e + 1) + ',' + text::format_double(h[e].train_loss) + ',' + text::format_double(h[e].train_accuracy) +
               ',' + text::format_double(h[e].val_loss) + ',' + text::format_double(h[e].val_accuracy) + '\n';
    return out;
}

std::string confusion_csv(const EvalReport& r) {
    std::string out = "predicted,actual_formal,actual_informal\n";
    out += "formal," + std::to_string(r.confusion[0][0]) + ',' + std::to_string(r.confusion[0][1]) + '\n';
    out += "informal," + std::to_string(r.confusion[1][0]) + ',' + std::to_string(r.confusion[1][1]) + '\n';
    out += "total," + std::to_string(r.total) + ",\n";
    out += "accuracy," + text::format_double(r.overall_accuracy) + ",\n";
    return out;
}

std::string moran_csv(const GridLattice& g) {
    std::string out = "col,row,local_i,p,quadrant,class\n";
    for (const auto& c : g.cells)
        out += std::to_string(c.col) + ',' + std::to_string(c.row) + ',' + text::format_double(c.moran_i.value_or(0.0)) + ',' +
               text::format_double(c.moran_p.value_or(1.0)) + ',' + moran_code(c.moran_quadrant.value_or(MoranClass::NotSignificant)) +
               ',' + moran_code(c.moran_class.value_or(MoranClass::NotSignificant)) + '\n';
    return out;
}

// Runs fn under a stage name; failures are rethrown with the stage prefixed.
template <class Fn>
void stage(const char* name, PipelineSummary& summary, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage '") + name + "': " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Io, std::string("stage '") + name + "': " + e.what());
    }
    summary.stages_completed.emplace_back(name);
}

}  // namespace

std::string config_to_json(const PipelineConfig& c) {
    ojson j;
    j["points"] = c.points_path;
    j["polylines"] = c.polylines_path;
    j["labels"] = c.labels_path;
    j["model"] = c.model_path;
    j["out_dir"] = c.out_dir;
    j["frame"] = c.frame ? ojson{c.frame->min_x, c.frame->min_y, c.frame->max_x, c.frame->max_y} : ojson(nullptr);
    j["snap_tol"] = c.snap_tol;
    j["force_degrees"] = c.force_degrees;
    j["cell_size"] = c.cell_size;
    j["band"] = c.band;
    j["alpha"] = c.alpha;
    j["permutations"] = c.permutations;
    j["k_distances"] = c.k_distances.empty() ? default_k_distances() : c.k_distances;
    j["skip_stats"] = c.skip_stats;
    j["moran"] = c.moran;
    j["kfold"] = c.kfold;
    j["sweep_bands"] = c.sweep_bands;
    j["seed"] = c.seed;
    ojson t;
    t["learning_rate"] = c.train.learning_rate;
    t["beta1"] = c.train.beta1;
    t["beta2"] = c.train.beta2;
    t["epsilon"] = c.train.epsilon;
    t["batch_size"] = c.train.batch_size;
    t["epochs"] = c.train.epochs;
    t["train_fraction"] = c.train.train_fraction;
    t["dropout"] = c.train.dropout;
    t["use_coords"] = c.train.use_coords;
    t["hidden"] = c.train.hidden;
    j["train"] = t;
    return j.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view body) {
    PipelineConfig c;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Argument, std::string("config: ") + e.what());
    }
    static const char* const known[] = {"points", "polylines", "labels", "model", "out_dir", "frame", "snap_tol",
                                        "force_degrees", "cell_size", "band", "alpha", "permutations", "k_distances",
                                        "skip_stats", "moran", "kfold", "sweep_bands", "seed", "train"};
    for (const auto& [key, _] : j.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            fail(ErrorKind::Argument, "config: unknown key '" + key + "'");
    try {
        c.points_path = j.value("points", c.points_path);
        c.polylines_path = j.value("polylines", c.polylines_path);
        c.labels_path = j.value("labels", c.labels_path);
        c.model_path = j.value("model", c.model_path);
        c.out_dir = j.value("out_dir", c.out_dir);
        if (j.contains("frame") && !j["frame"].is_null()) {
            const auto& f = j["frame"];
            if (!f.is_array() || f.size() != 4) fail(ErrorKind::Argument, "config: frame is [min_x, min_y, max_x, max_y]");
            c.frame = Rect{f[0].get<double>(), f[1].get<double>(), f[2].get<double>(), f[3].get<double>()};
        }
        c.snap_tol = j.value("snap_tol", c.snap_tol);
        c.force_degrees = j.value("force_degrees", c.force_degrees);
        c.cell_size = j.value("cell_size", c.cell_size);
        c.band = j.value("band", c.band);
        c.alpha = j.value("alpha", c.alpha);
        c.permutations = j.value("permutations", c.permutations);
        c.k_distances = j.value("k_distances", c.k_distances);
        c.skip_stats = j.value("skip_stats", c.skip_stats);
        c.moran = j.value("moran", c.moran);
        c.kfold = j.value("kfold", c.kfold);
        c.sweep_bands = j.value("sweep_bands", c.sweep_bands);
        c.seed = j.value("seed", c.seed);
        if (j.contains("train")) {
            const auto& t = j["train"];
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            c.train.beta1 = t.value("beta1", c.train.beta1);
            c.train.beta2 = t.value("beta2", c.train.beta2);
            c.train.epsilon = t.value("epsilon", c.train.epsilon);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.train_fraction = t.value("train_fraction", c.train.train_fraction);
            c.train.dropout = t.value("dropout", c.train.dropout);
            c.train.use_coords = t.value("use_coords", c.train.use_coords);
            c.train.hidden = t.value("hidden", c.train.hidden);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Argument, std::string("config: ") + e.what());
    }
    return c;
}

std::string summary_to_json(const PipelineSummary& s) {
    ojson j;
    j["status"] = "complete";
    j["out_dir"] = s.out_dir;
    j["points"] = s.points;
    j["cells"] = s.cells;
    j["labelled_cells"] = s.labelled_cells;
    j["hot"] = s.hot;
    j["not_significant"] = s.not_significant;
    j["cold"] = s.cold;
    if (s.nn) {
        j["nn"] = {{"observed_mean_dist", s.nn->observed_mean_dist},
                   {"expected_mean_dist", s.nn->expected_mean_dist},
                   {"ratio", s.nn->ratio},
                   {"z_score", s.nn->z_score}};
    }
    if (s.validation_accuracy) j["validation_accuracy"] = *s.validation_accuracy;
    if (s.evaluation_accuracy) j["evaluation_accuracy"] = *s.evaluation_accuracy;
    if (s.kfold_mean) j["kfold_mean_accuracy"] = *s.kfold_mean;
    if (s.kfold_variance) j["kfold_variance"] = *s.kfold_variance;
    j["stages"] = s.stages_completed;
    j["notes"] = s.notes;
    return j.dump(2) + "\n";
}

PipelineSummary run_pipeline(const PipelineConfig& cfg) {
    require(!cfg.points_path.empty() || !cfg.polylines_path.empty(), "config needs either points or polylines input");
    require(cfg.permutations >= 1, "permutations must be >= 1");
    const fs::path out(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    DirLock lock(out);
    const fs::path incomplete = out / "INCOMPLETE";
    text::write_file(incomplete.string(), "run started\n");
    text::write_file((out / "resolved_config.json").string(), config_to_json(cfg));

    PipelineSummary summary;
    summary.out_dir = cfg.out_dir;
    auto file = [&](const char* name) { return (out / name).string(); };

    try {
        PointSet points;
        Rect frame;
        stage("ingest", summary, [&] {
            if (!cfg.points_path.empty()) {
                points = parse_point_csv(text::read_file(cfg.points_path));
            } else {
                const auto lines = read_polylines(cfg.polylines_path);
                points = extract_intersections(lines, cfg.snap_tol);
            }
            if (points.empty()) fail(ErrorKind::Data, "no input points");
            frame = cfg.frame.value_or(bounding_rect(points));
            check_projected(frame, cfg.force_degrees);
            if (frame.degenerate()) fail(ErrorKind::Data, "points span a zero-area frame");
            summary.points = points.size();
            text::write_file(file("points.csv"), format_point_csv(points));
        });

        if (!cfg.skip_stats) {
            stage("stats", summary, [&] {
                summary.nn = nearest_neighbor_stat(points, frame);
                const auto d = cfg.k_distances.empty() ? default_k_distances() : cfg.k_distances;
                const auto k = ripley_l(points, frame, d, cfg.permutations, derive_seed(cfg.seed, "ripley"));
                text::write_file(file("ripley_l.csv"), format_k_csv(k));
                const auto& nn = *summary.nn;
                text::write_file(file("nearest_neighbor.csv"),
                                 "n,area,observed_mean_dist,expected_mean_dist,ratio,z_score\n" + std::to_string(nn.n) + ',' +
                                     text::format_double(nn.area) + ',' + text::format_double(nn.observed_mean_dist) + ',' +
                                     text::format_double(nn.expected_mean_dist) + ',' + text::format_double(nn.ratio) + ',' +
                                     text::format_double(nn.z_score) + '\n');
            });
        }

        GridLattice grid;
        stage("aggregate", summary, [&] { grid = aggregate_to_grid(points, frame, cfg.cell_size); });
        stage("count_neighbors", summary, [&] { count_neighbors(points, grid, cfg.band); });
        stage("hotspot", summary, [&] {
            const auto hs = hotspot_analysis(grid, cfg.band, cfg.alpha);
            summary.hot = hs.hot;
            summary.not_significant = hs.not_significant;
            summary.cold = hs.cold;
            summary.cells = grid.size();
        });
        if (cfg.moran) {
            stage("local_moran", summary, [&] {
                local_moran(grid, cfg.band, cfg.permutations, derive_seed(cfg.seed, "moran"), cfg.alpha);
                text::write_file(file("moran.csv"), moran_csv(grid));
            });
        }

        const bool training = cfg.model_path.empty();
        stage("join_labels", summary, [&] {
            if (cfg.labels_path.empty()) {
                if (training)
                    fail(ErrorKind::Data, "training was requested but no labels file was given (set 'labels' or supply a model)");
                return;
            }
            join_labels_file(grid, cfg.labels_path);
            for (const auto& c : grid.cells) summary.labelled_cells += c.label != Label::Unlabeled;
            if (training && summary.labelled_cells == 0) fail(ErrorKind::Data, "no grid cell received a label");
        });
        text::write_file(file("grid.csv"), format_grid_csv(grid));

        if (summary.labelled_cells > 0) {
            stage("inference", summary, [&] {
                const auto t_nn = formal_vs_informal_t_test(grid, TTestVariable::NNeighbors);
                const auto t_gi = formal_vs_informal_t_test(grid, TTestVariable::GiZ);
                text::write_file(file("ttest.csv"), ttest_csv(t_nn, t_gi));
                // The logit is descriptive only; a separated or singular design
                // is reported and the run carries on to the classifier.
                const auto samples = mnl_samples_from_grid(grid);
                try {
                    const auto model = fit_mnl(samples);
                    const auto diag = mnl_diagnostics(model, samples);
                    text::write_file(file("mnl.csv"), mnl_csv(model, diag));
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Numerical) throw;
                    summary.notes.push_back(std::string("multinomial logit not estimable: ") + e.what());
                    text::write_file(file("mnl.csv"), std::string("status,reason\nnot_estimable,\"") + e.what() + "\"\n");
                }
            });
        }

        const std::vector<LabeledRow> rows = summary.labelled_cells > 0 ? rows_from_grid(grid) : std::vector<LabeledRow>{};
        AnnModel model;
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.seed, "ann");
        if (training) {
            stage("train", summary, [&] {
                auto res = train(rows, tc);
                model = std::move(res.model);
                summary.validation_accuracy = res.report.overall_accuracy;
                save_model(model, file("model.bin"));
                text::write_file(file("history.csv"), history_csv(res.report.history));
                text::write_file(file("confusion.csv"), confusion_csv(res.report));
            });
        } else {
            stage("load_model", summary, [&] { model = load_model(cfg.model_path); });
            if (!rows.empty()) {
                stage("evaluate", summary, [&] {
                    const auto rep = evaluate(model, rows);
                    summary.evaluation_accuracy = rep.overall_accuracy;
                    text::write_file(file("confusion.csv"), confusion_csv(rep));
                });
            }
        }
        stage("predict", summary, [&] {
            predict_grid(model, grid);
            text::write_file(file("predictions.csv"), format_grid_csv(grid));
        });

        if (cfg.kfold > 0) {
            stage("kfold", summary, [&] {
                const auto kf = kfold_cv(rows, cfg.kfold, tc);
                summary.kfold_mean = kf.mean_accuracy;
                summary.kfold_variance = kf.variance;
                std::string csv = "fold,accuracy\n";
                for (std::size_t f = 0; f < kf.fold_accuracy.size(); ++f)
                    csv += std::to_string(f + 1) + ',' + text::format_double(kf.fold_accuracy[f]) + '\n';
                csv += "mean," + text::format_double(kf.mean_accuracy) + "\nvariance," + text::format_double(kf.variance) +
                       "\ncv_squared_error," + text::format_double(kf.cv_squared_error) + '\n';
                text::write_file(file("kfold.csv"), csv);
            });
        }

        if (!cfg.sweep_bands.empty()) {
            stage("band_sweep", summary, [&] {
                if (rows.empty()) fail(ErrorKind::Data, "band sweep needs labelled cells");
                std::string csv = "band,hot,cold,hotspot_agreement,validation_accuracy\n";
                for (double band : cfg.sweep_bands) {
                    GridLattice g = grid;
                    count_neighbors(points, g, band);
                    const auto hs = hotspot_analysis(g, band, cfg.alpha);
                    std::size_t agree = 0, labelled = 0;
                    for (const auto& c : g.cells) {
                        if (c.label == Label::Unlabeled) continue;
                        ++labelled;
                        agree += (*c.category == Category::Hot) == (c.label == Label::Informal);
                    }
                    const auto res = train(rows_from_grid(g), tc);
                    csv += text::format_double(band) + ',' + std::to_string(hs.hot) + ',' + std::to_string(hs.cold) + ',' +
                           text::format_double(static_cast<double>(agree) / static_cast<double>(labelled)) + ',' +
                           text::format_double(res.report.overall_accuracy) + '\n';
                }
                text::write_file(file("band_sweep.csv"), csv);
            });
        }
    } catch (const Error& e) {
        text::write_file(incomplete.string(), std::string("run failed: ") + e.what() + "\n");
        throw;
    }

    text::write_file(file("summary.json"), summary_to_json(summary));
    fs::remove(incomplete, ec);
    return summary;
}

}  // namespace psl
