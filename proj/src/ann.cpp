#include "predictslums/ann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "predictslums/error.hpp"
#include "predictslums/rng.hpp"

namespace psl {

namespace {

const char* const kFeatureNames[kFeatureCount] = {"hot", "notsig", "cold", "nneighbors", "x", "y"};

struct Masks {
    std::vector<Eigen::MatrixXd> hidden;  // one per hidden layer, already scaled by 1/(1-rate)
};

// Mean cross-entropy of one batch plus gradients; masks may be null (eval).
double batch_pass(const AnnModel& model, const Eigen::MatrixXd& x, std::span<const int> targets, const Masks* masks,
                  Gradients& g) {
    const std::size_t n_layers = model.layers.size();
    const Eigen::Index batch = x.cols();
    std::vector<Eigen::MatrixXd> act(n_layers + 1);  // act[0] = input
    std::vector<Eigen::MatrixXd> pre(n_layers);
    act[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = model.layers[l];
        pre[l] = (layer.w * act[l]).colwise() + layer.b;
        if (l + 1 < n_layers) {
            act[l + 1] = pre[l].cwiseMax(0.0);
            if (masks) act[l + 1] = act[l + 1].cwiseProduct(masks->hidden[l]);
        } else {
            act[l + 1] = pre[l].unaryExpr([](double v) { return sigmoid(v); });
        }
    }
    double loss = 0.0;
    Eigen::MatrixXd delta(1, batch);
    for (Eigen::Index c = 0; c < batch; ++c) {
        const double y = act[n_layers](0, c);
        const int t = targets[static_cast<std::size_t>(c)];
        loss += cross_entropy(t, y);
        delta(0, c) = (y - static_cast<double>(t)) / static_cast<double>(batch);
    }
    g.dw.resize(n_layers);
    g.db.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        g.dw[l] = delta * act[l].transpose();
        g.db[l] = delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd back = model.layers[l].w.transpose() * delta;
        if (masks) back = back.cwiseProduct(masks->hidden[l - 1]);
        delta = back.cwiseProduct(pre[l - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
    return loss / static_cast<double>(batch);
}

Eigen::MatrixXd design_matrix(const AnnModel& model, std::span<const LabeledRow> rows, std::span<const std::size_t> idx) {
    const auto in = static_cast<Eigen::Index>(model.sizes.front());
    Eigen::MatrixXd x(in, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        const auto z = model.standardizer.apply(select_features(rows[idx[c]].features, model.use_coords()));
        for (Eigen::Index r = 0; r < in; ++r) x(r, static_cast<Eigen::Index>(c)) = z[static_cast<std::size_t>(r)];
    }
    return x;
}

Eigen::VectorXd forward_batch(const AnnModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Eigen::MatrixXd z = (model.layers[l].w * a).colwise() + model.layers[l].b;
        if (l + 1 < model.layers.size())
            a = z.cwiseMax(0.0);
        else
            a = z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return a.row(0).transpose();
}

void accumulate(EpochStats& s, bool train_side, const AnnModel& model, std::span<const LabeledRow> rows) {
    if (rows.empty()) return;
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    const Eigen::VectorXd p = forward_batch(model, design_matrix(model, rows, idx));
    double loss = 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        loss += cross_entropy(rows[i].target, p(static_cast<Eigen::Index>(i)));
        hit += (classify(p(static_cast<Eigen::Index>(i))) == Label::Informal) == (rows[i].target == 1);
    }
    const double n = static_cast<double>(rows.size());
    (train_side ? s.train_loss : s.val_loss) = loss / n;
    (train_side ? s.train_accuracy : s.val_accuracy) = static_cast<double>(hit) / n;
}

void check_config(const TrainConfig& cfg) {
    require(cfg.learning_rate > 0.0, "learning rate must be > 0");
    require(cfg.batch_size >= 1, "batch size must be >= 1");
    require(cfg.epochs >= 1, "epochs must be >= 1");
    require(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0, "train fraction must be in (0,1)");
    require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "dropout must be in [0,1)");
    require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "Adam betas must be in [0,1)");
    for (auto h : cfg.hidden) require(h >= 1, "hidden layer sizes must be >= 1");
}

}  // namespace

RawFeatures encode_features(const GridCell& cell) {
    if (!cell.category)
        fail(ErrorKind::State, "cell (" + std::to_string(cell.col) + "," + std::to_string(cell.row) + ") has no hot-spot category");
    if (!cell.nneighbors)
        fail(ErrorKind::State, "cell (" + std::to_string(cell.col) + "," + std::to_string(cell.row) + ") has no nneighbors");
    return {*cell.category == Category::Hot ? 1.0 : 0.0,
            *cell.category == Category::NotSignificant ? 1.0 : 0.0,
            *cell.category == Category::Cold ? 1.0 : 0.0,
            static_cast<double>(*cell.nneighbors),
            cell.centroid.x,
            cell.centroid.y};
}

std::vector<double> select_features(const RawFeatures& raw, bool use_coords) {
    return {raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(use_coords ? kFeatureCount : kFeatureCountNoCoords)};
}

std::vector<LabeledRow> rows_from_grid(const GridLattice& grid) {
    std::vector<LabeledRow> rows;
    for (const GridCell& c : grid.cells) {
        if (c.label == Label::Unlabeled) continue;
        rows.push_back({encode_features(c), c.label == Label::Informal ? 1 : 0});
    }
    return rows;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows, std::size_t n_categorical) {
    require(rows.size() >= 2, "standardizer needs at least 2 training rows");
    const std::size_t d = rows.front().size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) s.sd[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    for (std::size_t j = 0; j < d; ++j) {
        s.sd[j] = std::sqrt(s.sd[j] / static_cast<double>(rows.size()));
        if (s.sd[j] > 0.0) continue;
        if (j < n_categorical) {
            s.sd[j] = 1.0;
        } else {
            const std::string name = j < kFeatureCount ? kFeatureNames[j] : "feature " + std::to_string(j);
            fail(ErrorKind::Data, "continuous feature '" + name + "' is constant on the training rows and cannot be standardized");
        }
    }
    return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
    if (row.size() != mean.size()) fail(ErrorKind::Argument, "standardizer dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / sd[j];
    return out;
}

std::vector<double> Standardizer::invert(std::span<const double> row) const {
    if (row.size() != mean.size()) fail(ErrorKind::Argument, "standardizer dimension mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] * sd[j] + mean[j];
    return out;
}

AnnModel AnnModel::initialize(std::vector<std::size_t> sizes, std::uint64_t seed) {
    require(sizes.size() >= 2 && sizes.back() == 1, "network must end in a single output");
    AnnModel m;
    m.sizes = std::move(sizes);
    m.seed = seed;
    Rng rng(derive_seed(seed, "ann-init"));
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(m.sizes[l]);
        const auto out = static_cast<Eigen::Index>(m.sizes[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
        m.layers.push_back(std::move(layer));
    }
    m.standardizer.mean.assign(m.sizes.front(), 0.0);
    m.standardizer.sd.assign(m.sizes.front(), 1.0);
    return m;
}

double AnnModel::forward(std::span<const double> standardized) const {
    if (standardized.size() != sizes.front())
        fail(ErrorKind::Argument, "input has " + std::to_string(standardized.size()) + " features, network expects " +
                                      std::to_string(sizes.front()));
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(standardized.data(), static_cast<Eigen::Index>(standardized.size()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::VectorXd z = layers[l].w * a + layers[l].b;
        if (l + 1 < layers.size())
            a = z.cwiseMax(0.0);
        else
            a = z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return a(0);
}

double AnnModel::predict_probability(const RawFeatures& raw) const {
    return forward(standardizer.apply(select_features(raw, use_coords())));
}

double cross_entropy(int target, double output) noexcept {
    const double y = std::clamp(output, kCrossEntropyClamp, 1.0 - kCrossEntropyClamp);
    return target == 1 ? -std::log(y) : -std::log(1.0 - y);
}

double loss_and_gradients(const AnnModel& model, const Eigen::MatrixXd& x, std::span<const int> targets, Gradients& grads) {
    require(static_cast<std::size_t>(x.cols()) == targets.size(), "batch and target sizes differ");
    return batch_pass(model, x, targets, nullptr, grads);
}

double confusion_accuracy(const std::array<std::array<std::size_t, 2>, 2>& cm) noexcept {
    const std::size_t total = cm[0][0] + cm[0][1] + cm[1][0] + cm[1][1];
    return total ? static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(total) : 0.0;
}

TrainResult train_split(std::span<const LabeledRow> train_rows, std::span<const LabeledRow> val_rows, const TrainConfig& cfg) {
    check_config(cfg);
    std::size_t positives = 0;
    for (const auto& r : train_rows) positives += r.target == 1;
    if (positives == 0 || positives == train_rows.size())
        fail(ErrorKind::Data, "training rows contain a single class; need both formal and informal cells");

    std::vector<std::size_t> sizes{cfg.use_coords ? kFeatureCount : kFeatureCountNoCoords};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    TrainResult res;
    AnnModel& model = res.model;
    model = AnnModel::initialize(sizes, cfg.seed);
    model.dropout_rate = cfg.dropout;

    std::vector<std::vector<double>> selected;
    selected.reserve(train_rows.size());
    for (const auto& r : train_rows) selected.push_back(select_features(r.features, cfg.use_coords));
    model.standardizer = Standardizer::fit(selected);

    std::vector<std::size_t> all(train_rows.size());
    std::iota(all.begin(), all.end(), 0);
    const Eigen::MatrixXd x_all = design_matrix(model, train_rows, all);

    // Adam state
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (const auto& layer : model.layers) {
        mw.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
        vw.push_back(mw.back());
        mb.push_back(Eigen::VectorXd::Zero(layer.b.size()));
        vb.push_back(mb.back());
    }
    std::size_t step = 0;

    Rng shuffle_rng(derive_seed(cfg.seed, "ann-epoch-shuffle"));
    Rng dropout_rng(derive_seed(cfg.seed, "ann-dropout"));
    const double keep = 1.0 - cfg.dropout;
    std::vector<std::size_t> order = all;
    Gradients g;
    Masks masks;
    std::vector<int> targets;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const auto bsz = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd xb(x_all.rows(), bsz);
            targets.resize(end - start);
            for (std::size_t k = start; k < end; ++k) {
                xb.col(static_cast<Eigen::Index>(k - start)) = x_all.col(static_cast<Eigen::Index>(order[k]));
                targets[k - start] = train_rows[order[k]].target;
            }
            const Masks* mp = nullptr;
            if (cfg.dropout > 0.0) {
                masks.hidden.resize(model.layers.size() - 1);
                for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
                    auto& m = masks.hidden[l];
                    m.resize(static_cast<Eigen::Index>(model.sizes[l + 1]), bsz);
                    for (Eigen::Index c = 0; c < bsz; ++c)
                        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dropout_rng.uniform() < keep ? 1.0 / keep : 0.0;
                }
                mp = &masks;
            }
            batch_pass(model, xb, targets, mp, g);

            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * g.dw[l];
                vw[l] = cfg.beta2 * vw[l] + (1.0 - cfg.beta2) * g.dw[l].cwiseProduct(g.dw[l]);
                mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * g.db[l];
                vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * g.db[l].cwiseProduct(g.db[l]);
                model.layers[l].w -= (cfg.learning_rate * (mw[l] / c1).array() /
                                      ((vw[l] / c2).array().sqrt() + cfg.epsilon)).matrix();
                model.layers[l].b -= (cfg.learning_rate * (mb[l] / c1).array() /
                                      ((vb[l] / c2).array().sqrt() + cfg.epsilon)).matrix();
            }
        }
        EpochStats s;
        accumulate(s, true, model, train_rows);
        accumulate(s, false, model, val_rows);
        res.report.history.push_back(s);
    }
    if (!val_rows.empty()) {
        auto hist = std::move(res.report.history);
        res.report = evaluate(model, val_rows);
        res.report.history = std::move(hist);
    }
    return res;
}

TrainResult train(std::span<const LabeledRow> rows, const TrainConfig& cfg) {
    check_config(cfg);
    require(rows.size() >= 3, "training needs at least 3 labelled rows");
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(cfg.seed, "ann-split"));
    rng.shuffle(idx.begin(), idx.end());
    auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 2, rows.size() - 1);

    std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> va(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::vector<LabeledRow> train_rows, val_rows;
    for (auto i : tr) train_rows.push_back(rows[i]);
    for (auto i : va) val_rows.push_back(rows[i]);
    TrainResult res = train_split(train_rows, val_rows, cfg);
    res.train_indices = std::move(tr);
    res.val_indices = std::move(va);
    return res;
}

EvalReport evaluate(const AnnModel& model, std::span<const LabeledRow> rows) {
    EvalReport r;
    if (rows.empty()) return r;
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    const Eigen::VectorXd p = forward_batch(model, design_matrix(model, rows, idx));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t pred = classify(p(static_cast<Eigen::Index>(i))) == Label::Informal ? 1 : 0;
        ++r.confusion[pred][static_cast<std::size_t>(rows[i].target)];
    }
    r.total = rows.size();
    r.overall_accuracy = confusion_accuracy(r.confusion);
    return r;
}

KFoldResult kfold_cv(std::span<const LabeledRow> rows, std::size_t k, std::uint64_t seed, const FoldFn& fit_predict) {
    require(k >= 2, "K must be >= 2");
    if (k > rows.size())
        fail(ErrorKind::Argument, "K = " + std::to_string(k) + " exceeds the number of rows (" + std::to_string(rows.size()) + ")");
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "kfold-partition"));
    rng.shuffle(idx.begin(), idx.end());

    KFoldResult res;
    double sq = 0.0;
    const std::size_t n = rows.size();
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
        std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<std::size_t> tr;
        tr.insert(tr.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(lo));
        tr.insert(tr.end(), idx.begin() + static_cast<std::ptrdiff_t>(hi), idx.end());
        const auto prob = fit_predict(tr, test, f);
        if (prob.size() != test.size()) fail(ErrorKind::Argument, "fold predictor returned the wrong number of probabilities");
        std::size_t hit = 0;
        for (std::size_t t = 0; t < test.size(); ++t) {
            const int target = rows[test[t]].target;
            hit += (classify(prob[t]) == Label::Informal) == (target == 1);
            sq += (prob[t] - target) * (prob[t] - target);
        }
        res.fold_accuracy.push_back(static_cast<double>(hit) / static_cast<double>(test.size()));
    }
    res.mean_accuracy = std::accumulate(res.fold_accuracy.begin(), res.fold_accuracy.end(), 0.0) / static_cast<double>(k);
    for (double a : res.fold_accuracy) res.variance += (a - res.mean_accuracy) * (a - res.mean_accuracy);
    res.variance /= static_cast<double>(k);
    res.cv_squared_error = sq / static_cast<double>(n);
    return res;
}

KFoldResult kfold_cv(std::span<const LabeledRow> rows, std::size_t k, const TrainConfig& cfg) {
    return kfold_cv(rows, k, cfg.seed, [&](const std::vector<std::size_t>& tr, const std::vector<std::size_t>& te, std::size_t fold) {
        std::vector<LabeledRow> train_rows, test_rows;
        for (auto i : tr) train_rows.push_back(rows[i]);
        for (auto i : te) test_rows.push_back(rows[i]);
        TrainConfig fc = cfg;
        fc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(fold));
        const TrainResult r = train_split(train_rows, test_rows, fc);
        std::vector<double> prob;
        for (const auto& row : test_rows) prob.push_back(r.model.predict_probability(row.features));
        return prob;
    });
}

void predict_grid(const AnnModel& model, GridLattice& grid) {
    for (GridCell& c : grid.cells) {
        const double p = model.predict_probability(encode_features(c));
        c.prob = p;
        c.pred = classify(p);
    }
}

}  // namespace psl
