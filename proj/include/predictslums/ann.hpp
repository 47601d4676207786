#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "predictslums/grid.hpp"

namespace psl {

/// (hot, notsig, cold, nneighbors, cx, cy)
using RawFeatures = std::array<double, 6>;
inline constexpr std::size_t kFeatureCount = 6;
inline constexpr std::size_t kFeatureCountNoCoords = 4;

RawFeatures encode_features(const GridCell& cell);

/// Keeps the first 4 features when coordinates are disabled.
std::vector<double> select_features(const RawFeatures& raw, bool use_coords);

struct LabeledRow {
    RawFeatures features{};
    int target = 0;  // 1 informal, 0 formal
};

/// Labelled cells of a grid as training rows.
std::vector<LabeledRow> rows_from_grid(const GridLattice& grid);

/// Per-feature z-scoring with training-set statistics (population sd).
/// One-hot columns are standardized too; a constant one-hot column keeps sd 1,
/// a constant continuous column is an error.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd;

    static Standardizer fit(const std::vector<std::vector<double>>& rows, std::size_t n_categorical = 3);
    std::vector<double> apply(std::span<const double> row) const;
    std::vector<double> invert(std::span<const double> row) const;
};

struct DenseLayer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
};

/// Feed-forward binary classifier: ReLU hidden layers, sigmoid output.
struct AnnModel {
    std::vector<std::size_t> sizes;  // input, hidden..., 1
    std::vector<DenseLayer> layers;
    Standardizer standardizer;
    double dropout_rate = 0.0;
    std::uint64_t seed = 0;

    bool use_coords() const noexcept { return !sizes.empty() && sizes.front() == kFeatureCount; }

    /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
    static AnnModel initialize(std::vector<std::size_t> sizes, std::uint64_t seed);

    /// Output probability for an already standardized input (dropout off).
    double forward(std::span<const double> standardized) const;
    /// Encodes, selects and standardizes raw features, then forward.
    double predict_probability(const RawFeatures& raw) const;
};

inline double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }
/// Kept strictly inside (0, 1) so saturated outputs still read as probabilities.
inline double sigmoid(double v) noexcept {
    return std::clamp(1.0 / (1.0 + std::exp(-v)), std::numeric_limits<double>::denorm_min(), 1.0 - 0x1.0p-53);
}

inline constexpr double kCrossEntropyClamp = 1e-12;
/// Binary cross-entropy with the output clamped to [1e-12, 1 - 1e-12].
double cross_entropy(int target, double output) noexcept;

/// Mean cross-entropy over a batch (columns of x) and its gradient for every
/// layer; dropout is not applied. Used by training and the gradient checks.
struct Gradients {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
};
double loss_and_gradients(const AnnModel& model, const Eigen::MatrixXd& x, std::span<const int> targets, Gradients& grads);

/// Informal iff probability >= 0.5 (a tie predicts informal).
inline Label classify(double probability) noexcept {
    return probability >= 0.5 ? Label::Informal : Label::Formal;
}

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 10;
    std::size_t epochs = 600;
    double train_fraction = 0.7;
    double dropout = 0.0;  // 0.5 when enabled
    bool use_coords = true;
    std::vector<std::size_t> hidden = {100, 30};
    std::uint64_t seed = 0;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct EvalReport {
    // confusion[predicted][actual], index 0 formal, 1 informal
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    std::size_t total = 0;
    double overall_accuracy = 0.0;
    std::vector<EpochStats> history;
};

/// accuracy = trace / total
double confusion_accuracy(const std::array<std::array<std::size_t, 2>, 2>& confusion) noexcept;

struct TrainResult {
    AnnModel model;
    EvalReport report;  // validation confusion + per-epoch history
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
};

/// Seeded train/validation split, then train_split on the two parts.
TrainResult train(std::span<const LabeledRow> rows, const TrainConfig& cfg);

/// Trains on `train_rows`, tracking history on `val_rows` (may be empty).
TrainResult train_split(std::span<const LabeledRow> train_rows, std::span<const LabeledRow> val_rows, const TrainConfig& cfg);

EvalReport evaluate(const AnnModel& model, std::span<const LabeledRow> rows);

struct KFoldResult {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    double variance = 0.0;      // population variance of fold accuracies
    double cv_squared_error = 0.0;  // mean (prob - target)^2 over all held-out rows
};

/// Generic K-fold driver: rows are shuffled with `seed` and cut into K
/// contiguous near-equal folds; `fit_predict(train_idx, test_idx, fold)` must
/// return one probability per test index.
using FoldFn = std::function<std::vector<double>(const std::vector<std::size_t>&, const std::vector<std::size_t>&, std::size_t)>;
KFoldResult kfold_cv(std::span<const LabeledRow> rows, std::size_t k, std::uint64_t seed, const FoldFn& fit_predict);

/// K-fold CV of the network; fold f trains with seed derive_seed(cfg.seed, f).
KFoldResult kfold_cv(std::span<const LabeledRow> rows, std::size_t k, const TrainConfig& cfg);

/// Fills prob and pred for every cell, labelled or not.
void predict_grid(const AnnModel& model, GridLattice& grid);

// Model file, little-endian:
//   char[8]  magic "PSLUMANN"
//   u32      format version (kModelFormatVersion)
//   u32      L, number of weight layers
//   u32[L+1] layer sizes, input first
//   f64      dropout rate
//   u64      seed
//   f64[n0]  standardizer means, f64[n0] standardizer sds
//   per layer: f64[out*in] weights row-major, f64[out] biases
//   u64      FNV-1a 64 of all preceding bytes
inline constexpr std::uint32_t kModelFormatVersion = 1;
std::string serialize_model(const AnnModel& model);
AnnModel deserialize_model(std::string_view bytes);
void save_model(const AnnModel& model, const std::string& path);
AnnModel load_model(const std::string& path);

}  // namespace psl
