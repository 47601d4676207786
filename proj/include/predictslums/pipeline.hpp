#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "predictslums/ann.hpp"
#include "predictslums/geometry.hpp"
#include "predictslums/hotspot.hpp"
#include "predictslums/pointstats.hpp"

namespace psl {

struct PipelineConfig {
    std::string points_path;     // x,y CSV
    std::string polylines_path;  // alternative to points_path
    std::string labels_path;     // label CSV or GeoJSON polygons
    std::string model_path;      // predict with this model instead of training
    std::string out_dir = "out";
    std::optional<Rect> frame;
    double snap_tol = 0.5;
    bool force_degrees = false;
    double cell_size = kDefaultCellSize;
    double band = kDefaultBand;
    double alpha = kDefaultAlpha;
    std::size_t permutations = kDefaultEnvelopePermutations;
    std::vector<double> k_distances;  // empty: 50 m steps up to 1000 m
    bool skip_stats = false;
    bool moran = false;
    std::size_t kfold = 0;  // 0 disables k-fold CV
    std::vector<double> sweep_bands;
    TrainConfig train;
    std::uint64_t seed = 0;
};

std::string config_to_json(const PipelineConfig& cfg);
/// Unknown keys are an argument error so typos do not silently fall back to defaults.
PipelineConfig config_from_json(std::string_view text);

struct PipelineSummary {
    std::string out_dir;
    std::size_t points = 0;
    std::size_t cells = 0;
    std::size_t labelled_cells = 0;
    std::size_t hot = 0, not_significant = 0, cold = 0;
    std::optional<NnResult> nn;
    std::optional<double> validation_accuracy;
    std::optional<double> evaluation_accuracy;  // model supplied + labels present
    std::optional<double> kfold_mean, kfold_variance;
    std::vector<std::string> stages_completed;
    std::vector<std::string> notes;
};

std::string summary_to_json(const PipelineSummary& s);

/// Runs ingest -> stats -> grid -> neighbours -> Gi*/FDR -> labels -> t-test/MNL
/// -> train+evaluate (or predict with a supplied model) and writes every
/// artefact to cfg.out_dir. Errors are rethrown prefixed with the stage name
/// after an INCOMPLETE marker is written.
PipelineSummary run_pipeline(const PipelineConfig& cfg);

}  // namespace psl
