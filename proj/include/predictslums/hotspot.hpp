#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "predictslums/geometry.hpp"
#include "predictslums/grid.hpp"

namespace psl {

inline constexpr double kDefaultCellSize = 100.0;  // meters
inline constexpr double kDefaultBand = 344.0;      // meters
inline constexpr double kDefaultAlpha = 0.05;

/// Bins points into cells of `cell_size` anchored at the frame's lower-left
/// corner. Points on the max edge go to the last column/row; points outside
/// the frame are an argument error.
GridLattice aggregate_to_grid(const PointSet& ps, const Rect& frame, double cell_size = kDefaultCellSize);

/// nneighbors = number of points p with |p - centroid|^2 <= band^2.
void count_neighbors(const PointSet& ps, GridLattice& grid, double band);

/// Getis-Ord Gi* on cell counts with binary weights w_ij = [|c_i - c_j|^2 <= band^2]
/// (self included). Fills gi_z and the two-tailed normal p-value. Cells whose
/// denominator vanishes (S = 0, or every cell is a neighbour) get z = 0, p = 1.
void gi_star(GridLattice& grid, double band);

struct FdrResult {
    double alpha = 0.0;
    std::vector<bool> rejected;
    double adjusted_threshold = 0.0;  // k * alpha / m for the largest passing k; 0 if none
};

/// Benjamini-Hochberg step-up procedure.
FdrResult fdr_correct(std::span<const double> p_values, double alpha = kDefaultAlpha);

/// Hot iff rejected and z > 0, Cold iff rejected and z < 0, otherwise NotSignificant.
Category categorize(bool rejected, double gi_z) noexcept;
void categorize(GridLattice& grid, const FdrResult& fdr);

struct HotspotSummary {
    std::size_t hot = 0;
    std::size_t not_significant = 0;
    std::size_t cold = 0;
    double adjusted_threshold = 0.0;
};

/// gi_star + fdr_correct over all cells + categorize.
HotspotSummary hotspot_analysis(GridLattice& grid, double band = kDefaultBand, double alpha = kDefaultAlpha);

/// Local Moran's I with binary band weights (self excluded):
/// I_i = z_i / m2 * sum_j w_ij z_j, z = x - mean, m2 = sum z^2 / n.
/// Pseudo p-values come from conditional permutation (x_i fixed, neighbours
/// drawn without replacement from the other cells); cell i uses stream
/// derive_seed(seed, i). p = (M + 1) / (permutations + 1) where M counts
/// permuted values at least as extreme in the direction of the observed sign.
void local_moran(GridLattice& grid, double band, std::size_t permutations, std::uint64_t seed,
                 double alpha = kDefaultAlpha);

struct LabeledPolygon {
    Polygon polygon;
    Label label = Label::Unlabeled;
};

/// Label CSV `col,row,label`, label one of Formal/Informal/F/I (case-insensitive).
void join_labels_csv(GridLattice& grid, std::string_view text);

/// Each cell takes the label of the polygon containing its centroid; cells in
/// no polygon stay Unlabeled. Conflicting overlaps are a data error listing the cells.
void join_labels_polygons(GridLattice& grid, std::span<const LabeledPolygon> polygons);

/// GeoJSON Polygon/MultiPolygon features with property `status` in {formal, informal}.
std::vector<LabeledPolygon> parse_label_geojson(std::string_view text);
std::string format_label_geojson(std::span<const LabeledPolygon> polygons);

}  // namespace psl
