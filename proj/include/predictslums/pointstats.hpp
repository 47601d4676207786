#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "predictslums/geometry.hpp"

namespace psl {

/// Clark-Evans nearest-neighbour summary.
struct NnResult {
    double observed_mean_dist = 0.0;  // meters
    double expected_mean_dist = 0.0;  // meters, under complete spatial randomness
    double ratio = 0.0;
    double z_score = 0.0;
    std::size_t n = 0;
    double area = 0.0;
};

/// Clark-Evans standard error of the mean nearest-neighbour distance.
inline constexpr double kClarkEvansSeCoefficient = 0.26136;

NnResult nearest_neighbor_stat(const PointSet& ps, const Rect& frame);

/// Ratio and z-score from already-known summary quantities.
NnResult nearest_neighbor_from_summary(double observed_mean_dist, std::size_t n, double area);

struct KFunctionResult {
    std::vector<double> distances;
    std::vector<double> l_observed;
    std::vector<double> l_expected;
    std::vector<double> envelope_low;
    std::vector<double> envelope_high;
    std::size_t permutations = 0;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultEnvelopePermutations = 99;

/// Uncorrected L(d) = sqrt(A * sum_i sum_{j!=i} [dist_ij < d] / (pi n (n-1)))
/// for each d (strictly increasing, positive).
std::vector<double> l_function(std::span<const Point> pts, double area, std::span<const double> distances);

/// L(d) with a pointwise min/max envelope over `permutations` uniform
/// resamples of n points in the frame. Resample k draws from
/// derive_seed(seed, k), so the result depends only on (inputs, seed).
KFunctionResult ripley_l(const PointSet& ps, const Rect& frame, std::span<const double> distances,
                         std::size_t permutations = kDefaultEnvelopePermutations, std::uint64_t seed = 0);

std::string format_k_csv(const KFunctionResult& k);

}  // namespace psl
