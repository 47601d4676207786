#include "predictslums/pointstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "predictslums/error.hpp"
#include "predictslums/rng.hpp"
#include "predictslums/spatial_index.hpp"
#include "predictslums/text.hpp"

namespace psl {

NnResult nearest_neighbor_from_summary(double observed_mean_dist, std::size_t n, double area) {
    require(n >= 2, "nearest-neighbour statistic needs at least 2 points");
    require(area > 0.0, "nearest-neighbour statistic needs a frame with positive area");
    const double nd = static_cast<double>(n);
    NnResult r;
    r.n = n;
    r.area = area;
    r.observed_mean_dist = observed_mean_dist;
    r.expected_mean_dist = 0.5 / std::sqrt(nd / area);
    r.ratio = r.observed_mean_dist / r.expected_mean_dist;
    const double se = kClarkEvansSeCoefficient / std::sqrt(nd * nd / area);
    r.z_score = (r.observed_mean_dist - r.expected_mean_dist) / se;
    return r;
}

NnResult nearest_neighbor_stat(const PointSet& ps, const Rect& frame) {
    require(ps.size() >= 2, "nearest-neighbour statistic needs at least 2 points");
    require(frame.area() > 0.0, "nearest-neighbour statistic needs a frame with positive area");
    PointIndex index(ps.points);
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) sum += index.nearest_other(i);
    return nearest_neighbor_from_summary(sum / static_cast<double>(ps.size()), ps.size(), frame.area());
}

std::vector<double> l_function(std::span<const Point> pts, double area, std::span<const double> distances) {
    const std::size_t n = pts.size();
    require(n >= 2, "L(d) needs at least 2 points");
    require(area > 0.0, "L(d) needs a frame with positive area");
    require(!distances.empty(), "L(d) needs at least one distance");
    for (std::size_t k = 0; k < distances.size(); ++k) {
        require(distances[k] > 0.0 && std::isfinite(distances[k]), "L(d) distances must be positive");
        require(k == 0 || distances[k] > distances[k - 1], "L(d) distances must be strictly increasing");
    }
    std::vector<double> d2(distances.size());
    std::transform(distances.begin(), distances.end(), d2.begin(), [](double d) { return d * d; });

    // hist[k] = ordered pairs whose distance first falls under distances[k]
    std::vector<std::uint64_t> hist(distances.size() + 1, 0);
    PointIndex index(pts, distances.back());
    for (std::size_t i = 0; i < n; ++i) {
        index.for_each_within(pts[i], distances.back(), [&](std::size_t j) {
            if (j == i) return;
            const double s = squared_distance(pts[i], pts[j]);
            ++hist[static_cast<std::size_t>(std::upper_bound(d2.begin(), d2.end(), s) - d2.begin())];
        });
    }
    const double denom = std::numbers::pi * static_cast<double>(n) * static_cast<double>(n - 1);
    std::vector<double> l(distances.size());
    std::uint64_t pairs = 0;
    for (std::size_t k = 0; k < distances.size(); ++k) {
        pairs += hist[k];
        l[k] = std::sqrt(area * static_cast<double>(pairs) / denom);
    }
    return l;
}

KFunctionResult ripley_l(const PointSet& ps, const Rect& frame, std::span<const double> distances,
                         std::size_t permutations, std::uint64_t seed) {
    require(permutations >= 1, "ripley_l needs at least one permutation");
    KFunctionResult r;
    r.distances.assign(distances.begin(), distances.end());
    r.l_observed = l_function(ps.points, frame.area(), distances);
    r.l_expected = r.distances;
    r.envelope_low.assign(distances.size(), std::numeric_limits<double>::infinity());
    r.envelope_high.assign(distances.size(), -std::numeric_limits<double>::infinity());
    r.permutations = permutations;
    r.seed = seed;

    std::vector<Point> sample(ps.size());
    for (std::size_t k = 0; k < permutations; ++k) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        for (Point& p : sample) {
            p.x = rng.uniform(frame.min_x, frame.max_x);
            p.y = rng.uniform(frame.min_y, frame.max_y);
        }
        const auto l = l_function(sample, frame.area(), distances);
        for (std::size_t t = 0; t < l.size(); ++t) {
            r.envelope_low[t] = std::min(r.envelope_low[t], l[t]);
            r.envelope_high[t] = std::max(r.envelope_high[t], l[t]);
        }
    }
    return r;
}

std::string format_k_csv(const KFunctionResult& k) {
    std::string out = "d,l_observed,l_expected,envelope_low,envelope_high\n";
    for (std::size_t i = 0; i < k.distances.size(); ++i) {
        out += text::format_double(k.distances[i]) + ',' + text::format_double(k.l_observed[i]) + ',' +
               text::format_double(k.l_expected[i]) + ',' + text::format_double(k.envelope_low[i]) + ',' +
               text::format_double(k.envelope_high[i]) + '\n';
    }
    return out;
}

}  // namespace psl
