// Direct, unoptimised reference evaluations used to check the library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "predictslums/geometry.hpp"
#include "predictslums/grid.hpp"
#include "predictslums/inference.hpp"
#include "predictslums/rng.hpp"

namespace oracle {

inline double sq(double v) { return v * v; }

// Gi* from its definition, all sums over every cell pair, long double throughout.
inline std::vector<double> gi_star(const psl::GridLattice& g, double band) {
    const std::size_t n = g.cells.size();
    long double sum = 0, sum2 = 0;
    for (const auto& c : g.cells) {
        sum += c.count;
        sum2 += static_cast<long double>(c.count) * c.count;
    }
    const long double nd = static_cast<long double>(n);
    const long double mean = sum / nd;
    const long double var = sum2 / nd - mean * mean;
    const long double s = var > 0 ? std::sqrt(var) : 0;
    std::vector<double> z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        long double w = 0, wx = 0, w2 = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = g.cells[i].centroid.x - g.cells[j].centroid.x;
            const double dy = g.cells[i].centroid.y - g.cells[j].centroid.y;
            if (dx * dx + dy * dy <= band * band) {
                w += 1;
                w2 += 1;
                wx += g.cells[j].count;
            }
        }
        const long double inner = (nd * w2 - w * w) / (nd - 1);
        const long double denom = s * std::sqrt(std::max<long double>(inner, 0));
        z[i] = denom > 1e-12L ? static_cast<double>((wx - mean * w) / denom) : 0.0;
    }
    return z;
}

// Local Moran's I from its definition (self excluded from the neighbour sum).
inline std::vector<double> local_moran(const psl::GridLattice& g, double band) {
    const std::size_t n = g.cells.size();
    long double mean = 0;
    for (const auto& c : g.cells) mean += c.count;
    mean /= n;
    long double m2 = 0;
    for (const auto& c : g.cells) m2 += (c.count - mean) * (c.count - mean);
    m2 /= n;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        long double lag = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = sq(g.cells[i].centroid.x - g.cells[j].centroid.x) + sq(g.cells[i].centroid.y - g.cells[j].centroid.y);
            if (d2 <= band * band) lag += g.cells[j].count - mean;
        }
        out[i] = m2 > 0 ? static_cast<double>((g.cells[i].count - mean) / m2 * lag) : 0.0;
    }
    return out;
}

// BH by the counting definition: k* = max{k : #{p_i <= k a / m} >= k}.
inline std::vector<bool> bh(const std::vector<double>& p, double alpha) {
    const std::size_t m = p.size();
    std::size_t kstar = 0;
    for (std::size_t k = m; k >= 1; --k) {
        const double t = static_cast<double>(k) * alpha / static_cast<double>(m);
        std::size_t c = 0;
        for (double v : p) c += v <= t;
        if (c >= k) {
            kstar = k;
            break;
        }
    }
    std::vector<bool> r(m, false);
    if (kstar == 0) return r;
    const double t = static_cast<double>(kstar) * alpha / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = p[i] <= t;
    return r;
}

inline std::vector<std::uint32_t> radius_counts(const std::vector<psl::Point>& pts, const psl::GridLattice& g, double band) {
    std::vector<std::uint32_t> out;
    for (const auto& c : g.cells) {
        std::uint32_t k = 0;
        for (const auto& p : pts) k += psl::squared_distance(p, c.centroid) <= band * band;
        out.push_back(k);
    }
    return out;
}

// Cells with explicit counts on a cols x rows lattice of the given cell size.
inline psl::GridLattice lattice(std::size_t cols, std::size_t rows, double cell, const std::vector<std::uint32_t>& counts) {
    psl::GridLattice g;
    g.cell_size = cell;
    g.n_cols = cols;
    g.n_rows = rows;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            psl::GridCell cell_{};
            cell_.col = static_cast<std::uint32_t>(c);
            cell_.row = static_cast<std::uint32_t>(r);
            cell_.centroid = g.centroid_of(c, r);
            cell_.count = counts[r * cols + c];
            g.cells.push_back(cell_);
        }
    return g;
}

// Published multinomial logit coefficients, rows (cold, hot), columns (intercept, nneighbors, formal).
inline constexpr psl::MnlCoefficients kTable3 = {{{-0.421, -0.041, 1.603}, {-4.657, 0.085, -0.626}}};

// Samples from the logit with nneighbors ~ U[0, 100] and formal ~ Bernoulli(0.5).
inline std::vector<psl::MnlSample> simulate_mnl(const psl::MnlCoefficients& b, std::size_t n, std::uint64_t seed) {
    psl::Rng rng(seed);
    std::vector<psl::MnlSample> out(n);
    for (auto& s : out) {
        s.nneighbors = rng.uniform(0.0, 100.0);
        s.formal = rng.uniform() < 0.5 ? 1 : 0;
        const double vc = b[0][0] + b[0][1] * s.nneighbors + b[0][2] * s.formal;
        const double vh = b[1][0] + b[1][1] * s.nneighbors + b[1][2] * s.formal;
        const double z = 1.0 + std::exp(vc) + std::exp(vh);
        const double u = rng.uniform();
        const double ph = std::exp(vh) / z;
        const double pc = std::exp(vc) / z;
        s.category = u < ph ? psl::Category::Hot : (u < ph + pc ? psl::Category::Cold : psl::Category::NotSignificant);
    }
    return out;
}

// Hand-rolled MNL log-likelihood used for finite-difference checks.
inline double mnl_loglik(const psl::MnlCoefficients& b, const std::vector<psl::MnlSample>& s) {
    long double ll = 0;
    for (const auto& x : s) {
        const double vc = b[0][0] + b[0][1] * x.nneighbors + b[0][2] * x.formal;
        const double vh = b[1][0] + b[1][1] * x.nneighbors + b[1][2] * x.formal;
        const double lz = std::log(1.0 + std::exp(vc) + std::exp(vh));
        const double v = x.category == psl::Category::Hot ? vh : (x.category == psl::Category::Cold ? vc : 0.0);
        ll += v - lz;
    }
    return static_cast<double>(ll);
}

inline double accuracy_of(const std::array<std::array<double, 2>, 2>& m) {
    return (m[0][0] + m[1][1]) / (m[0][0] + m[0][1] + m[1][0] + m[1][1]);
}

}  // namespace oracle
