#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "predictslums/geometry.hpp"

namespace psl {

// Uniform bucket grid over a fixed point set.
//
// Contract: for_each_within visits exactly the points whose squared distance to
// the query is <= r*r, in ascending bucket order and ascending input order
// within a bucket; nearest_other returns the exact nearest distance to a point
// with a different index. The index holds a view, so the points must outlive it.
class PointIndex {
public:
    explicit PointIndex(std::span<const Point> points, double bucket_size = 0.0);

    template <class Fn>
    void for_each_within(Point c, double r, Fn&& fn) const {
        if (points_.empty() || r < 0.0) return;
        const double r2 = r * r;
        const long c0 = clamp_col(std::floor((c.x - r - min_x_) / bucket_));
        const long c1 = clamp_col(std::floor((c.x + r - min_x_) / bucket_));
        const long r0 = clamp_row(std::floor((c.y - r - min_y_) / bucket_));
        const long r1 = clamp_row(std::floor((c.y + r - min_y_) / bucket_));
        for (long row = r0; row <= r1; ++row) {
            for (long col = c0; col <= c1; ++col) {
                const std::size_t b = static_cast<std::size_t>(row) * cols_ + static_cast<std::size_t>(col);
                for (std::uint32_t k = start_[b]; k < start_[b + 1]; ++k) {
                    const std::uint32_t i = order_[k];
                    if (squared_distance(points_[i], c) <= r2) fn(static_cast<std::size_t>(i));
                }
            }
        }
    }

    std::size_t count_within(Point c, double r) const;

    /// Distance from points[self] to its nearest neighbour with another index.
    double nearest_other(std::size_t self) const;

    std::size_t size() const noexcept { return points_.size(); }

private:
    long clamp_col(double v) const noexcept;
    long clamp_row(double v) const noexcept;

    std::span<const Point> points_;
    double min_x_ = 0.0;
    double min_y_ = 0.0;
    double bucket_ = 1.0;
    std::size_t cols_ = 1;
    std::size_t rows_ = 1;
    std::vector<std::uint32_t> start_;  // CSR offsets, size cols*rows+1
    std::vector<std::uint32_t> order_;
};

}  // namespace psl
