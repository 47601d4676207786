#include "predictslums/spatial_index.hpp"

#include <algorithm>
#include <limits>

namespace psl {

PointIndex::PointIndex(std::span<const Point> points, double bucket_size) : points_(points) {
    if (points_.empty()) {
        start_.assign(2, 0);
        return;
    }
    double max_x = points_[0].x, max_y = points_[0].y;
    min_x_ = points_[0].x;
    min_y_ = points_[0].y;
    for (const Point& p : points_) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    const double w = max_x - min_x_;
    const double h = max_y - min_y_;
    if (bucket_size <= 0.0) {
        // about two points per bucket on average
        const double area = std::max(w, 1e-9) * std::max(h, 1e-9);
        bucket_size = std::sqrt(2.0 * area / static_cast<double>(points_.size()));
    }
    // cap the bucket count near 4n so tiny requested sizes cannot blow up memory
    const double n = static_cast<double>(points_.size());
    bucket_ = std::max({bucket_size, std::sqrt(w * h / (4.0 * n)), std::max(w, h) / 4096.0});
    if (!(bucket_ > 0.0)) bucket_ = 1.0;
    cols_ = static_cast<std::size_t>(std::floor(w / bucket_)) + 1;
    rows_ = static_cast<std::size_t>(std::floor(h / bucket_)) + 1;

    const std::size_t nb = cols_ * rows_;
    std::vector<std::uint32_t> bucket_of(points_.size());
    start_.assign(nb + 1, 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto col = static_cast<std::size_t>(clamp_col(std::floor((points_[i].x - min_x_) / bucket_)));
        const auto row = static_cast<std::size_t>(clamp_row(std::floor((points_[i].y - min_y_) / bucket_)));
        bucket_of[i] = static_cast<std::uint32_t>(row * cols_ + col);
        ++start_[bucket_of[i] + 1];
    }
    for (std::size_t b = 0; b < nb; ++b) start_[b + 1] += start_[b];
    order_.resize(points_.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) order_[fill[bucket_of[i]]++] = static_cast<std::uint32_t>(i);
}

long PointIndex::clamp_col(double v) const noexcept {
    if (!(v >= 0.0)) return 0;
    const double hi = static_cast<double>(cols_ - 1);
    return static_cast<long>(std::min(v, hi));
}

long PointIndex::clamp_row(double v) const noexcept {
    if (!(v >= 0.0)) return 0;
    const double hi = static_cast<double>(rows_ - 1);
    return static_cast<long>(std::min(v, hi));
}

std::size_t PointIndex::count_within(Point c, double r) const {
    std::size_t n = 0;
    for_each_within(c, r, [&](std::size_t) { ++n; });
    return n;
}

double PointIndex::nearest_other(std::size_t self) const {
    const Point q = points_[self];
    const long qc = clamp_col(std::floor((q.x - min_x_) / bucket_));
    const long qr = clamp_row(std::floor((q.y - min_y_) / bucket_));
    const long max_ring = static_cast<long>(std::max(cols_, rows_));
    double best2 = std::numeric_limits<double>::infinity();

    auto scan = [&](long col, long row) {
        if (col < 0 || row < 0 || col >= static_cast<long>(cols_) || row >= static_cast<long>(rows_)) return;
        const std::size_t b = static_cast<std::size_t>(row) * cols_ + static_cast<std::size_t>(col);
        for (std::uint32_t k = start_[b]; k < start_[b + 1]; ++k) {
            const std::uint32_t i = order_[k];
            if (i == self) continue;
            best2 = std::min(best2, squared_distance(points_[i], q));
        }
    };

    for (long ring = 0; ring <= max_ring; ++ring) {
        if (ring == 0) {
            scan(qc, qr);
        } else {
            for (long d = -ring; d <= ring; ++d) {
                scan(qc + d, qr - ring);
                scan(qc + d, qr + ring);
            }
            for (long d = -ring + 1; d <= ring - 1; ++d) {
                scan(qc - ring, qr + d);
                scan(qc + ring, qr + d);
            }
        }
        // anything outside rings 0..ring is at least ring*bucket away
        const double reach = static_cast<double>(ring) * bucket_;
        if (best2 <= reach * reach) break;
    }
    return std::sqrt(best2);
}

}  // namespace psl
