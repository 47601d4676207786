#include "predictslums/geometry.hpp"

namespace psl {

namespace {

// Even-odd ray casting. Points exactly on an edge may land on either side.
bool ring_contains(const std::vector<Point>& ring, Point p) noexcept {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = ring[i];
        const Point b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

bool Polygon::contains(Point p) const noexcept {
    if (!ring_contains(ring, p)) return false;
    for (const auto& h : holes)
        if (ring_contains(h, p)) return false;
    return true;
}

}  // namespace psl
