#pragma once

#include <cstddef>
#include <vector>

namespace psl {

/// Planar point in projected meters.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(Point a, Point b) noexcept {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Ordered collection of street intersections. Duplicates are allowed.
struct PointSet {
    std::vector<Point> points;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const noexcept { return max_x - min_x; }
    double height() const noexcept { return max_y - min_y; }
    double area() const noexcept { return width() * height(); }
    bool degenerate() const noexcept { return area() <= 0.0; }
    bool contains(Point p) const noexcept {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Polyline {
    std::vector<Point> vertices;
};

/// Polygon given by an outer ring and optional holes (closing vertex optional).
struct Polygon {
    std::vector<Point> ring;
    std::vector<std::vector<Point>> holes;

    bool contains(Point p) const noexcept;
};

}  // namespace psl
