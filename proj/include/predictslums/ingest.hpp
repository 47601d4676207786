#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predictslums/geometry.hpp"

namespace psl {

inline constexpr double kDefaultSnapTolerance = 0.5;  // meters

/// Parses `x,y` rows. A first line reading `x,y` is treated as a header, blank
/// lines are skipped, and anything else that is not two numbers is a parse
/// error carrying its 1-based line number.
PointSet parse_point_csv(std::string_view text);
std::string format_point_csv(const PointSet& ps);

/// Polylines from `line_id,seq,x,y` rows (optional header); vertices are ordered by seq.
std::vector<Polyline> parse_polyline_csv(std::string_view text);

/// Polylines from a GeoJSON FeatureCollection (or bare geometry) of LineString
/// and MultiLineString geometries.
std::vector<Polyline> parse_polyline_geojson(std::string_view text);

/// Reads polylines from a file, choosing the reader by content (`{` => GeoJSON).
std::vector<Polyline> read_polylines(const std::string& path);

/// Street nodes: every polyline endpoint plus every vertex shared by at least
/// two distinct polylines. Vertices within snap_tol of each other are merged
/// into one node placed at their centroid; no two outputs are within snap_tol.
PointSet extract_intersections(std::span<const Polyline> lines, double snap_tol = kDefaultSnapTolerance);

/// Merges points within tol of each other (same clustering as extract_intersections).
PointSet dedupe(const PointSet& ps, double tol);

/// Minimum axis-aligned rectangle. Throws on an empty set; a zero-area result
/// is returned as is and reports degenerate().
Rect bounding_rect(const PointSet& ps);

/// True when the rectangle fits inside [-180,180] x [-90,90], i.e. the input is
/// probably geographic degrees rather than projected meters.
bool looks_like_degrees(const Rect& r) noexcept;

/// Throws a data error for degree-like input unless force is set.
void check_projected(const Rect& r, bool force);

}  // namespace psl
