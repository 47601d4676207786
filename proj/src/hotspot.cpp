#include "predictslums/hotspot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "predictslums/error.hpp"
#include "predictslums/rng.hpp"
#include "predictslums/spatial_index.hpp"
#include "predictslums/text.hpp"

namespace psl {

namespace {

// Calls fn(j) for every cell j whose centroid is within band of cell i's,
// in row-major order. Only the square window that can reach is scanned.
template <class Fn>
void for_each_band_neighbor(const GridLattice& grid, std::size_t i, double band, bool include_self, Fn&& fn) {
    const GridCell& ci = grid.cells[i];
    const double band2 = band * band;
    const long reach = static_cast<long>(std::ceil(band / grid.cell_size)) + 1;
    const long col = ci.col, row = ci.row;
    const long r0 = std::max(0L, row - reach);
    const long r1 = std::min(static_cast<long>(grid.n_rows) - 1, row + reach);
    const long c0 = std::max(0L, col - reach);
    const long c1 = std::min(static_cast<long>(grid.n_cols) - 1, col + reach);
    for (long r = r0; r <= r1; ++r) {
        for (long c = c0; c <= c1; ++c) {
            const std::size_t j = grid.index(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
            if (j == i && !include_self) continue;
            if (squared_distance(ci.centroid, grid.cells[j].centroid) <= band2) fn(j);
        }
    }
}

double two_tailed_normal_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

Label parse_label_value(std::string_view v, bool& ok) {
    std::string s(text::trim(v));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    ok = true;
    if (s == "formal" || s == "f" || s == "0") return Label::Formal;
    if (s == "informal" || s == "i" || s == "1") return Label::Informal;
    if (s == "unlabeled" || s == "u" || s.empty()) return Label::Unlabeled;
    ok = false;
    return Label::Unlabeled;
}

MoranClass quadrant(double z_i, double lag) noexcept {
    const bool high = z_i > 0.0;
    const bool high_nb = lag > 0.0;
    if (high && high_nb) return MoranClass::HighHigh;
    if (!high && !high_nb) return MoranClass::LowLow;
    if (high) return MoranClass::HighLow;
    return MoranClass::LowHigh;
}

}  // namespace

GridLattice aggregate_to_grid(const PointSet& ps, const Rect& frame, double cell_size) {
    require(cell_size > 0.0 && std::isfinite(cell_size), "cell_size must be > 0");
    require(frame.area() > 0.0, "grid frame must have positive area");
    GridLattice g;
    g.origin = {frame.min_x, frame.min_y};
    g.cell_size = cell_size;
    g.n_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(frame.width() / cell_size)));
    g.n_rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(frame.height() / cell_size)));
    g.cells.resize(g.n_cols * g.n_rows);
    for (std::size_t r = 0; r < g.n_rows; ++r) {
        for (std::size_t c = 0; c < g.n_cols; ++c) {
            GridCell& cell = g.at(c, r);
            cell.col = static_cast<std::uint32_t>(c);
            cell.row = static_cast<std::uint32_t>(r);
            cell.centroid = g.centroid_of(c, r);
        }
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Point p = ps.points[i];
        if (!frame.contains(p)) fail(ErrorKind::Argument, "point " + std::to_string(i) + " lies outside the grid frame");
        const auto col = std::min(static_cast<std::size_t>(std::floor((p.x - frame.min_x) / cell_size)), g.n_cols - 1);
        const auto row = std::min(static_cast<std::size_t>(std::floor((p.y - frame.min_y) / cell_size)), g.n_rows - 1);
        ++g.at(col, row).count;
    }
    return g;
}

void count_neighbors(const PointSet& ps, GridLattice& grid, double band) {
    require(band > 0.0 && std::isfinite(band), "band must be > 0");
    PointIndex index(ps.points, band);
    for (GridCell& cell : grid.cells)
        cell.nneighbors = static_cast<std::uint32_t>(index.count_within(cell.centroid, band));
}

void gi_star(GridLattice& grid, double band) {
    require(!grid.cells.empty(), "gi_star on an empty grid");
    require(band > 0.0 && std::isfinite(band), "band must be > 0");
    const std::size_t n = grid.size();
    const double nd = static_cast<double>(n);
    double sum = 0.0, sum2 = 0.0;
    for (const GridCell& c : grid.cells) {
        const double x = c.count;
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / nd;
    const double s = std::sqrt(std::max(0.0, sum2 / nd - mean * mean));

    for (std::size_t i = 0; i < n; ++i) {
        double wx = 0.0, w = 0.0;
        for_each_band_neighbor(grid, i, band, true, [&](std::size_t j) {
            wx += grid.cells[j].count;
            w += 1.0;
        });
        // binary weights: sum w^2 == sum w
        const double spread = n > 1 ? (nd * w - w * w) / (nd - 1.0) : 0.0;
        const double den = s * std::sqrt(std::max(0.0, spread));
        GridCell& cell = grid.cells[i];
        if (!(den > 0.0)) {
            cell.gi_z = 0.0;
            cell.p_value = 1.0;
            continue;
        }
        const double z = (wx - mean * w) / den;
        cell.gi_z = z;
        cell.p_value = two_tailed_normal_p(z);
    }
}

FdrResult fdr_correct(std::span<const double> p_values, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    for (double p : p_values) require(p >= 0.0 && p <= 1.0, "p-value outside [0,1]: " + text::format_double(p));
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::size_t k = 0;  // number of rejections
    for (std::size_t r = m; r >= 1; --r) {
        if (p_values[order[r - 1]] <= static_cast<double>(r) * alpha / static_cast<double>(m)) {
            k = r;
            break;
        }
    }
    FdrResult res;
    res.alpha = alpha;
    res.rejected.assign(m, false);
    for (std::size_t r = 0; r < k; ++r) res.rejected[order[r]] = true;
    res.adjusted_threshold = k > 0 ? static_cast<double>(k) * alpha / static_cast<double>(m) : 0.0;
    return res;
}

Category categorize(bool rejected, double gi_z) noexcept {
    if (rejected && gi_z > 0.0) return Category::Hot;
    if (rejected && gi_z < 0.0) return Category::Cold;
    return Category::NotSignificant;
}

void categorize(GridLattice& grid, const FdrResult& fdr) {
    require(fdr.rejected.size() == grid.size(), "FDR result does not match the grid size");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        GridCell& c = grid.cells[i];
        if (!c.gi_z) fail(ErrorKind::State, "categorize requires gi_star to have run");
        c.category = categorize(fdr.rejected[i], *c.gi_z);
    }
}

HotspotSummary hotspot_analysis(GridLattice& grid, double band, double alpha) {
    gi_star(grid, band);
    std::vector<double> p(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) p[i] = *grid.cells[i].p_value;
    const FdrResult fdr = fdr_correct(p, alpha);
    categorize(grid, fdr);
    HotspotSummary s;
    s.adjusted_threshold = fdr.adjusted_threshold;
    for (const GridCell& c : grid.cells) {
        switch (*c.category) {
            case Category::Hot: ++s.hot; break;
            case Category::Cold: ++s.cold; break;
            case Category::NotSignificant: ++s.not_significant; break;
        }
    }
    return s;
}

void local_moran(GridLattice& grid, double band, std::size_t permutations, std::uint64_t seed, double alpha) {
    require(!grid.cells.empty(), "local_moran on an empty grid");
    require(band > 0.0 && std::isfinite(band), "band must be > 0");
    require(permutations >= 1, "local_moran needs at least one permutation");
    const std::size_t n = grid.size();
    double mean = 0.0;
    for (const GridCell& c : grid.cells) mean += c.count;
    mean /= static_cast<double>(n);
    std::vector<double> z(n);
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = grid.cells[i].count - mean;
        m2 += z[i] * z[i];
    }
    m2 /= static_cast<double>(n);

    std::vector<std::size_t> others;
    others.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        GridCell& cell = grid.cells[i];
        double lag = 0.0;
        std::size_t k = 0;
        for_each_band_neighbor(grid, i, band, false, [&](std::size_t j) {
            lag += z[j];
            ++k;
        });
        if (!(m2 > 0.0) || k == 0) {
            cell.moran_i = 0.0;
            cell.moran_p = 1.0;
            cell.moran_quadrant = MoranClass::NotSignificant;
            cell.moran_class = MoranClass::NotSignificant;
            continue;
        }
        const double scale = z[i] / m2;
        const double observed = scale * lag;

        others.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::size_t extreme = 0;
        for (std::size_t p = 0; p < permutations; ++p) {
            double s = 0.0;
            // partial Fisher-Yates: first k slots become the sampled neighbours
            for (std::size_t t = 0; t < k; ++t) {
                const std::size_t pick = t + static_cast<std::size_t>(rng.below(others.size() - t));
                std::swap(others[t], others[pick]);
                s += z[others[t]];
            }
            const double sim = scale * s;
            if (observed >= 0.0 ? sim >= observed : sim <= observed) ++extreme;
        }
        const double pval = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
        cell.moran_i = observed;
        cell.moran_p = pval;
        cell.moran_quadrant = quadrant(z[i], lag);
        cell.moran_class = pval <= alpha ? *cell.moran_quadrant : MoranClass::NotSignificant;
    }
}

void join_labels_csv(GridLattice& grid, std::string_view body) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool first = true;
    while (start < body.size()) {
        std::size_t end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        ++line_no;
        const auto line = text::trim(body.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        const auto f = text::split(line, ',');
        if (first) {
            first = false;
            if (f.size() == 3 && text::trim(f[0]) == "col") continue;
        }
        const std::string where = "label CSV line " + std::to_string(line_no);
        if (f.size() != 3) fail(ErrorKind::Parse, where + ": expected col,row,label");
        long long col = 0, row = 0;
        if (!text::parse_int(f[0], col) || !text::parse_int(f[1], row))
            fail(ErrorKind::Parse, where + ": non-integer cell key");
        bool ok = false;
        const Label l = parse_label_value(f[2], ok);
        if (!ok) fail(ErrorKind::Parse, where + ": unknown label '" + std::string(text::trim(f[2])) + "'");
        if (col < 0 || row < 0 || static_cast<std::size_t>(col) >= grid.n_cols ||
            static_cast<std::size_t>(row) >= grid.n_rows)
            fail(ErrorKind::Data, where + ": cell (" + std::to_string(col) + "," + std::to_string(row) +
                                      ") is outside the " + std::to_string(grid.n_cols) + "x" +
                                      std::to_string(grid.n_rows) + " grid");
        grid.at(static_cast<std::size_t>(col), static_cast<std::size_t>(row)).label = l;
    }
}

void join_labels_polygons(GridLattice& grid, std::span<const LabeledPolygon> polygons) {
    struct Box {
        double min_x, min_y, max_x, max_y;
    };
    std::vector<Box> boxes;
    for (const auto& lp : polygons) {
        Box b{INFINITY, INFINITY, -INFINITY, -INFINITY};
        for (Point p : lp.polygon.ring) {
            b.min_x = std::min(b.min_x, p.x);
            b.min_y = std::min(b.min_y, p.y);
            b.max_x = std::max(b.max_x, p.x);
            b.max_y = std::max(b.max_y, p.y);
        }
        boxes.push_back(b);
    }
    std::vector<std::string> conflicts;
    for (GridCell& cell : grid.cells) {
        std::optional<Label> found;
        bool conflict = false;
        for (std::size_t k = 0; k < polygons.size(); ++k) {
            const Point c = cell.centroid;
            const Box& b = boxes[k];
            if (c.x < b.min_x || c.x > b.max_x || c.y < b.min_y || c.y > b.max_y) continue;
            if (!polygons[k].polygon.contains(c)) continue;
            if (found && *found != polygons[k].label) conflict = true;
            if (!found) found = polygons[k].label;
        }
        if (conflict) {
            conflicts.push_back("(" + std::to_string(cell.col) + "," + std::to_string(cell.row) + ")");
            continue;
        }
        cell.label = found.value_or(Label::Unlabeled);
    }
    if (!conflicts.empty()) {
        std::string msg = "overlapping polygons with conflicting labels at " + std::to_string(conflicts.size()) + " cell(s):";
        for (std::size_t k = 0; k < conflicts.size() && k < 20; ++k) msg += " " + conflicts[k];
        if (conflicts.size() > 20) msg += " ...";
        fail(ErrorKind::Data, msg);
    }
}

std::vector<LabeledPolygon> parse_label_geojson(std::string_view body) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("label GeoJSON: ") + e.what());
    }
    std::vector<LabeledPolygon> out;
    auto read_ring = [](const json& coords) {
        std::vector<Point> ring;
        for (const auto& c : coords) {
            if (!c.is_array() || c.size() < 2) fail(ErrorKind::Parse, "label GeoJSON: bad coordinate pair");
            ring.push_back({c[0].get<double>(), c[1].get<double>()});
        }
        return ring;
    };
    auto read_polygon = [&](const json& rings, Label label) {
        LabeledPolygon lp;
        lp.label = label;
        for (std::size_t r = 0; r < rings.size(); ++r) {
            if (r == 0)
                lp.polygon.ring = read_ring(rings[r]);
            else
                lp.polygon.holes.push_back(read_ring(rings[r]));
        }
        out.push_back(std::move(lp));
    };
    try {
        const json& features = doc.at("features");
        for (std::size_t k = 0; k < features.size(); ++k) {
            const json& f = features[k];
            std::string status = f.at("properties").at("status").get<std::string>();
            bool ok = false;
            const Label label = parse_label_value(status, ok);
            if (!ok || label == Label::Unlabeled)
                fail(ErrorKind::Parse, "label GeoJSON feature " + std::to_string(k) + ": status must be formal or informal");
            const json& g = f.at("geometry");
            const std::string type = g.at("type").get<std::string>();
            if (type == "Polygon") {
                read_polygon(g.at("coordinates"), label);
            } else if (type == "MultiPolygon") {
                for (const auto& poly : g.at("coordinates")) read_polygon(poly, label);
            } else {
                fail(ErrorKind::Parse, "label GeoJSON feature " + std::to_string(k) + ": unsupported geometry " + type);
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("label GeoJSON: ") + e.what());
    }
    return out;
}

std::string format_label_geojson(std::span<const LabeledPolygon> polygons) {
    // written by hand so coordinates use the shortest round-trip form
    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
    auto ring_json = [](const std::vector<Point>& ring) {
        std::string s = "[";
        for (std::size_t i = 0; i <= ring.size(); ++i) {
            const Point p = ring[i % ring.size()];  // close the ring
            if (i) s += ',';
            s += '[' + text::format_double(p.x) + ',' + text::format_double(p.y) + ']';
        }
        return s + ']';
    };
    for (std::size_t k = 0; k < polygons.size(); ++k) {
        const auto& lp = polygons[k];
        if (k) out += ',';
        out += "\n{\"type\":\"Feature\",\"properties\":{\"status\":\"";
        out += lp.label == Label::Informal ? "informal" : "formal";
        out += "\"},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[" + ring_json(lp.polygon.ring);
        for (const auto& h : lp.polygon.holes) out += ',' + ring_json(h);
        out += "]}}";
    }
    out += "\n]}\n";
    return out;
}

}  // namespace psl
