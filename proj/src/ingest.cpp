#include "predictslums/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "json.hpp"

#include "predictslums/error.hpp"
#include "predictslums/spatial_index.hpp"
#include "predictslums/text.hpp"

namespace psl {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        fn(line_no, text::trim(text.substr(start, end - start)));
        start = end + 1;
    }
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + what);
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Single-linkage clusters of points within tol; returns a cluster id per point
// (ids are dense and ordered by first member).
std::vector<std::size_t> cluster(std::span<const Point> pts, double tol) {
    UnionFind uf(pts.size());
    PointIndex index(pts, tol > 0.0 ? tol : 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        index.for_each_within(pts[i], tol, [&](std::size_t j) {
            if (j > i) uf.unite(i, j);
        });
    }
    std::vector<std::size_t> id(pts.size());
    std::map<std::size_t, std::size_t> dense;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto root = uf.find(i);
        auto [it, _] = dense.try_emplace(root, dense.size());
        id[i] = it->second;
    }
    return id;
}

std::vector<Point> centroids(std::span<const Point> pts, const std::vector<std::size_t>& id, std::size_t k) {
    std::vector<Point> sum(k);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        sum[id[i]].x += pts[i].x;
        sum[id[i]].y += pts[i].y;
        ++cnt[id[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        sum[c].x /= static_cast<double>(cnt[c]);
        sum[c].y /= static_cast<double>(cnt[c]);
    }
    return sum;
}

// Centroids of merged clusters can drift within tol of one another; merge
// until no two representatives are within tol.
std::vector<Point> merge_until_separated(std::vector<Point> reps, std::vector<std::size_t> weights, double tol) {
    for (;;) {
        const auto id = cluster(reps, tol);
        const std::size_t k = id.empty() ? 0 : *std::max_element(id.begin(), id.end()) + 1;
        if (k == reps.size()) return reps;
        std::vector<Point> sum(k);
        std::vector<std::size_t> w(k, 0);
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const double wi = static_cast<double>(weights[i]);
            sum[id[i]].x += reps[i].x * wi;
            sum[id[i]].y += reps[i].y * wi;
            w[id[i]] += weights[i];
        }
        for (std::size_t c = 0; c < k; ++c) {
            sum[c].x /= static_cast<double>(w[c]);
            sum[c].y /= static_cast<double>(w[c]);
        }
        reps = std::move(sum);
        weights = std::move(w);
    }
}

}  // namespace

PointSet parse_point_csv(std::string_view text) {
    PointSet ps;
    bool first = true;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.empty()) return;
        const auto fields = text::split(line, ',');
        if (first) {
            first = false;
            if (fields.size() == 2 && iequals(text::trim(fields[0]), "x") && iequals(text::trim(fields[1]), "y")) return;
        }
        if (fields.size() != 2) parse_fail(line_no, "expected 2 fields x,y, got " + std::to_string(fields.size()));
        Point p;
        if (!text::parse_double(fields[0], p.x) || !text::parse_double(fields[1], p.y))
            parse_fail(line_no, "non-numeric coordinate in '" + std::string(line) + "'");
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) parse_fail(line_no, "non-finite coordinate");
        ps.points.push_back(p);
    });
    return ps;
}

std::string format_point_csv(const PointSet& ps) {
    std::string out = "x,y\n";
    for (const Point& p : ps.points) {
        out += text::format_double(p.x);
        out += ',';
        out += text::format_double(p.y);
        out += '\n';
    }
    return out;
}

std::vector<Polyline> parse_polyline_csv(std::string_view text) {
    struct Row {
        long long seq;
        Point p;
    };
    std::map<std::string, std::vector<Row>> by_id;
    std::vector<std::string> id_order;
    bool first = true;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.empty()) return;
        const auto f = text::split(line, ',');
        if (first) {
            first = false;
            if (f.size() == 4 && iequals(text::trim(f[0]), "line_id")) return;
        }
        if (f.size() != 4) parse_fail(line_no, "expected 4 fields line_id,seq,x,y");
        Row r{};
        if (!text::parse_int(f[1], r.seq)) parse_fail(line_no, "non-integer seq");
        if (!text::parse_double(f[2], r.p.x) || !text::parse_double(f[3], r.p.y) || !std::isfinite(r.p.x) ||
            !std::isfinite(r.p.y))
            parse_fail(line_no, "bad coordinate");
        std::string id(text::trim(f[0]));
        auto [it, inserted] = by_id.try_emplace(id);
        if (inserted) id_order.push_back(id);
        it->second.push_back(r);
    });
    std::vector<Polyline> lines;
    for (const auto& id : id_order) {
        auto rows = by_id[id];
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.seq < b.seq; });
        if (rows.size() < 2) fail(ErrorKind::Data, "polyline '" + id + "' has fewer than 2 vertices");
        Polyline pl;
        for (const auto& r : rows) pl.vertices.push_back(r.p);
        lines.push_back(std::move(pl));
    }
    return lines;
}

std::vector<Polyline> parse_polyline_geojson(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("GeoJSON: ") + e.what());
    }
    std::vector<Polyline> lines;
    auto read_line = [&](const nlohmann::json& coords) {
        Polyline pl;
        for (const auto& c : coords) {
            if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
                fail(ErrorKind::Parse, "GeoJSON: bad coordinate pair");
            pl.vertices.push_back({c[0].get<double>(), c[1].get<double>()});
        }
        if (pl.vertices.size() < 2) fail(ErrorKind::Data, "GeoJSON: LineString with fewer than 2 vertices");
        lines.push_back(std::move(pl));
    };
    auto read_geometry = [&](const nlohmann::json& g) {
        const std::string type = g.value("type", "");
        if (type == "LineString") {
            read_line(g.at("coordinates"));
        } else if (type == "MultiLineString") {
            for (const auto& part : g.at("coordinates")) read_line(part);
        }
    };
    try {
        const std::string type = doc.value("type", "");
        if (type == "FeatureCollection") {
            for (const auto& f : doc.at("features")) {
                if (f.contains("geometry") && !f["geometry"].is_null()) read_geometry(f["geometry"]);
            }
        } else if (type == "Feature") {
            read_geometry(doc.at("geometry"));
        } else {
            read_geometry(doc);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("GeoJSON: ") + e.what());
    }
    // other geometry types are skipped, but a file with no lines at all is almost certainly the wrong input
    if (lines.empty()) fail(ErrorKind::Data, "GeoJSON: no LineString or MultiLineString geometries found");
    return lines;
}

std::vector<Polyline> read_polylines(const std::string& path) {
    const std::string body = text::read_file(path);
    const auto t = text::trim(body);
    if (!t.empty() && t.front() == '{') return parse_polyline_geojson(body);
    return parse_polyline_csv(body);
}

PointSet extract_intersections(std::span<const Polyline> lines, double snap_tol) {
    require(snap_tol >= 0.0 && std::isfinite(snap_tol), "snap_tol must be >= 0");
    std::vector<Point> verts;
    std::vector<std::size_t> owner;
    std::vector<bool> endpoint;
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto& v = lines[l].vertices;
        require(v.size() >= 2, "polyline " + std::to_string(l) + " has fewer than 2 vertices");
        for (std::size_t k = 0; k < v.size(); ++k) {
            verts.push_back(v[k]);
            owner.push_back(l);
            endpoint.push_back(k == 0 || k + 1 == v.size());
        }
    }
    const auto id = cluster(verts, snap_tol);
    const std::size_t k = id.empty() ? 0 : *std::max_element(id.begin(), id.end()) + 1;

    std::vector<bool> has_endpoint(k, false);
    std::vector<std::size_t> first_owner(k, SIZE_MAX);
    std::vector<bool> multi_owner(k, false);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const auto c = id[i];
        if (endpoint[i]) has_endpoint[c] = true;
        if (first_owner[c] == SIZE_MAX)
            first_owner[c] = owner[i];
        else if (first_owner[c] != owner[i])
            multi_owner[c] = true;
    }
    const auto cent = centroids(verts, id, k);
    std::vector<std::size_t> size(k, 0);
    for (auto c : id) ++size[c];

    std::vector<Point> reps;
    std::vector<std::size_t> weights;
    for (std::size_t c = 0; c < k; ++c) {
        if (has_endpoint[c] || multi_owner[c]) {
            reps.push_back(cent[c]);
            weights.push_back(size[c]);
        }
    }
    return PointSet{merge_until_separated(std::move(reps), std::move(weights), snap_tol)};
}

PointSet dedupe(const PointSet& ps, double tol) {
    require(tol >= 0.0 && std::isfinite(tol), "dedupe tolerance must be >= 0");
    std::vector<std::size_t> weights(ps.size(), 1);
    return PointSet{merge_until_separated(ps.points, std::move(weights), tol)};
}

Rect bounding_rect(const PointSet& ps) {
    require(!ps.empty(), "bounding_rect of an empty point set");
    Rect r{ps.points[0].x, ps.points[0].y, ps.points[0].x, ps.points[0].y};
    for (const Point& p : ps.points) {
        r.min_x = std::min(r.min_x, p.x);
        r.min_y = std::min(r.min_y, p.y);
        r.max_x = std::max(r.max_x, p.x);
        r.max_y = std::max(r.max_y, p.y);
    }
    return r;
}

bool looks_like_degrees(const Rect& r) noexcept {
    return r.min_x >= -180.0 && r.max_x <= 180.0 && r.min_y >= -90.0 && r.max_y <= 90.0;
}

void check_projected(const Rect& r, bool force) {
    if (!force && looks_like_degrees(r))
        fail(ErrorKind::Data,
             "coordinates fit inside [-180,180]x[-90,90] and look like degrees; project to meters or pass "
             "--force-degrees");
}

}  // namespace psl
