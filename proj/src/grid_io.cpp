#include <algorithm>
#include <cmath>

#include "predictslums/error.hpp"
#include "predictslums/grid.hpp"
#include "predictslums/text.hpp"

namespace psl {

char category_code(Category c) noexcept {
    switch (c) {
        case Category::Hot: return 'H';
        case Category::Cold: return 'C';
        case Category::NotSignificant: break;
    }
    return 'N';
}

char label_code(Label l) noexcept {
    switch (l) {
        case Label::Formal: return 'F';
        case Label::Informal: return 'I';
        case Label::Unlabeled: break;
    }
    return 'U';
}

const char* moran_code(MoranClass m) noexcept {
    switch (m) {
        case MoranClass::HighHigh: return "HH";
        case MoranClass::LowLow: return "LL";
        case MoranClass::HighLow: return "HL";
        case MoranClass::LowHigh: return "LH";
        case MoranClass::NotSignificant: break;
    }
    return "NS";
}

namespace {

constexpr std::string_view kHeader = "col,row,cx,cy,count,nneighbors,gi_z,p,category,label";

std::string opt(const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); }

}  // namespace

std::string format_grid_csv(const GridLattice& grid) {
    const bool with_pred = std::any_of(grid.cells.begin(), grid.cells.end(), [](const GridCell& c) { return c.prob.has_value(); });
    std::string out(kHeader);
    if (with_pred) out += ",prob,pred";
    out += '\n';
    for (const GridCell& c : grid.cells) {
        out += std::to_string(c.col) + ',' + std::to_string(c.row) + ',' + text::format_double(c.centroid.x) + ',' +
               text::format_double(c.centroid.y) + ',' + std::to_string(c.count) + ',';
        if (c.nneighbors) out += std::to_string(*c.nneighbors);
        out += ',' + opt(c.gi_z) + ',' + opt(c.p_value) + ',';
        if (c.category) out += category_code(*c.category);
        out += ',';
        out += label_code(c.label);
        if (with_pred) {
            out += ',' + opt(c.prob) + ',';
            if (c.pred) out += *c.pred == Label::Informal ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

GridLattice parse_grid_csv(std::string_view body, double cell_size_hint) {
    std::vector<GridCell> cells;
    std::size_t line_no = 0, start = 0;
    bool header_seen = false;
    bool with_pred = false;
    while (start < body.size()) {
        std::size_t end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        ++line_no;
        const auto line = text::trim(body.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        const std::string where = "grid CSV line " + std::to_string(line_no) + ": ";
        if (!header_seen) {
            header_seen = true;
            if (line == kHeader) continue;
            if (line == std::string(kHeader) + ",prob,pred") {
                with_pred = true;
                continue;
            }
            fail(ErrorKind::Parse, where + "expected header '" + std::string(kHeader) + "'");
        }
        const auto f = text::split(line, ',');
        if (f.size() != (with_pred ? 12u : 10u)) fail(ErrorKind::Parse, where + "wrong number of fields");
        GridCell c;
        long long col = 0, row = 0, count = 0;
        if (!text::parse_int(f[0], col) || !text::parse_int(f[1], row) || col < 0 || row < 0)
            fail(ErrorKind::Parse, where + "bad col/row");
        c.col = static_cast<std::uint32_t>(col);
        c.row = static_cast<std::uint32_t>(row);
        if (!text::parse_double(f[2], c.centroid.x) || !text::parse_double(f[3], c.centroid.y))
            fail(ErrorKind::Parse, where + "bad centroid");
        if (!text::parse_int(f[4], count) || count < 0) fail(ErrorKind::Parse, where + "bad count");
        c.count = static_cast<std::uint32_t>(count);
        if (!text::trim(f[5]).empty()) {
            long long nn = 0;
            if (!text::parse_int(f[5], nn) || nn < 0) fail(ErrorKind::Parse, where + "bad nneighbors");
            c.nneighbors = static_cast<std::uint32_t>(nn);
        }
        auto read_opt = [&](std::string_view s, std::optional<double>& out, const char* name) {
            if (text::trim(s).empty()) return;
            double v = 0.0;
            if (!text::parse_double(s, v)) fail(ErrorKind::Parse, where + "bad " + name);
            out = v;
        };
        read_opt(f[6], c.gi_z, "gi_z");
        read_opt(f[7], c.p_value, "p");
        const auto cat = text::trim(f[8]);
        if (cat == "H")
            c.category = Category::Hot;
        else if (cat == "N")
            c.category = Category::NotSignificant;
        else if (cat == "C")
            c.category = Category::Cold;
        else if (!cat.empty())
            fail(ErrorKind::Parse, where + "category must be H, N or C");
        const auto lab = text::trim(f[9]);
        if (lab == "F")
            c.label = Label::Formal;
        else if (lab == "I")
            c.label = Label::Informal;
        else if (lab == "U")
            c.label = Label::Unlabeled;
        else
            fail(ErrorKind::Parse, where + "label must be F, I or U");
        if (with_pred) {
            read_opt(f[10], c.prob, "prob");
            const auto pr = text::trim(f[11]);
            if (pr == "1")
                c.pred = Label::Informal;
            else if (pr == "0")
                c.pred = Label::Formal;
            else if (!pr.empty())
                fail(ErrorKind::Parse, where + "pred must be 0 or 1");
        }
        cells.push_back(c);
    }
    if (cells.empty()) fail(ErrorKind::Data, "grid CSV has no cells");

    GridLattice g;
    std::uint32_t max_col = 0, max_row = 0;
    for (const auto& c : cells) {
        max_col = std::max(max_col, c.col);
        max_row = std::max(max_row, c.row);
    }
    g.n_cols = max_col + 1;
    g.n_rows = max_row + 1;
    if (cells.size() != g.n_cols * g.n_rows)
        fail(ErrorKind::Data, "grid CSV is not a dense " + std::to_string(g.n_cols) + "x" + std::to_string(g.n_rows) + " lattice");
    g.cells.resize(cells.size());
    std::vector<bool> seen(cells.size(), false);
    for (const auto& c : cells) {
        const auto idx = g.index(c.col, c.row);
        if (seen[idx]) fail(ErrorKind::Data, "grid CSV repeats cell (" + std::to_string(c.col) + "," + std::to_string(c.row) + ")");
        seen[idx] = true;
        g.cells[idx] = c;
    }
    const GridCell& a = g.cells.front();
    const GridCell& b = g.cells.back();
    if (b.col != a.col)
        g.cell_size = (b.centroid.x - a.centroid.x) / (static_cast<double>(b.col) - a.col);
    else if (b.row != a.row)
        g.cell_size = (b.centroid.y - a.centroid.y) / (static_cast<double>(b.row) - a.row);
    else
        g.cell_size = cell_size_hint;
    if (!(g.cell_size > 0.0)) fail(ErrorKind::Data, "grid CSV centroids do not define a positive cell size");
    g.origin = {a.centroid.x - 0.5 * g.cell_size, a.centroid.y - 0.5 * g.cell_size};
    return g;
}

}  // namespace psl
