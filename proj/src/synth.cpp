#include "predictslums/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "json.hpp"

#include "predictslums/error.hpp"
#include "predictslums/rng.hpp"

namespace psl {

namespace {

constexpr double kSquare = 1000.0;
constexpr int kBlobSides = 64;

double distance_to_rect(Point p, const Rect& r) {
    const double dx = std::max({r.min_x - p.x, 0.0, p.x - r.max_x});
    const double dy = std::max({r.min_y - p.y, 0.0, p.y - r.max_y});
    return std::sqrt(dx * dx + dy * dy);
}

bool rect_inside(const Rect& inner, const Rect& outer) {
    return inner.min_x >= outer.min_x && inner.max_x <= outer.max_x && inner.min_y >= outer.min_y && inner.max_y <= outer.max_y;
}

}  // namespace

SyntheticCitySpec checkerboard_city_spec(std::size_t cols, std::size_t rows, int parity, std::uint64_t seed) {
    SyntheticCitySpec s;
    s.frame = {0.0, 0.0, static_cast<double>(cols) * kSquare, static_cast<double>(rows) * kSquare};
    s.seed = seed;
    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t i = 0; i < cols; ++i) {
            const double x0 = static_cast<double>(i) * kSquare, y0 = static_cast<double>(j) * kSquare;
            if (static_cast<int>((i + j) % 2) == parity)
                s.formal.push_back({{x0, y0, x0 + kSquare, y0 + kSquare}, 100.0});
            else
                s.informal.push_back({{x0 + kSquare / 2, y0 + kSquare / 2}, 400.0, 500, 200.0});
        }
    }
    return s;
}

SyntheticCitySpec default_city_spec(std::uint64_t seed) { return checkerboard_city_spec(4, 4, 0, seed); }

SyntheticCitySpec alternate_city_spec(std::uint64_t seed) { return checkerboard_city_spec(5, 4, 1, seed); }

SyntheticCity generate_synthetic_city(const SyntheticCitySpec& spec) {
    require(spec.frame.area() > 0.0, "synthetic city frame must have positive area");
    for (std::size_t k = 0; k < spec.formal.size(); ++k) {
        const auto& f = spec.formal[k];
        require(f.spacing > 0.0, "formal block spacing must be > 0");
        require(f.region.area() > 0.0, "formal block must have positive area");
        require(rect_inside(f.region, spec.frame), "formal block " + std::to_string(k) + " extends outside the frame");
    }
    for (std::size_t k = 0; k < spec.informal.size(); ++k) {
        const auto& b = spec.informal[k];
        require(b.radius > 0.0 && b.jitter > 0.0 && b.count > 0, "informal blob " + std::to_string(k) + " needs positive radius, jitter and count");
        const Rect box{b.center.x - b.radius, b.center.y - b.radius, b.center.x + b.radius, b.center.y + b.radius};
        require(rect_inside(box, spec.frame), "informal blob " + std::to_string(k) + " extends outside the frame");
        for (std::size_t f = 0; f < spec.formal.size(); ++f)
            if (distance_to_rect(b.center, spec.formal[f].region) < b.radius)
                fail(ErrorKind::Argument, "informal blob " + std::to_string(k) + " overlaps formal block " + std::to_string(f));
    }

    SyntheticCity city;
    for (const auto& f : spec.formal) {
        const auto nx = static_cast<std::size_t>(std::floor(f.region.width() / f.spacing + 1e-9));
        const auto ny = static_cast<std::size_t>(std::floor(f.region.height() / f.spacing + 1e-9));
        for (std::size_t j = 0; j <= ny; ++j)
            for (std::size_t i = 0; i <= nx; ++i)
                city.points.points.push_back({f.region.min_x + static_cast<double>(i) * f.spacing,
                                              f.region.min_y + static_cast<double>(j) * f.spacing});
        Polygon poly;
        poly.ring = {{f.region.min_x, f.region.min_y}, {f.region.max_x, f.region.min_y},
                     {f.region.max_x, f.region.max_y}, {f.region.min_x, f.region.max_y}};
        city.labels.push_back({std::move(poly), Label::Formal});
    }
    for (std::size_t k = 0; k < spec.informal.size(); ++k) {
        const auto& b = spec.informal[k];
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(k)));
        for (std::size_t n = 0; n < b.count;) {
            const double dx = rng.normal() * b.jitter;
            const double dy = rng.normal() * b.jitter;
            if (dx * dx + dy * dy > b.radius * b.radius) continue;
            city.points.points.push_back({b.center.x + dx, b.center.y + dy});
            ++n;
        }
        Polygon poly;
        const double circumradius = b.radius / std::cos(std::numbers::pi / kBlobSides) * (1.0 + 1e-9);
        for (int s = 0; s < kBlobSides; ++s) {
            const double a = 2.0 * std::numbers::pi * s / kBlobSides;
            poly.ring.push_back({b.center.x + circumradius * std::cos(a), b.center.y + circumradius * std::sin(a)});
        }
        city.labels.push_back({std::move(poly), Label::Informal});
    }
    return city;
}

std::string city_spec_to_json(const SyntheticCitySpec& s) {
    nlohmann::ordered_json j;
    j["frame"] = {s.frame.min_x, s.frame.min_y, s.frame.max_x, s.frame.max_y};
    j["seed"] = s.seed;
    j["formal"] = nlohmann::ordered_json::array();
    for (const auto& f : s.formal)
        j["formal"].push_back({{"region", {f.region.min_x, f.region.min_y, f.region.max_x, f.region.max_y}}, {"spacing", f.spacing}});
    j["informal"] = nlohmann::ordered_json::array();
    for (const auto& b : s.informal)
        j["informal"].push_back({{"center", {b.center.x, b.center.y}}, {"radius", b.radius}, {"count", b.count}, {"jitter", b.jitter}});
    return j.dump(2) + "\n";
}

SyntheticCitySpec city_spec_from_json(std::string_view text) {
    SyntheticCitySpec s;
    try {
        const auto j = nlohmann::json::parse(text);
        auto rect = [](const nlohmann::json& a) {
            if (!a.is_array() || a.size() != 4) fail(ErrorKind::Parse, "city spec: rectangles are [min_x, min_y, max_x, max_y]");
            return Rect{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()};
        };
        s.frame = rect(j.at("frame"));
        s.seed = j.value("seed", std::uint64_t{0});
        for (const auto& f : j.value("formal", nlohmann::json::array()))
            s.formal.push_back({rect(f.at("region")), f.value("spacing", 100.0)});
        for (const auto& b : j.value("informal", nlohmann::json::array())) {
            const auto& c = b.at("center");
            const double radius = b.value("radius", 400.0);
            s.informal.push_back({{c.at(0).get<double>(), c.at(1).get<double>()}, radius,
                                  b.value("count", std::size_t{500}), b.value("jitter", radius / 2.0)});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("city spec: ") + e.what());
    }
    return s;
}

DecayFit fit_count_distribution(std::span<const std::uint32_t> counts) {
    std::map<std::uint32_t, std::size_t> hist;
    for (auto c : counts) ++hist[c];
    DecayFit fit;
    fit.histogram.assign(hist.begin(), hist.end());

    double sw = 0.0, sx = 0.0, sy = 0.0;
    std::size_t bins = 0;
    for (auto [count, freq] : hist) {
        if (count == 0) continue;
        const double w = static_cast<double>(freq);
        sw += w;
        sx += w * count;
        sy += w * std::log(w);
        ++bins;
    }
    if (bins < 3)
        fail(ErrorKind::Data, "decay fit needs at least 3 distinct nonzero count bins, found " + std::to_string(bins));
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (auto [count, freq] : hist) {
        if (count == 0) continue;
        const double w = static_cast<double>(freq);
        const double dx = count - mx, dy = std::log(w) - my;
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    const double slope = sxy / sxx;
    fit.lambda = -slope;
    fit.amplitude = std::exp(my - slope * mx);
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

DecayFit fit_count_distribution(const GridLattice& grid) {
    std::vector<std::uint32_t> counts;
    counts.reserve(grid.size());
    for (const auto& c : grid.cells) counts.push_back(c.count);
    return fit_count_distribution(counts);
}

}  // namespace psl
