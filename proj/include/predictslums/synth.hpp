#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "predictslums/geometry.hpp"
#include "predictslums/grid.hpp"
#include "predictslums/hotspot.hpp"

namespace psl {

struct FormalBlock {
    Rect region;
    double spacing = 100.0;  // lattice spacing, meters
};

/// Informal settlement: `count` points drawn from an isotropic Gaussian with
/// standard deviation `jitter`, truncated at `radius` around `center`.
struct InformalBlob {
    Point center;
    double radius = 400.0;
    std::size_t count = 500;
    double jitter = 200.0;
};

struct SyntheticCitySpec {
    Rect frame;
    std::vector<FormalBlock> formal;
    std::vector<InformalBlob> informal;
    std::uint64_t seed = 0;
};

struct SyntheticCity {
    PointSet points;
    std::vector<LabeledPolygon> labels;
};

/// Checkerboard of 1 km squares: squares with (i + j) % 2 == parity hold a
/// 100 m formal lattice, the others one informal blob (radius 400 m, 500
/// points, ~10x the formal density) centred in the square.
SyntheticCitySpec checkerboard_city_spec(std::size_t cols, std::size_t rows, int parity, std::uint64_t seed);

/// City A of the acceptance fixture (4 x 4 squares).
SyntheticCitySpec default_city_spec(std::uint64_t seed);
/// City B: same generator family, different layout (5 x 4, opposite parity).
SyntheticCitySpec alternate_city_spec(std::uint64_t seed);

/// Formal lattices emit points at region.min + k * spacing (edges included);
/// blob polygons are 64-gons circumscribing the truncation circle so every
/// blob point lies inside its polygon. Overlapping formal/informal regions are
/// an argument error.
SyntheticCity generate_synthetic_city(const SyntheticCitySpec& spec);

std::string city_spec_to_json(const SyntheticCitySpec& spec);
SyntheticCitySpec city_spec_from_json(std::string_view text);

struct DecayFit {
    double lambda = 0.0;
    double amplitude = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<std::uint32_t, std::size_t>> histogram;  // (count, cells), all counts
};

/// Fits log(frequency) = log(amplitude) - lambda * count over bins with
/// count > 0 and frequency > 0 by least squares weighted with the bin
/// frequency (the inverse variance of a log count). Needs >= 3 such bins.
DecayFit fit_count_distribution(std::span<const std::uint32_t> counts);
DecayFit fit_count_distribution(const GridLattice& grid);

}  // namespace psl
