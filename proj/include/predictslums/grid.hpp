#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "predictslums/geometry.hpp"

namespace psl {

enum class Category : std::uint8_t { Hot, NotSignificant, Cold };
enum class Label : std::uint8_t { Formal, Informal, Unlabeled };
enum class MoranClass : std::uint8_t { HighHigh, LowLow, HighLow, LowHigh, NotSignificant };

char category_code(Category c) noexcept;  // H, N, C
char label_code(Label l) noexcept;        // F, I, U
const char* moran_code(MoranClass m) noexcept;  // HH, LL, HL, LH, NS

struct GridCell {
    std::uint32_t col = 0;
    std::uint32_t row = 0;
    Point centroid;
    std::uint32_t count = 0;
    std::optional<std::uint32_t> nneighbors;
    std::optional<double> gi_z;
    std::optional<double> p_value;
    std::optional<Category> category;

    std::optional<double> moran_i;
    std::optional<double> moran_p;
    std::optional<MoranClass> moran_quadrant;  // sign pattern, regardless of significance
    std::optional<MoranClass> moran_class;     // quadrant if significant, else NotSignificant

    Label label = Label::Unlabeled;

    std::optional<double> prob;  // P(informal) from the classifier
    std::optional<Label> pred;
};

/// Dense row-major lattice of square cells anchored at `origin` (lower-left).
struct GridLattice {
    Point origin;
    double cell_size = 100.0;
    std::size_t n_cols = 0;
    std::size_t n_rows = 0;
    std::vector<GridCell> cells;

    std::size_t index(std::size_t col, std::size_t row) const noexcept { return row * n_cols + col; }
    GridCell& at(std::size_t col, std::size_t row) { return cells[index(col, row)]; }
    const GridCell& at(std::size_t col, std::size_t row) const { return cells[index(col, row)]; }
    std::size_t size() const noexcept { return cells.size(); }

    Point centroid_of(std::size_t col, std::size_t row) const noexcept {
        return {origin.x + (static_cast<double>(col) + 0.5) * cell_size,
                origin.y + (static_cast<double>(row) + 0.5) * cell_size};
    }
};

/// Grid interchange CSV:
/// col,row,cx,cy,count,nneighbors,gi_z,p,category,label[,prob,pred]
/// Missing values are written as empty fields. prob,pred columns are added
/// when any cell carries a prediction (pred is 1 for informal, 0 for formal).
std::string format_grid_csv(const GridLattice& grid);

/// Parses the interchange CSV. Cell size is inferred from the centroids when the
/// grid has more than one row or column, otherwise cell_size_hint is used.
GridLattice parse_grid_csv(std::string_view text, double cell_size_hint = 100.0);

}  // namespace psl
