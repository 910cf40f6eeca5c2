#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdrl/env.hpp"

namespace fdrl {

// Boolean feasibility over grid cell centres, row-major with the last axis
// fastest: index = (ix * ny + iy) * na + ia.
struct FeasibilityGrid {
    GridSpec spec;
    std::vector<std::uint8_t> cells;

    std::size_t index(int ix, int iy, int ia) const {
        return (static_cast<std::size_t>(ix) * spec.cells[1] + iy) * spec.cells[2] + ia;
    }
    bool at(int ix, int iy, int ia) const { return cells[index(ix, iy, ia)] != 0; }
    std::size_t feasible_count() const;
    double feasible_fraction() const;
};

FeasibilityGrid feasible_grid(const Environment& env, const StateDescriptor& state, const GridSpec& spec);
FeasibilityGrid feasible_grid(const Environment& env, const StateDescriptor& state);

inline constexpr int kNoMode = -1;

struct ModeLabels {
    int count = 0;
    std::vector<int> cell_mode;  // kNoMode for infeasible cells
};

// 6-connected components; the last axis wraps when spec.periodic_last.
ModeLabels label_modes(const FeasibilityGrid& grid);

// Mode of a raw action: std::nullopt when the environment rejects it.
std::optional<int> mode_of(const Environment& env, const StateDescriptor& state,
                           const Eigen::Ref<const Eigen::VectorXd>& raw, const FeasibilityGrid& grid,
                           const ModeLabels& labels);

// Text header followed by one byte (0 or 1) per cell:
//   fdiv-grid 1
//   cells <nx> <ny> <na>
//   lower <x> <y> <a>
//   upper <x> <y> <a>
//   periodic <0|1>
//   modes <count>
//   end_header
void write_grid(std::ostream& out, const FeasibilityGrid& grid, int mode_count);
FeasibilityGrid read_grid(std::istream& in, int* mode_count = nullptr);

// CSV rows "x,y,a,mode" for every feasible cell.
void write_grid_csv(std::ostream& out, const FeasibilityGrid& grid, const ModeLabels& labels);

// Max-projection onto the first two axes, rows of 0/1 separated by spaces.
std::vector<std::uint8_t> project_xy(const FeasibilityGrid& grid);

}  // namespace fdrl
