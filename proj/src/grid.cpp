#include "fdrl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fdrl/errors.hpp"

namespace fdrl {

std::size_t FeasibilityGrid::feasible_count() const {
    std::size_t n = 0;
    for (auto c : cells) n += c != 0;
    return n;
}

double FeasibilityGrid::feasible_fraction() const {
    return cells.empty() ? 0.0 : static_cast<double>(feasible_count()) / static_cast<double>(cells.size());
}

FeasibilityGrid feasible_grid(const Environment& env, const StateDescriptor& state, const GridSpec& spec) {
    FeasibilityGrid grid{spec, std::vector<std::uint8_t>(spec.total(), 0)};
    for (int ix = 0; ix < spec.cells[0]; ++ix) {
        const double x = spec.center(0, ix);
        for (int iy = 0; iy < spec.cells[1]; ++iy) {
            const double y = spec.center(1, iy);
            for (int ia = 0; ia < spec.cells[2]; ++ia) {
                grid.cells[grid.index(ix, iy, ia)] =
                    env.evaluate_grid_point(state, {x, y, spec.center(2, ia)}) ? 1 : 0;
            }
        }
    }
    return grid;
}

FeasibilityGrid feasible_grid(const Environment& env, const StateDescriptor& state) {
    return feasible_grid(env, state, env.default_grid());
}

ModeLabels label_modes(const FeasibilityGrid& grid) {
    const auto& n = grid.spec.cells;
    ModeLabels labels{0, std::vector<int>(grid.cells.size(), kNoMode)};
    std::deque<std::array<int, 3>> queue;
    for (int ix = 0; ix < n[0]; ++ix)
        for (int iy = 0; iy < n[1]; ++iy)
            for (int ia = 0; ia < n[2]; ++ia) {
                const auto start = grid.index(ix, iy, ia);
                if (!grid.cells[start] || labels.cell_mode[start] != kNoMode) continue;
                const int id = labels.count++;
                labels.cell_mode[start] = id;
                queue.push_back({ix, iy, ia});
                while (!queue.empty()) {
                    const auto c = queue.front();
                    queue.pop_front();
                    for (int axis = 0; axis < 3; ++axis) {
                        for (int step : {-1, 1}) {
                            auto nb = c;
                            nb[axis] += step;
                            if (axis == 2 && grid.spec.periodic_last) {
                                nb[2] = (nb[2] + n[2]) % n[2];
                            } else if (nb[axis] < 0 || nb[axis] >= n[axis]) {
                                continue;
                            }
                            const auto k = grid.index(nb[0], nb[1], nb[2]);
                            if (grid.cells[k] && labels.cell_mode[k] == kNoMode) {
                                labels.cell_mode[k] = id;
                                queue.push_back(nb);
                            }
                        }
                    }
                }
            }
    return labels;
}

std::optional<int> mode_of(const Environment& env, const StateDescriptor& state,
                           const Eigen::Ref<const Eigen::VectorXd>& raw, const FeasibilityGrid& grid,
                           const ModeLabels& labels) {
    if (!env.evaluate(state, raw)) return std::nullopt;
    const auto& spec = grid.spec;
    const auto coords = env.grid_coords(raw);
    // Continuous cell coordinates, cell centres at integer values.
    std::array<double, 3> u{};
    std::array<int, 3> home{};
    for (int axis = 0; axis < 3; ++axis) {
        u[axis] = (coords[axis] - spec.lower[axis]) / (spec.upper[axis] - spec.lower[axis]) * spec.cells[axis] - 0.5;
        home[axis] = std::clamp(static_cast<int>(std::lround(u[axis])), 0, spec.cells[axis] - 1);
    }
    if (spec.periodic_last) home[2] = ((static_cast<int>(std::lround(u[2])) % spec.cells[2]) + spec.cells[2]) % spec.cells[2];
    const auto home_index = grid.index(home[0], home[1], home[2]);
    if (labels.cell_mode[home_index] != kNoMode) return labels.cell_mode[home_index];

    auto distance2 = [&](int ix, int iy, int ia) {
        double d2 = 0.0;
        const std::array<int, 3> c{ix, iy, ia};
        for (int axis = 0; axis < 3; ++axis) {
            double d = c[axis] - u[axis];
            if (axis == 2 && spec.periodic_last) {
                d = std::fmod(std::abs(d), static_cast<double>(spec.cells[2]));
                d = std::min(d, spec.cells[2] - d);
            }
            d2 += d * d;
        }
        return d2;
    };
    // Nearest feasible cell, searched in growing Chebyshev shells around
    // the home cell. Cells in shell R are at least R - 0.5 cells from u.
    double best = std::numeric_limits<double>::infinity();
    int best_mode = kNoMode;
    const int max_radius = std::max({spec.cells[0], spec.cells[1], spec.cells[2]});
    for (int radius = 1; radius <= max_radius; ++radius) {
        for (int dx = -radius; dx <= radius; ++dx)
            for (int dy = -radius; dy <= radius; ++dy)
                for (int da = -radius; da <= radius; ++da) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(da)}) != radius) continue;
                    const int ix = home[0] + dx;
                    const int iy = home[1] + dy;
                    int ia = home[2] + da;
                    if (ix < 0 || ix >= spec.cells[0] || iy < 0 || iy >= spec.cells[1]) continue;
                    if (spec.periodic_last) {
                        if (std::abs(da) * 2 > spec.cells[2]) continue;
                        ia = ((ia % spec.cells[2]) + spec.cells[2]) % spec.cells[2];
                    } else if (ia < 0 || ia >= spec.cells[2]) {
                        continue;
                    }
                    const int mode = labels.cell_mode[grid.index(ix, iy, ia)];
                    if (mode == kNoMode) continue;
                    const double d2 = distance2(ix, iy, ia);
                    if (d2 < best) {
                        best = d2;
                        best_mode = mode;
                    }
                }
        if (best_mode != kNoMode && std::sqrt(best) <= radius + 0.5) break;
    }
    if (best_mode == kNoMode) return std::nullopt;
    return best_mode;
}

void write_grid(std::ostream& out, const FeasibilityGrid& grid, int mode_count) {
    const auto& s = grid.spec;
    out.precision(17);
    out << "fdiv-grid 1\n"
        << "cells " << s.cells[0] << ' ' << s.cells[1] << ' ' << s.cells[2] << '\n'
        << "lower " << s.lower[0] << ' ' << s.lower[1] << ' ' << s.lower[2] << '\n'
        << "upper " << s.upper[0] << ' ' << s.upper[1] << ' ' << s.upper[2] << '\n'
        << "periodic " << (s.periodic_last ? 1 : 0) << '\n'
        << "modes " << mode_count << '\n'
        << "end_header\n";
    out.write(reinterpret_cast<const char*>(grid.cells.data()), static_cast<std::streamsize>(grid.cells.size()));
}

FeasibilityGrid read_grid(std::istream& in, int* mode_count) {
    auto expect_line = [&in](const std::string& key) {
        std::string line;
        if (!std::getline(in, line)) throw FormatError("grid file truncated before '" + key + "'");
        std::istringstream fields(line);
        std::string word;
        fields >> word;
        if (word != key) throw FormatError("grid file: expected '" + key + "', got '" + word + "'");
        return fields;
    };
    FeasibilityGrid grid;
    {
        auto f = expect_line("fdiv-grid");
        int version = 0;
        f >> version;
        if (version != 1) throw FormatError("unsupported grid version");
    }
    auto& s = grid.spec;
    {
        auto f = expect_line("cells");
        f >> s.cells[0] >> s.cells[1] >> s.cells[2];
        if (!f || s.cells[0] < 1 || s.cells[1] < 1 || s.cells[2] < 1) throw FormatError("bad grid dimensions");
    }
    {
        auto f = expect_line("lower");
        f >> s.lower[0] >> s.lower[1] >> s.lower[2];
    }
    {
        auto f = expect_line("upper");
        f >> s.upper[0] >> s.upper[1] >> s.upper[2];
    }
    {
        auto f = expect_line("periodic");
        int p = 0;
        f >> p;
        s.periodic_last = p != 0;
    }
    {
        auto f = expect_line("modes");
        int m = 0;
        f >> m;
        if (mode_count) *mode_count = m;
    }
    expect_line("end_header");
    grid.cells.resize(s.total());
    in.read(reinterpret_cast<char*>(grid.cells.data()), static_cast<std::streamsize>(grid.cells.size()));
    if (in.gcount() != static_cast<std::streamsize>(grid.cells.size())) throw FormatError("grid data truncated");
    for (auto c : grid.cells)
        if (c > 1) throw FormatError("grid cell byte must be 0 or 1");
    return grid;
}

void write_grid_csv(std::ostream& out, const FeasibilityGrid& grid, const ModeLabels& labels) {
    const auto& s = grid.spec;
    out << "x,y,a,mode\n";
    out.precision(9);
    for (int ix = 0; ix < s.cells[0]; ++ix)
        for (int iy = 0; iy < s.cells[1]; ++iy)
            for (int ia = 0; ia < s.cells[2]; ++ia) {
                const int mode = labels.cell_mode[grid.index(ix, iy, ia)];
                if (mode == kNoMode) continue;
                out << s.center(0, ix) << ',' << s.center(1, iy) << ',' << s.center(2, ia) << ',' << mode << '\n';
            }
}

std::vector<std::uint8_t> project_xy(const FeasibilityGrid& grid) {
    const auto& s = grid.spec;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(s.cells[0]) * s.cells[1], 0);
    for (int ix = 0; ix < s.cells[0]; ++ix)
        for (int iy = 0; iy < s.cells[1]; ++iy)
            for (int ia = 0; ia < s.cells[2]; ++ia)
                if (grid.at(ix, iy, ia)) out[static_cast<std::size_t>(ix) * s.cells[1] + iy] = 1;
    return out;
}

}  // namespace fdrl
