#pragma once

// Swathe selection around the start-goal segment and the two offset coarse
// grids that the swarm and the global planner work on.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <nlohmann/json.hpp>

#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/matrix.hpp"
#include "termite_nav/nest_map.hpp"
#include "termite_nav/terrain.hpp"

namespace termite_nav {

struct Swathe {
  Matrix<std::uint8_t> members;  // over the fine terrain grid
  double halfWidth = 0.0;

  bool contains(CellIndex idx) const { return members.contains(idx) && members[idx]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(members.begin(), members.end(), std::uint8_t{1})); }
};

/// Cells whose centers lie within halfWidth of the start-goal segment, plus the start and goal cells.
inline Swathe build_swathe(const TerrainGrid& grid, Point2 start, Point2 goal, double halfWidth) {
  if (!grid.inside(start) || !grid.inside(goal)) throw Error(ErrorCode::PointOutsideGrid, "endpoint outside terrain");
  if (start == goal) throw Error(ErrorCode::DegenerateEndpoints, "start equals goal");
  if (!(halfWidth > 0.0)) throw Error(ErrorCode::InvalidConfig, "swathe half width must be positive");
  Swathe swathe;
  swathe.halfWidth = halfWidth;
  swathe.members = Matrix<std::uint8_t>(grid.rows(), grid.cols(), 0);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double d = point_segment_distance(grid.cell_center({r, c}), start, goal);
      swathe.members(r, c) = d <= halfWidth + 1e-9 ? 1 : 0;
    }
  }
  swathe.members[grid.cell_at(start)] = 1;
  swathe.members[grid.cell_at(goal)] = 1;
  return swathe;
}

/// One coarse lattice. Storage cell (0,0) has its lower corner at `origin`;
/// lattice lines sit at originOffset + k * coarseCellSize in both axes.
struct CoarseGrid {
  double coarseCellSize = 0.0;
  double originOffset = 0.0;
  Point2 origin;
  Matrix<int> rank;       // min rank over covered fine cells; 0 where nothing is covered
  Matrix<std::uint8_t> inSwathe;  // eligible for agents and planning

  int rows() const { return rank.rows(); }
  int cols() const { return rank.cols(); }

  bool eligible(CellIndex idx) const { return inSwathe.contains(idx) && inSwathe[idx]; }

  Point2 cell_center(CellIndex idx) const {
    return {origin.x + (idx.col + 0.5) * coarseCellSize, origin.y + (idx.row + 0.5) * coarseCellSize};
  }
  Box cell_box(CellIndex idx) const {
    const Point2 lo{origin.x + idx.col * coarseCellSize, origin.y + idx.row * coarseCellSize};
    return {lo, {lo.x + coarseCellSize, lo.y + coarseCellSize}};
  }
  /// Storage cell containing p (floor convention), or nullopt if outside storage.
  std::optional<CellIndex> cell_at(Point2 p) const {
    const CellIndex idx{static_cast<int>(std::floor((p.y - origin.y) / coarseCellSize)),
                        static_cast<int>(std::floor((p.x - origin.x) / coarseCellSize))};
    if (!rank.contains(idx)) return std::nullopt;
    return idx;
  }

  friend bool operator==(const CoarseGrid&, const CoarseGrid&) = default;
};

struct DualGrid {
  double robotSize = 0.0;
  double coarseCellSize = 0.0;
  Point2 terrainExtent;  // width, height in meters
  std::array<CoarseGrid, 2> grids;

  bool inside(Point2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= terrainExtent.x && p.y <= terrainExtent.y; }

  friend bool operator==(const DualGrid&, const DualGrid&) = default;
};

using NestPair = std::array<NestMap, 2>;

namespace detail {

/// Fine index range [lo, hi] overlapping the open interval (a, b) with positive length.
inline std::pair<int, int> overlapped_fine_range(double a, double b, double fine, int count) {
  constexpr double eps = 1e-9;
  const int lo = std::max(0, static_cast<int>(std::floor(a / fine + eps)));
  const int hi = std::min(count - 1, static_cast<int>(std::ceil(b / fine - eps)) - 1);
  return {lo, hi};
}

inline CoarseGrid build_coarse_grid(const TerrainGrid& grid, const Swathe& swathe, double cellSize, double offset) {
  CoarseGrid cg;
  cg.coarseCellSize = cellSize;
  cg.originOffset = offset;
  const double start = offset > 0.0 ? offset - cellSize : 0.0;
  cg.origin = {start, start};
  const int cols = static_cast<int>(std::ceil((grid.widthMeters() - start) / cellSize - 1e-9));
  const int rows = static_cast<int>(std::ceil((grid.heightMeters() - start) / cellSize - 1e-9));
  cg.rank = Matrix<int>(rows, cols, 0);
  cg.inSwathe = Matrix<std::uint8_t>(rows, cols, 0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const Box box = cg.cell_box({i, j});
      const auto [c0, c1] = overlapped_fine_range(box.min.x, box.max.x, grid.cellSizeMeters, grid.cols());
      const auto [r0, r1] = overlapped_fine_range(box.min.y, box.max.y, grid.cellSizeMeters, grid.rows());
      int minRank = std::numeric_limits<int>::max();
      bool touchesSwathe = false;
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          minRank = std::min(minRank, grid.cells(r, c).rank);
          touchesSwathe = touchesSwathe || swathe.contains({r, c});
        }
      }
      if (minRank == std::numeric_limits<int>::max()) continue;
      cg.rank(i, j) = minRank;
      cg.inSwathe(i, j) = touchesSwathe && grid.inside(cg.cell_center({i, j})) ? 1 : 0;
    }
  }
  return cg;
}

}  // namespace detail

/// Two coarse grids of 4x robot size, the second shifted by a quarter cell in both axes.
/// Coarse rank is the minimum over every fine cell the coarse cell overlaps.
inline DualGrid build_dual_grids(const TerrainGrid& grid, const Swathe& swathe, double robotSize) {
  if (!(robotSize > 0.0)) throw Error(ErrorCode::InvalidConfig, "robot size must be positive");
  if (swathe.count() == 0) throw Error(ErrorCode::EmptySwathe, "swathe has no cells");
  DualGrid dual;
  dual.robotSize = robotSize;
  dual.coarseCellSize = 4.0 * robotSize;
  dual.terrainExtent = {grid.widthMeters(), grid.heightMeters()};
  dual.grids[0] = detail::build_coarse_grid(grid, swathe, dual.coarseCellSize, 0.0);
  dual.grids[1] = detail::build_coarse_grid(grid, swathe, dual.coarseCellSize, dual.coarseCellSize / 4.0);
  return dual;
}

/// True iff the coarse cell containing p is nested in either grid.
inline bool navigable_at(const DualGrid& dual, const NestPair& nests, Point2 p) {
  if (!dual.inside(p)) throw Error(ErrorCode::PointOutsideGrid, "point outside terrain bounds");
  for (std::size_t g = 0; g < 2; ++g) {
    const auto idx = dual.grids[g].cell_at(p);
    if (idx && nests[g].in_nest(*idx)) return true;
  }
  return false;
}

inline nlohmann::json dual_grid_to_json(const DualGrid& dual) {
  nlohmann::json j;
  j["robotSize"] = dual.robotSize;
  j["coarseCellSize"] = dual.coarseCellSize;
  j["offsets"] = {dual.grids[0].originOffset, dual.grids[1].originOffset};
  j["grids"] = nlohmann::json::array();
  for (const CoarseGrid& cg : dual.grids) {
    nlohmann::json g;
    g["originOffset"] = cg.originOffset;
    g["origin"] = {cg.origin.x, cg.origin.y};
    g["rows"] = cg.rows();
    g["cols"] = cg.cols();
    g["cells"] = nlohmann::json::array();
    for (int i = 0; i < cg.rows(); ++i) {
      for (int j2 = 0; j2 < cg.cols(); ++j2) {
        g["cells"].push_back({{"i", i}, {"j", j2}, {"rank", cg.rank(i, j2)}, {"inSwathe", cg.inSwathe(i, j2) != 0}});
      }
    }
    j["grids"].push_back(std::move(g));
  }
  return j;
}

}  // namespace termite_nav
