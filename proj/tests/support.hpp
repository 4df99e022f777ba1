#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance suites.
// The oracles deliberately avoid the library's own helpers (cell_at,
// NavigationGraph, normalize) so they check the code rather than echo it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "termite_nav/termite_nav.hpp"

namespace tn_test {

using namespace termite_nav;

inline TerrainGrid uniform_grid(int rows, int cols, int height = 100, SoilCategory soil = SoilCategory::Gravel,
                                double cellSize = 0.5) {
  TerrainParams params;
  params.cellSizeMeters = cellSize;
  return build_terrain_grid(Matrix<int>(rows, cols, height), Matrix<SoilCategory>(rows, cols, soil), params);
}

inline TerrainGrid random_grid(int rows, int cols, std::mt19937_64& rng, double cellSize = 0.5) {
  std::uniform_int_distribution<int> h(0, 255);
  std::uniform_int_distribution<int> s(0, 4);
  Matrix<int> heights(rows, cols);
  Matrix<SoilCategory> soil(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      heights(r, c) = h(rng);
      soil(r, c) = static_cast<SoilCategory>(s(rng));
    }
  }
  TerrainParams params;
  params.cellSizeMeters = cellSize;
  return build_terrain_grid(heights, soil, params);
}

/// Coarse grid with every cell in the swathe and the given ranks.
inline CoarseGrid coarse_from_ranks(const Matrix<int>& ranks, double cellSize = 2.0) {
  CoarseGrid cg;
  cg.coarseCellSize = cellSize;
  cg.rank = ranks;
  cg.inSwathe = Matrix<std::uint8_t>(ranks.rows(), ranks.cols(), 1);
  return cg;
}

/// Spatially correlated ranks: a blurred random field thresholded into blobs of high and low rank.
inline Matrix<int> blobby_ranks(int rows, int cols, std::mt19937_64& rng, double qualifyingFraction = 0.55) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix<double> noise(rows, cols);
  for (double& v : noise) v = u(rng);
  Matrix<double> blurred(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      int n = 0;
      for (int dr = -2; dr <= 2; ++dr) {
        for (int dc = -2; dc <= 2; ++dc) {
          if (!noise.contains(r + dr, c + dc)) continue;
          sum += noise(r + dr, c + dc);
          ++n;
        }
      }
      blurred(r, c) = sum / n;
    }
  }
  std::vector<double> sorted(blurred.begin(), blurred.end());
  std::sort(sorted.begin(), sorted.end());
  const double cut = sorted[static_cast<std::size_t>((1.0 - qualifyingFraction) * (sorted.size() - 1))];
  std::uniform_int_distribution<int> high(7, 10), low(2, 6);
  Matrix<int> ranks(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) ranks(r, c) = blurred(r, c) >= cut ? high(rng) : low(rng);
  }
  return ranks;
}

/// 4-connected components of the cells for which pred holds. Returns component label per cell, -1 elsewhere.
template <typename Pred>
Matrix<int> flood_fill_components(int rows, int cols, Pred pred, int* count = nullptr) {
  Matrix<int> label(rows, cols, -1);
  int next = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (label(r, c) != -1 || !pred(r, c)) continue;
      std::queue<std::pair<int, int>> q;
      q.push({r, c});
      label(r, c) = next;
      while (!q.empty()) {
        const auto [y, x] = q.front();
        q.pop();
        const int ny[4] = {y - 1, y + 1, y, y};
        const int nx[4] = {x, x, x - 1, x + 1};
        for (int k = 0; k < 4; ++k) {
          if (!label.contains(ny[k], nx[k]) || label(ny[k], nx[k]) != -1 || !pred(ny[k], nx[k])) continue;
          label(ny[k], nx[k]) = next;
          q.push({ny[k], nx[k]});
        }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return label;
}

inline bool is_four_connected(const std::vector<CellIndex>& cells) {
  if (cells.empty()) return false;
  std::set<CellIndex> members(cells.begin(), cells.end());
  std::set<CellIndex> seen{cells.front()};
  std::vector<CellIndex> stack{cells.front()};
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    const CellIndex nb[4] = {{c.row - 1, c.col}, {c.row + 1, c.col}, {c.row, c.col - 1}, {c.row, c.col + 1}};
    for (CellIndex n : nb) {
      if (members.count(n) && seen.insert(n).second) stack.push_back(n);
    }
  }
  return seen.size() == members.size();
}

// ---------------------------------------------------------------------------
// Navigation graph oracle: explicit node list, pairwise adjacency, plain Dijkstra.

struct OracleNode {
  int grid;
  CellIndex cell;
  Box box;
  Point2 center;
  int rank;
};

inline std::vector<OracleNode> oracle_nodes(const DualGrid& dual, const NestPair& nests) {
  std::vector<OracleNode> nodes;
  for (int g = 0; g < 2; ++g) {
    const CoarseGrid& cg = dual.grids[g];
    for (int i = 0; i < cg.rows(); ++i) {
      for (int j = 0; j < cg.cols(); ++j) {
        if (nests[g].nest_of({i, j}) == kNoNest) continue;
        const double x0 = cg.origin.x + j * cg.coarseCellSize;
        const double y0 = cg.origin.y + i * cg.coarseCellSize;
        nodes.push_back({g, {i, j}, {{x0, y0}, {x0 + cg.coarseCellSize, y0 + cg.coarseCellSize}},
                         {x0 + cg.coarseCellSize / 2, y0 + cg.coarseCellSize / 2}, cg.rank(i, j)});
      }
    }
  }
  return nodes;
}

inline bool oracle_adjacent(const OracleNode& a, const OracleNode& b) {
  if (a.grid == b.grid) return std::abs(a.cell.row - b.cell.row) + std::abs(a.cell.col - b.cell.col) == 1;
  const double w = std::min(a.box.max.x, b.box.max.x) - std::max(a.box.min.x, b.box.min.x);
  const double h = std::min(a.box.max.y, b.box.max.y) - std::max(a.box.min.y, b.box.min.y);
  return w > 1e-9 && h > 1e-9;
}

inline std::int64_t oracle_edge_cost(const OracleNode& a, const OracleNode& b, double lambda) {
  const double d = std::sqrt((a.center.x - b.center.x) * (a.center.x - b.center.x) +
                             (a.center.y - b.center.y) * (a.center.y - b.center.y));
  return static_cast<std::int64_t>(std::ceil(d * (1.0 + lambda * (10 - std::min(a.rank, b.rank))) * 1e9));
}

/// Cheapest cost between the nodes holding start and goal (grid 0 preferred), nullopt if unreachable.
inline std::optional<std::int64_t> dijkstra_cost(const DualGrid& dual, const NestPair& nests, Point2 start, Point2 goal,
                                                 double lambda) {
  const auto nodes = oracle_nodes(dual, nests);
  auto locate = [&](Point2 p) -> int {
    for (int g = 0; g < 2; ++g) {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Box& b = nodes[k].box;
        if (nodes[k].grid == g && p.x >= b.min.x && p.x < b.max.x && p.y >= b.min.y && p.y < b.max.y) {
          return static_cast<int>(k);
        }
      }
    }
    return -1;
  };
  const int s = locate(start), t = locate(goal);
  if (s < 0 || t < 0) return std::nullopt;
  const std::size_t n = nodes.size();
  std::vector<std::int64_t> dist(n, std::numeric_limits<std::int64_t>::max());
  std::vector<bool> done(n, false);
  dist[s] = 0;
  for (;;) {
    int u = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (!done[k] && dist[k] != std::numeric_limits<std::int64_t>::max() && (u < 0 || dist[k] < dist[u])) u = k;
    }
    if (u < 0) break;
    done[u] = true;
    if (u == t) break;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || !oracle_adjacent(nodes[u], nodes[v])) continue;
      dist[v] = std::min(dist[v], dist[u] + oracle_edge_cost(nodes[u], nodes[v], lambda));
    }
  }
  if (!done[t]) return std::nullopt;
  return dist[t];
}

/// Random nests over a dual grid: each eligible cell with probability p, then split into components.
inline NestPair random_nests(const DualGrid& dual, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution keep(p);
  NestPair nests{NestMap(dual.grids[0].rows(), dual.grids[0].cols()),
                 NestMap(dual.grids[1].rows(), dual.grids[1].cols())};
  for (int g = 0; g < 2; ++g) {
    std::vector<CellIndex> cells;
    for (int i = 0; i < dual.grids[g].rows(); ++i) {
      for (int j = 0; j < dual.grids[g].cols(); ++j) {
        if (dual.grids[g].eligible({i, j}) && keep(rng)) cells.push_back({i, j});
      }
    }
    nests[g].add_nest(cells);
    nests[g].normalize();
  }
  return nests;
}

// ---------------------------------------------------------------------------
// Experiment fixtures

/// Flat gravel 64x64 arena (32 m square) with the start-goal line at y = 17.
inline Scenario crate_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "hidden-crates";
  s.start = {3.0, 17.0};
  s.goal = {29.0, 17.0};
  s.swarm.seed = seed;
  s.crates = {{{{10.0, 16.4}, {11.0, 17.4}}, false},
              {{{16.0, 16.6}, {17.0, 17.6}}, false},
              {{{21.5, 16.5}, {22.5, 17.5}}, false}};
  // Seed-dependent jitter; every crate still straddles y = 17.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dx(-1.0, 1.0), dy(-0.35, 0.35);
  for (Crate& c : s.crates) {
    const Point2 shift{dx(rng), dy(rng)};
    c.box = {c.box.min + shift, c.box.max + shift};
  }
  return s;
}

/// Same arena; the database says gravel everywhere but a rock patch sits across the route.
inline Scenario soil_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "rock-patch";
  s.start = {3.0, 17.0};
  s.goal = {29.0, 17.0};
  s.swarm.seed = seed;
  s.soilPatches = {{{{14.0, 13.0}, {18.0, 21.0}}, SoilCategory::Rock}};
  return s;
}

inline World flat_world(const Scenario& s, int cells = 64) {
  return make_world(uniform_grid(cells, cells, 100, SoilCategory::Gravel, s.terrain.cellSizeMeters), s);
}

/// Ticks spent on ground-truth rock after the first soil veto event.
inline int rock_ticks_after_veto(const SimResult& r, const World& w) {
  int firstVeto = -1;
  for (const TraceRow& row : r.trace) {
    if (row.event == TraceEvent::SoilVeto) {
      firstVeto = row.tick;
      break;
    }
  }
  if (firstVeto < 0) return 0;
  int ticks = 0, lastTick = -1;
  for (const TraceRow& row : r.trace) {
    if (row.tick <= firstVeto || row.tick == lastTick) continue;
    lastTick = row.tick;
    if (w.groundTruth.at(row.state.position()) == SoilCategory::Rock) ++ticks;
  }
  return ticks;
}

inline int count_events(const SimResult& r, TraceEvent e) {
  return static_cast<int>(std::count_if(r.trace.begin(), r.trace.end(), [&](const TraceRow& row) { return row.event == e; }));
}

}  // namespace tn_test
