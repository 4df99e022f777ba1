#pragma once

// A* over the nest cells of both coarse grids.
//
// Nodes are nested cells of grid 0 and grid 1. Cells of one grid are joined
// to their 4-neighbors; cells of different grids are joined when their areas
// overlap. An edge costs the center distance scaled by
// (1 + lambda * (10 - min rank of its endpoints)). Costs are kept as integer
// nanometers so that sums are exact and independent of summation order.

#include <cmath>
#include <cstdint>
#include <limits>
#include <algorithm>
#include <optional>
#include <ostream>
#include <queue>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/nest_map.hpp"

namespace termite_nav {

using PathCost = std::int64_t;
inline constexpr double kCostUnitsPerMeter = 1e9;

struct PlannerParams {
  double lambda = 0.1;
};

struct PathNode {
  int grid = 0;
  CellIndex cell;

  friend bool operator==(const PathNode&, const PathNode&) = default;
  friend auto operator<=>(const PathNode&, const PathNode&) = default;
};

struct GlobalPath {
  std::vector<Point2> waypoints;
  std::vector<PathNode> nodes;
  double totalLength = 0.0;
  PathCost cost = 0;

  double cost_meters() const { return static_cast<double>(cost) / kCostUnitsPerMeter; }
};

/// Quantized cost of moving between two cell centers.
inline PathCost edge_cost(Point2 a, Point2 b, int rankA, int rankB, double lambda) {
  const double factor = 1.0 + lambda * (10 - std::min(rankA, rankB));
  return static_cast<PathCost>(std::ceil(distance(a, b) * factor * kCostUnitsPerMeter));
}

/// Cell of the dual grid that makes p navigable; grid 0 wins when both do.
inline std::optional<PathNode> snap_to_nest(const DualGrid& dual, const NestPair& nests, Point2 p) {
  if (!dual.inside(p)) throw Error(ErrorCode::PointOutsideGrid, "point outside terrain bounds");
  for (int g = 0; g < 2; ++g) {
    const auto idx = dual.grids[g].cell_at(p);
    if (idx && nests[g].in_nest(*idx)) return PathNode{g, *idx};
  }
  return std::nullopt;
}

/// Center of the nested cell (either grid) nearest to p; ties go to the smaller (grid, row, col).
inline std::optional<Point2> nearest_navigable_point(const DualGrid& dual, const NestPair& nests, Point2 p) {
  std::optional<Point2> best;
  double bestDist = std::numeric_limits<double>::infinity();
  for (int g = 0; g < 2; ++g) {
    for (const auto& [id, cells] : nests[g].nests()) {
      for (CellIndex c : cells) {
        const Point2 center = dual.grids[g].cell_center(c);
        const double d = distance(center, p);
        if (d < bestDist) {
          bestDist = d;
          best = center;
        }
      }
    }
  }
  return best;
}

namespace detail {

class NavigationGraph {
 public:
  NavigationGraph(const DualGrid& dual, const NestPair& nests) : dual_(dual), nests_(nests) {
    offset_[0] = 0;
    offset_[1] = dual.grids[0].rows() * dual.grids[0].cols();
    size_ = offset_[1] + dual.grids[1].rows() * dual.grids[1].cols();
  }

  int size() const { return size_; }
  int id(PathNode n) const { return offset_[n.grid] + n.cell.row * dual_.grids[n.grid].cols() + n.cell.col; }
  PathNode node(int id) const {
    const int g = id >= offset_[1] ? 1 : 0;
    const int local = id - offset_[g];
    const int cols = dual_.grids[g].cols();
    return {g, {local / cols, local % cols}};
  }
  Point2 center(PathNode n) const { return dual_.grids[n.grid].cell_center(n.cell); }
  int rank(PathNode n) const { return dual_.grids[n.grid].rank[n.cell]; }
  bool active(PathNode n) const { return nests_[n.grid].in_nest(n.cell); }

  template <typename Fn>
  void for_each_neighbor(PathNode n, Fn&& fn) const {
    static constexpr int dr[4] = {-1, 0, 0, 1};
    static constexpr int dc[4] = {0, -1, 1, 0};
    for (int k = 0; k < 4; ++k) {
      const PathNode m{n.grid, {n.cell.row + dr[k], n.cell.col + dc[k]}};
      if (active(m)) fn(m);
    }
    const int other = 1 - n.grid;
    const CoarseGrid& og = dual_.grids[other];
    const Box box = dual_.grids[n.grid].cell_box(n.cell);
    constexpr double eps = 1e-9;
    const double cs = og.coarseCellSize;
    const int c0 = static_cast<int>(std::floor((box.min.x - og.origin.x) / cs + eps));
    const int c1 = static_cast<int>(std::ceil((box.max.x - og.origin.x) / cs - eps)) - 1;
    const int r0 = static_cast<int>(std::floor((box.min.y - og.origin.y) / cs + eps));
    const int r1 = static_cast<int>(std::ceil((box.max.y - og.origin.y) / cs - eps)) - 1;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const PathNode m{other, {r, c}};
        if (active(m)) fn(m);
      }
    }
  }

 private:
  const DualGrid& dual_;
  const NestPair& nests_;
  int offset_[2] = {0, 0};
  int size_ = 0;
};

}  // namespace detail

/// Cheapest path through nests from the cell holding start to the cell holding goal.
inline GlobalPath plan_global(const DualGrid& dual, const NestPair& nests, Point2 start, Point2 goal,
                              const PlannerParams& params = {}) {
  const auto startNode = snap_to_nest(dual, nests, start);
  if (!startNode) throw Error(ErrorCode::StartNotNavigable, "start is not inside any nest");
  const auto goalNode = snap_to_nest(dual, nests, goal);
  if (!goalNode) throw Error(ErrorCode::GoalNotNavigable, "goal is not inside any nest");

  const detail::NavigationGraph graph(dual, nests);
  const Point2 goalCenter = graph.center(*goalNode);
  // Slightly shrunk so it never exceeds the quantized true cost.
  auto heuristic = [&](PathNode n) {
    return static_cast<PathCost>(std::floor(distance(graph.center(n), goalCenter) * kCostUnitsPerMeter * (1.0 - 1e-9)));
  };

  constexpr PathCost kInf = std::numeric_limits<PathCost>::max();
  std::vector<PathCost> best(static_cast<std::size_t>(graph.size()), kInf);
  std::vector<int> parent(static_cast<std::size_t>(graph.size()), -1);
  using Entry = std::tuple<PathCost, PathNode, PathCost>;  // f, node, g
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  best[graph.id(*startNode)] = 0;
  open.emplace(heuristic(*startNode), *startNode, 0);
  bool found = false;
  while (!open.empty()) {
    const auto [f, node, g] = open.top();
    open.pop();
    const int nid = graph.id(node);
    if (g != best[nid]) continue;
    if (node == *goalNode) {
      found = true;
      break;
    }
    graph.for_each_neighbor(node, [&](PathNode next) {
      const PathCost step = edge_cost(graph.center(node), graph.center(next), graph.rank(node), graph.rank(next),
                                      params.lambda);
      const PathCost ng = g + step;
      const int mid = graph.id(next);
      if (ng < best[mid]) {
        best[mid] = ng;
        parent[mid] = nid;
        open.emplace(ng + heuristic(next), next, ng);
      }
    });
  }
  if (!found) throw Error(ErrorCode::NoPath, "goal unreachable through nests");

  GlobalPath path;
  path.cost = best[graph.id(*goalNode)];
  for (int id = graph.id(*goalNode); id != -1; id = parent[id]) path.nodes.push_back(graph.node(id));
  std::reverse(path.nodes.begin(), path.nodes.end());
  for (const PathNode& n : path.nodes) {
    const Point2 c = graph.center(n);
    if (!path.waypoints.empty()) path.totalLength += distance(path.waypoints.back(), c);
    path.waypoints.push_back(c);
  }
  return path;
}

inline void write_path_csv(std::ostream& out, const GlobalPath& path) {
  out << "x_m,y_m\n";
  for (const Point2& p : path.waypoints) out << p.x << ',' << p.y << '\n';
}

inline nlohmann::json path_to_json(const GlobalPath& path) {
  nlohmann::json wp = nlohmann::json::array();
  for (const Point2& p : path.waypoints) wp.push_back({p.x, p.y});
  return {{"cost", path.cost_meters()}, {"length", path.totalLength}, {"waypoints", std::move(wp)}};
}

}  // namespace termite_nav
