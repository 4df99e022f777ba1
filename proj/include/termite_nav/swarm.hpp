#pragma once

// Termite-style nest discovery on a coarse grid.
//
// Agents random-walk the swathe and drop permanent pellets on cells whose
// rank meets the threshold. A cell that collects pelletMax pellets becomes a
// focal point: if its whole in-swathe Moore neighborhood qualifies, a nest is
// built there; otherwise the agent forages around the focal cell for a while
// looking for another cell to seed. Nests that touch (4-adjacency) are merged.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <future>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/matrix.hpp"
#include "termite_nav/nest_map.hpp"

namespace termite_nav {

struct SwarmParams {
  int nAgents = 10;
  int pelletMax = 8;
  int rankThreshold = 7;
  int maxIterations = 2000;
  std::uint64_t seed = 1;
  int forageRadius = 2;
  int stallBudget = 16;

  void validate() const {
    if (nAgents < 1) throw Error(ErrorCode::InvalidConfig, "swarm.nAgents must be >= 1");
    if (pelletMax < 1) throw Error(ErrorCode::InvalidConfig, "swarm.pelletMax must be >= 1");
    if (maxIterations < 1) throw Error(ErrorCode::InvalidConfig, "swarm.maxIterations must be >= 1");
    if (rankThreshold < 2 || rankThreshold > 10) throw Error(ErrorCode::InvalidConfig, "swarm.rankThreshold must be in [2,10]");
    if (forageRadius < 1) throw Error(ErrorCode::InvalidConfig, "swarm.forageRadius must be >= 1");
    if (stallBudget < 1) throw Error(ErrorCode::InvalidConfig, "swarm.stallBudget must be >= 1");
  }
};

using PelletField = Matrix<int>;

enum class AgentMode { Dropping, Building };

struct Agent {
  int id = 0;
  CellIndex position;
  AgentMode mode = AgentMode::Dropping;
  CellIndex focal;
  int stall = 0;
  std::mt19937_64 rng;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream per (seed, stream id).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

/// Uniform integer in [0, n). Rejection sampling so results do not depend on the standard library.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % range);
}

/// Builds a nest on focal plus its in-swathe Moore neighbors if all of them qualify.
/// New nests touching existing ones are merged. Returns the id of the nest holding focal.
inline std::optional<int> try_build_nest(CellIndex focal, const CoarseGrid& grid, NestMap& nests,
                                         const SwarmParams& params) {
  if (!grid.eligible(focal) || nests.in_nest(focal) || grid.rank[focal] < params.rankThreshold) return std::nullopt;
  std::vector<CellIndex> cells{focal};
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const CellIndex n{focal.row + dr, focal.col + dc};
      if (!grid.eligible(n)) continue;
      if (grid.rank[n] < params.rankThreshold) return std::nullopt;
      cells.push_back(n);
    }
  }
  nests.add_nest(cells);
  nests.normalize();
  return nests.nest_of(focal);
}

/// Union of 4-adjacent nests to a fixpoint; survivors keep the smallest id of their group.
inline NestMap merge_nests(NestMap nests) {
  nests.normalize();
  return nests;
}

struct StepOutcome {
  bool pelletDropped = false;
  std::optional<int> nestCreated;
};

namespace detail {

inline bool within_radius(CellIndex a, CellIndex b, int radius) {
  return std::abs(a.row - b.row) <= radius && std::abs(a.col - b.col) <= radius;
}

template <typename Pred>
void move_randomly(Agent& agent, const CoarseGrid& grid, Pred allowed) {
  CellIndex candidates[8];
  std::size_t n = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const CellIndex next{agent.position.row + dr, agent.position.col + dc};
      if (grid.eligible(next) && allowed(next)) candidates[n++] = next;
    }
  }
  if (n > 0) agent.position = candidates[uniform_index(agent.rng, n)];
}

/// Drops a pellet on the agent's cell if it qualifies; returns true when the cell is ready to seed a nest.
inline bool drop_pellet(const Agent& agent, const CoarseGrid& grid, PelletField& pellets, const NestMap& nests,
                        const SwarmParams& params, StepOutcome& out) {
  if (grid.rank[agent.position] < params.rankThreshold) return false;
  ++pellets[agent.position];
  out.pelletDropped = true;
  return pellets[agent.position] >= params.pelletMax && !nests.in_nest(agent.position);
}

}  // namespace detail

/// Advances one agent by one step.
inline StepOutcome step_agent(Agent& agent, const CoarseGrid& grid, PelletField& pellets, NestMap& nests,
                              const SwarmParams& params) {
  StepOutcome out;
  if (agent.mode == AgentMode::Dropping) {
    if (detail::drop_pellet(agent, grid, pellets, nests, params, out)) {
      agent.mode = AgentMode::Building;
      agent.focal = agent.position;
      agent.stall = 0;
      return out;
    }
    detail::move_randomly(agent, grid, [](CellIndex) { return true; });
    return out;
  }

  if (agent.stall == 0 || nests.in_nest(agent.focal)) {
    if (!nests.in_nest(agent.focal)) out.nestCreated = try_build_nest(agent.focal, grid, nests, params);
    if (out.nestCreated || nests.in_nest(agent.focal)) {
      agent.mode = AgentMode::Dropping;
      return out;
    }
  }
  const CellIndex focal = agent.focal;
  detail::move_randomly(agent, grid, [&](CellIndex c) { return detail::within_radius(c, focal, params.forageRadius); });
  if (detail::drop_pellet(agent, grid, pellets, nests, params, out)) {
    out.nestCreated = try_build_nest(agent.position, grid, nests, params);
    if (out.nestCreated) {
      agent.mode = AgentMode::Dropping;
      return out;
    }
  }
  if (++agent.stall >= params.stallBudget) agent.mode = AgentMode::Dropping;
  return out;
}

struct SwarmResult {
  NestMap nests;
  PelletField pellets;

  friend bool operator==(const SwarmResult&, const SwarmResult&) = default;
};

/// Called after every tick with the tick number and the pellet field.
using SwarmObserver = std::function<void(int, const PelletField&, const NestMap&)>;

inline SwarmResult run_swarm_detailed(const CoarseGrid& grid, const SwarmParams& params,
                                      const SwarmObserver& observer = {}) {
  params.validate();
  std::vector<CellIndex> eligible;
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      if (grid.eligible({i, j})) eligible.push_back({i, j});
    }
  }
  if (eligible.empty()) throw Error(ErrorCode::EmptySwathe, "coarse grid has no swathe cells");

  SwarmResult result{NestMap(grid.rows(), grid.cols()), PelletField(grid.rows(), grid.cols(), 0)};
  std::vector<Agent> agents(static_cast<std::size_t>(params.nAgents));
  for (int a = 0; a < params.nAgents; ++a) {
    Agent& agent = agents[a];
    agent.id = a;
    agent.rng = make_stream(params.seed, static_cast<std::uint64_t>(a));
    agent.position = eligible[uniform_index(agent.rng, eligible.size())];
  }
  for (int tick = 0; tick < params.maxIterations; ++tick) {
    for (Agent& agent : agents) step_agent(agent, grid, result.pellets, result.nests, params);
    if (observer) observer(tick, result.pellets, result.nests);
  }
  result.nests = merge_nests(std::move(result.nests));
  return result;
}

inline NestMap run_swarm(const CoarseGrid& grid, const SwarmParams& params) {
  return run_swarm_detailed(grid, params).nests;
}

/// Runs the swarm on both grids. Grid g uses the stream seed derived from (seed, g), so the
/// result does not depend on whether the two runs happen concurrently.
inline std::array<SwarmResult, 2> run_swarm_dual(const DualGrid& dual, const SwarmParams& params,
                                                 bool parallel = false) {
  auto paramsFor = [&](std::size_t g) {
    SwarmParams p = params;
    p.seed = splitmix64(params.seed + g);
    return p;
  };
  if (!parallel) {
    return {run_swarm_detailed(dual.grids[0], paramsFor(0)), run_swarm_detailed(dual.grids[1], paramsFor(1))};
  }
  auto second = std::async(std::launch::async, [&] { return run_swarm_detailed(dual.grids[1], paramsFor(1)); });
  SwarmResult first = run_swarm_detailed(dual.grids[0], paramsFor(0));
  return {std::move(first), second.get()};
}

inline nlohmann::json nest_map_to_json(const NestMap& nests, int threshold) {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["nests"] = nlohmann::json::array();
  for (const auto& [id, cells] : nests.nests()) {
    nlohmann::json cellArray = nlohmann::json::array();
    for (CellIndex c : cells) cellArray.push_back({c.row, c.col});
    j["nests"].push_back({{"id", id}, {"cells", std::move(cellArray)}});
  }
  return j;
}

inline void write_pellet_csv(std::ostream& out, const PelletField& pellets) {
  for (int r = 0; r < pellets.rows(); ++r) {
    for (int c = 0; c < pellets.cols(); ++c) out << (c ? "," : "") << pellets(r, c);
    out << '\n';
  }
}

}  // namespace termite_nav
