#pragma once

// Closed-loop 2D kinematic simulation of the crate experiment.
//
// The database terrain feeds the swarm and the global planner; hidden crates
// and ground-truth soil only reach the robot through its laser scan and its
// penetrometer probe.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/global_planner.hpp"
#include "termite_nav/local_planner.hpp"
#include "termite_nav/swarm.hpp"
#include "termite_nav/terrain.hpp"

namespace termite_nav {

struct SensorParams {
  double fov = std::numbers::pi;
  int nRays = 181;
  double maxRange = 8.0;
};

struct RobotParams {
  double size = 0.5;
  double vMax = 0.5;
  double omegaMax = 1.5;
  double kTheta = 2.0;
};

struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;

  Point2 position() const { return {x, y}; }
  Pose pose() const { return {{x, y}, theta}; }
};

struct Crate {
  Box box;
  bool knownToPlanner = false;
};

struct SoilPatch {
  Box box;
  SoilCategory category = SoilCategory::Rock;
};

// ---------------------------------------------------------------------------
// Sensor and kinematics

namespace detail {

/// Entry distance of a ray into a box, or +inf. A ray starting inside returns 0.
inline double ray_box_entry(Point2 origin, Point2 dir, const Box& box) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  const double lo[2] = {box.min.x, box.min.y};
  const double hi[2] = {box.max.x, box.max.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t1 = (lo[axis] - o[axis]) / d[axis];
    double t2 = (hi[axis] - o[axis]) / d[axis];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::numeric_limits<double>::infinity();
  }
  return tmin;
}

/// Exit distance of a ray from inside the box.
inline double ray_box_exit(Point2 origin, Point2 dir, const Box& box) {
  double tmax = std::numeric_limits<double>::infinity();
  if (dir.x > 0) tmax = std::min(tmax, (box.max.x - origin.x) / dir.x);
  if (dir.x < 0) tmax = std::min(tmax, (box.min.x - origin.x) / dir.x);
  if (dir.y > 0) tmax = std::min(tmax, (box.max.y - origin.y) / dir.y);
  if (dir.y < 0) tmax = std::min(tmax, (box.min.y - origin.y) / dir.y);
  return std::max(0.0, tmax);
}

}  // namespace detail

/// Planar laser fan. Every crate is physically sensed, known or not.
inline RangeScan raycast(const Pose& pose, const SensorParams& sensor, const std::vector<Crate>& crates,
                         const Box& bounds) {
  RangeScan scan;
  scan.maxRange = sensor.maxRange;
  scan.bearings.reserve(sensor.nRays);
  scan.ranges.reserve(sensor.nRays);
  const double step = sensor.nRays > 1 ? sensor.fov / (sensor.nRays - 1) : 0.0;
  for (int k = 0; k < sensor.nRays; ++k) {
    const double bearing = -sensor.fov / 2.0 + k * step;
    const double angle = pose.theta + bearing;
    const Point2 dir{std::cos(angle), std::sin(angle)};
    double range = std::min(sensor.maxRange, detail::ray_box_exit(pose.position, dir, bounds));
    for (const Crate& crate : crates) range = std::min(range, detail::ray_box_entry(pose.position, dir, crate.box));
    scan.bearings.push_back(bearing);
    scan.ranges.push_back(range);
  }
  return scan;
}

/// Unicycle step with a proportional heading controller.
inline RobotState step_kinematics(const RobotState& state, const SteeringCommand& cmd, double dt,
                                  const RobotParams& robot = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
  RobotState next = state;
  next.omega = std::clamp(robot.kTheta * wrap_to_pi(cmd.heading - state.theta), -robot.omegaMax, robot.omegaMax);
  next.v = std::clamp(cmd.speed, 0.0, robot.vMax);
  next.x = state.x + next.v * std::cos(state.theta) * dt;
  next.y = state.y + next.v * std::sin(state.theta) * dt;
  next.theta = wrap_to_pi(state.theta + next.omega * dt);
  return next;
}

/// Ground-truth soil raster aligned with the terrain grid.
struct SoilField {
  Matrix<SoilCategory> categories;
  double cellSize = 1.0;

  double width() const { return categories.cols() * cellSize; }
  double height() const { return categories.rows() * cellSize; }

  /// Floor convention: a point on a shared edge belongs to the cell whose lower edge it is.
  CellIndex cell_at(Point2 p) const {
    if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= width() && p.y <= height())) {
      throw Error(ErrorCode::PointOutsideGrid, "probe outside soil raster");
    }
    return {std::min(static_cast<int>(std::floor(p.y / cellSize)), categories.rows() - 1),
            std::min(static_cast<int>(std::floor(p.x / cellSize)), categories.cols() - 1)};
  }
  SoilCategory at(Point2 p) const { return categories[cell_at(p)]; }
};

inline PenetrometerReading penetrometer_sample(const SoilField& groundTruth, Point2 probe) {
  return {probe, groundTruth.at(probe)};
}

// ---------------------------------------------------------------------------
// Scenario

struct Scenario {
  std::string name;
  std::string heightmapPath;
  std::string soilmapPath;
  CatMapping catMapping;
  TerrainParams terrain;
  Point2 start;
  Point2 goal;
  std::optional<double> startHeading;  // defaults to the bearing toward the goal
  double goalTolerance = 0.5;
  std::vector<Crate> crates;
  std::string groundTruthSoilPath;
  std::vector<SoilPatch> soilPatches;
  SensorParams sensor;
  RobotParams robot;
  SwarmParams swarm;
  VfhParams vfh;
  PlannerParams planner;
  double swatheHalfWidth = 0.0;  // <= 0 means 8 coarse cells
  SoilVetoParams soil;
  double probeLookahead = -1.0;  // < 0 means the veto radius
  double waypointRadius = -1.0;  // < 0 means one coarse cell
  int gradeGoodnessMin = 5;
  double obstacleGrowth = -1.0;  // < 0 means robot radius plus 0.15 m
  double dt = 0.1;
  int maxSteps = 6000;

  double coarse_cell() const { return 4.0 * robot.size; }
  double veto_radius() const { return soil.radius < 0.0 ? coarse_cell() : soil.radius; }
  double probe_lookahead() const { return probeLookahead < 0.0 ? veto_radius() : probeLookahead; }
  double waypoint_radius() const { return waypointRadius < 0.0 ? coarse_cell() : waypointRadius; }
  double obstacle_growth() const { return obstacleGrowth < 0.0 ? robot.size / 2.0 + 0.15 : obstacleGrowth; }
  double swathe_half_width() const { return swatheHalfWidth > 0.0 ? swatheHalfWidth : 8.0 * coarse_cell(); }

  void validate() const {
    if (start == goal) throw Error(ErrorCode::DegenerateEndpoints, "scenario start equals goal");
    if (sensor.nRays < 2) throw Error(ErrorCode::InvalidConfig, "sensor.nRays must be >= 2");
    if (!(sensor.maxRange > 0.0) || !(sensor.fov > 0.0)) throw Error(ErrorCode::InvalidConfig, "sensor geometry");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
    if (maxSteps < 1) throw Error(ErrorCode::InvalidConfig, "maxSteps must be >= 1");
    if (!(robot.size > 0.0) || !(robot.vMax > 0.0) || !(robot.omegaMax > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "robot parameters must be positive");
    }
    // A tick may not carry the robot further than half a histogram cell.
    if (robot.vMax * dt > 0.05 + 1e-12 || robot.vMax * dt > vfh.cellSize) {
      throw Error(ErrorCode::InvalidConfig, "robot.vMax * dt must not exceed 0.05 m");
    }
    if (!(goalTolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "goalTolerance must be positive");
    vfh.validate();
    swarm.validate();
  }
};

struct World {
  TerrainGrid database;  // what the planners know
  SoilField groundTruth;  // what the penetrometer measures
};

/// Rank-2 stamp for crates the planner knows about.
inline void stamp_known_crates(TerrainGrid& grid, const std::vector<Crate>& crates) {
  for (const Crate& crate : crates) {
    if (!crate.knownToPlanner) continue;
    for (int r = 0; r < grid.rows(); ++r) {
      for (int c = 0; c < grid.cols(); ++c) {
        const double x0 = c * grid.cellSizeMeters;
        const double y0 = r * grid.cellSizeMeters;
        const bool overlaps = x0 < crate.box.max.x && x0 + grid.cellSizeMeters > crate.box.min.x &&
                              y0 < crate.box.max.y && y0 + grid.cellSizeMeters > crate.box.min.y;
        if (!overlaps) continue;
        TerrainCell& cell = grid.cells(r, c);
        cell.gradientGoodness = 1;
        cell.soilGoodness = 1;
        cell.rank = 2;
      }
    }
  }
}

inline void apply_soil_patches(SoilField& field, const std::vector<SoilPatch>& patches) {
  for (const SoilPatch& patch : patches) {
    for (int r = 0; r < field.categories.rows(); ++r) {
      for (int c = 0; c < field.categories.cols(); ++c) {
        const Point2 center{(c + 0.5) * field.cellSize, (r + 0.5) * field.cellSize};
        if (patch.box.contains(center)) field.categories(r, c) = patch.category;
      }
    }
  }
}

/// Builds the world from an in-memory database grid (ground truth = database soil + overrides).
inline World make_world(TerrainGrid database, const Scenario& s, const Matrix<SoilCategory>* groundTruth = nullptr) {
  World world;
  world.groundTruth.cellSize = database.cellSizeMeters;
  if (groundTruth) {
    if (groundTruth->rows() != database.rows() || groundTruth->cols() != database.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "ground-truth soil raster differs from terrain grid");
    }
    world.groundTruth.categories = *groundTruth;
  } else {
    world.groundTruth.categories = Matrix<SoilCategory>(database.rows(), database.cols());
    for (int r = 0; r < database.rows(); ++r) {
      for (int c = 0; c < database.cols(); ++c) world.groundTruth.categories(r, c) = database.cells(r, c).soil;
    }
  }
  apply_soil_patches(world.groundTruth, s.soilPatches);
  world.database = std::move(database);
  return world;
}

/// Loads rasters named in the scenario; relative paths resolve against baseDir.
inline World load_world(const Scenario& s, const std::filesystem::path& baseDir = {}) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || baseDir.empty() ? path : baseDir / path).string();
  };
  if (s.heightmapPath.empty() || s.soilmapPath.empty()) {
    throw Error(ErrorCode::InvalidConfig, "scenario needs heightmapPath and soilmapPath");
  }
  const HeightMap hm = load_heightmap_file(resolve(s.heightmapPath));
  const Matrix<int> heights = subsample(hm, s.terrain.blockW, s.terrain.blockH);
  const Matrix<SoilCategory> soil =
      load_soilmap_file(resolve(s.soilmapPath), s.catMapping, heights.rows(), heights.cols());
  TerrainGrid grid = build_terrain_grid(heights, soil, s.terrain);
  if (!s.groundTruthSoilPath.empty()) {
    const Matrix<SoilCategory> truth =
        load_soilmap_file(resolve(s.groundTruthSoilPath), s.catMapping, heights.rows(), heights.cols());
    return make_world(std::move(grid), s, &truth);
  }
  return make_world(std::move(grid), s);
}

// ---------------------------------------------------------------------------
// Run

enum class TraceEvent { None, Replan, SoilVeto, Waypoint, Goal, Collision, Stuck };

inline const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::None: return "none";
    case TraceEvent::Replan: return "replan";
    case TraceEvent::SoilVeto: return "soilVeto";
    case TraceEvent::Waypoint: return "waypoint";
    case TraceEvent::Goal: return "goal";
    case TraceEvent::Collision: return "collision";
    case TraceEvent::Stuck: return "stuck";
  }
  return "none";
}

struct TraceRow {
  int tick = 0;
  RobotState state;
  SteeringCommand command;
  TraceEvent event = TraceEvent::None;
};

struct Outcome {
  bool reached = false;
  bool collided = false;
  bool stuck = false;
  int steps = 0;
  double pathLength = 0.0;
  double minClearance = std::numeric_limits<double>::infinity();
  int replans = 0;
  int soilViolations = 0;
  int gradeViolations = 0;
};

struct SimResult {
  Outcome outcome;
  std::vector<TraceRow> trace;  // one row per event, at least one per tick
  DualGrid dual;
  NestPair initialNests;
  NestPair finalNests;
  GlobalPath initialPath;
  GlobalPath finalPath;
  std::vector<std::size_t> nestCellsAtReplan;  // nest cells of both grids right after each replan
};

struct RunOptions {
  bool parallelSwarm = false;
};

inline bool footprint_hits(Point2 center, double radius, const Box& box) {
  return point_box_distance(center, box) < radius;
}

inline SimResult run_scenario(const Scenario& s, const World& world, const RunOptions& options = {}) {
  s.validate();
  TerrainGrid grid = world.database;
  stamp_known_crates(grid, s.crates);
  const Box bounds{{0.0, 0.0}, {grid.widthMeters(), grid.heightMeters()}};
  if (!grid.inside(s.start) || !grid.inside(s.goal)) throw Error(ErrorCode::PointOutsideGrid, "start or goal outside terrain");

  SimResult result;
  const Swathe swathe = build_swathe(grid, s.start, s.goal, s.swathe_half_width());
  result.dual = build_dual_grids(grid, swathe, s.robot.size);
  const auto swarm = run_swarm_dual(result.dual, s.swarm, options.parallelSwarm);
  CorridorState corridor{{swarm[0].nests, swarm[1].nests}, false};
  result.initialNests = corridor.nests;
  result.initialPath = plan_global(result.dual, corridor.nests, s.start, s.goal, s.planner);

  GlobalPath path = result.initialPath;
  std::vector<Point2> targets = path.waypoints;
  targets.push_back(s.goal);
  std::size_t targetIndex = 0;

  HistogramGrid histogram(s.vfh);
  SoilVetoParams veto = s.soil;
  veto.goodness = s.terrain.soilGoodness;
  const double radius = s.robot.size / 2.0;

  RobotState state;
  state.x = s.start.x;
  state.y = s.start.y;
  state.theta = wrap_to_pi(s.startHeading.value_or(std::atan2(s.goal.y - s.start.y, s.goal.x - s.start.x)));
  Outcome& out = result.outcome;
  bool noSectorLastTick = false;
  std::optional<double> lastHeading;

  auto replan = [&]() -> bool {
    ++out.replans;
    Point2 from = state.position();
    if (!navigable_at(result.dual, corridor.nests, from)) {
      const auto near = nearest_navigable_point(result.dual, corridor.nests, from);
      if (!near) return false;
      from = *near;
    }
    try {
      path = plan_global(result.dual, corridor.nests, from, s.goal, s.planner);
    } catch (const Error& e) {
      if (is_domain_failure(e.code())) return false;
      throw;
    }
    targets = path.waypoints;
    targets.push_back(s.goal);
    targetIndex = 0;
    lastHeading.reset();
    result.nestCellsAtReplan.push_back(corridor.nests[0].cell_count() + corridor.nests[1].cell_count());
    return true;
  };

  for (int tick = 0; tick < s.maxSteps; ++tick) {
    std::vector<TraceEvent> events;
    bool terminate = false;

    update_histogram(histogram, state.pose(), raycast(state.pose(), s.sensor, s.crates, bounds), s.obstacle_growth());

    const double lookahead = s.probe_lookahead();
    const Point2 probe{state.x + lookahead * std::cos(state.theta), state.y + lookahead * std::sin(state.theta)};
    if (grid.inside(probe)) {
      if (apply_soil_reading(penetrometer_sample(world.groundTruth, probe), result.dual, corridor, histogram, veto)) {
        events.push_back(TraceEvent::SoilVeto);
      }
    }
    if (corridor.replanNeeded) {
      corridor.replanNeeded = false;
      events.push_back(TraceEvent::Replan);
      if (!replan()) {
        events.push_back(TraceEvent::Stuck);
        out.stuck = true;
        terminate = true;
      }
    }

    SteeringCommand cmd{state.theta, 0.0};
    if (!terminate) {
      while (targetIndex + 1 < targets.size() && distance(state.position(), targets[targetIndex]) <= s.waypoint_radius()) {
        ++targetIndex;
        events.push_back(TraceEvent::Waypoint);
      }
      const Point2 target = targets[targetIndex];
      const double targetDir = std::atan2(target.y - state.y, target.x - state.x);
      const auto steering = select_direction_sticky(build_polar(histogram, state.pose(), s.vfh), targetDir,
                                                    s.vfh.threshold, s.vfh, lastHeading);
      if (steering) {
        cmd = *steering;
        lastHeading = cmd.heading;
        noSectorLastTick = false;
      } else if (noSectorLastTick) {
        events.push_back(TraceEvent::Stuck);
        out.stuck = true;
        terminate = true;
      } else {
        noSectorLastTick = true;
        events.push_back(TraceEvent::Replan);
        if (!replan()) {
          events.push_back(TraceEvent::Stuck);
          out.stuck = true;
          terminate = true;
        }
      }
    }

    if (!terminate) {
      // Slow down while turning hard so the robot does not sweep forward into what it is steering around.
      const double turn = std::min(1.0, std::abs(s.robot.kTheta * wrap_to_pi(cmd.heading - state.theta)) / s.robot.omegaMax);
      state = step_kinematics(state, {cmd.heading, cmd.speed * (1.0 - turn)}, s.dt, s.robot);
      out.pathLength += std::abs(state.v) * s.dt;
      for (const Crate& crate : s.crates) {
        out.minClearance = std::min(out.minClearance, point_box_distance(state.position(), crate.box) - radius);
        if (footprint_hits(state.position(), radius, crate.box)) out.collided = true;
      }
      if (!grid.inside(state.position())) out.collided = true;
      if (out.collided) {
        events.push_back(TraceEvent::Collision);
        terminate = true;
      } else {
        if (veto.goodness(world.groundTruth.at(state.position())) <= veto.soilBlockThreshold) ++out.soilViolations;
        if (grid.cells[grid.cell_at(state.position())].gradientGoodness < s.gradeGoodnessMin) ++out.gradeViolations;
        if (distance(state.position(), s.goal) <= s.goalTolerance) {
          out.reached = true;
          events.push_back(TraceEvent::Goal);
          terminate = true;
        }
      }
    } else {
      state.v = 0.0;
      state.omega = 0.0;
    }

    out.steps = tick + 1;
    if (events.empty()) events.push_back(TraceEvent::None);
    for (TraceEvent e : events) result.trace.push_back({tick, state, cmd, e});
    if (terminate) break;
  }
  result.finalNests = corridor.nests;
  result.finalPath = path;
  return result;
}

inline SimResult run_scenario(const Scenario& s, const std::filesystem::path& baseDir = {},
                              const RunOptions& options = {}) {
  return run_scenario(s, load_world(s, baseDir), options);
}

/// Runs independent scenarios on up to `jobs` threads. Results come back in input order.
template <typename Fn>
auto run_batch(std::size_t count, int jobs, Fn&& runOne) -> std::vector<decltype(runOne(std::size_t{}))> {
  using Result = decltype(runOne(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(runOne(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  std::vector<Result> results;
  results.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    results.push_back(std::move(*slots[i]));
  }
  return results;
}

// ---------------------------------------------------------------------------
// Serialization

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "tick,x,y,theta,v,omega,event\n";
  char line[256];
  for (const TraceRow& row : trace) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n", row.tick, row.state.x, row.state.y,
                  row.state.theta, row.state.v, row.state.omega, to_string(row.event));
    out << line;
  }
}

inline nlohmann::json outcome_to_json(const Outcome& o) {
  nlohmann::json j;
  j["reached"] = o.reached;
  j["collided"] = o.collided;
  j["stuck"] = o.stuck;
  j["steps"] = o.steps;
  j["pathLength"] = o.pathLength;
  j["minClearance"] = std::isfinite(o.minClearance) ? nlohmann::json(o.minClearance) : nlohmann::json(nullptr);
  j["replans"] = o.replans;
  j["soilViolations"] = o.soilViolations;
  j["gradeViolations"] = o.gradeViolations;
  return j;
}

namespace detail {

inline Point2 json_point(const nlohmann::json& j, const char* what) {
  if (j.is_array() && j.size() == 2) return {j.at(0).get<double>(), j.at(1).get<double>()};
  if (j.is_object()) return {j.at("x").get<double>(), j.at("y").get<double>()};
  throw Error(ErrorCode::MalformedFormat, std::string(what) + " must be [x, y] or {x, y}");
}

inline Box json_box(const nlohmann::json& j) {
  const Point2 a = json_point(j.at("min"), "box.min");
  const Point2 b = json_point(j.at("max"), "box.max");
  if (!(a.x < b.x && a.y < b.y)) throw Error(ErrorCode::MalformedFormat, "box min must be below max");
  return {a, b};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace detail

/// Parses a scenario document. Unknown keys are rejected so typos do not silently fall back to defaults.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  static const std::vector<std::string> known = {
      "name", "heightmapPath", "soilmapPath", "catMapping", "terrain", "start", "goal", "startHeading",
      "goalTolerance", "crates", "groundTruthSoil", "sensor", "robot", "swarm", "vfh", "planner", "corridor",
      "soil", "gradeGoodnessMin", "dt", "maxSteps"};
  if (!j.is_object()) throw Error(ErrorCode::MalformedFormat, "scenario must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::MalformedFormat, "unknown scenario key '" + key + "'");
    }
  }
  try {
    Scenario s;
    read_opt(j, "name", s.name);
    read_opt(j, "heightmapPath", s.heightmapPath);
    read_opt(j, "soilmapPath", s.soilmapPath);
    if (j.contains("catMapping")) s.catMapping = parse_cat_mapping(j.at("catMapping"));
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      read_opt(t, "blockW", s.terrain.blockW);
      read_opt(t, "blockH", s.terrain.blockH);
      read_opt(t, "cellSize", s.terrain.cellSizeMeters);
      if (t.contains("soilGoodness")) {
        for (const auto& [name, value] : t.at("soilGoodness").items()) {
          s.terrain.soilGoodness.goodness[static_cast<std::size_t>(parse_soil_category(name))] = value.get<int>();
        }
      }
    }
    s.start = detail::json_point(j.at("start"), "start");
    s.goal = detail::json_point(j.at("goal"), "goal");
    if (j.contains("startHeading")) s.startHeading = j.at("startHeading").get<double>();
    read_opt(j, "goalTolerance", s.goalTolerance);
    if (j.contains("crates")) {
      for (const auto& c : j.at("crates")) {
        Crate crate{detail::json_box(c), false};
        read_opt(c, "knownToPlanner", crate.knownToPlanner);
        s.crates.push_back(crate);
      }
    }
    if (j.contains("groundTruthSoil")) {
      const auto& g = j.at("groundTruthSoil");
      if (g.is_string()) {
        s.groundTruthSoilPath = g.get<std::string>();
      } else {
        for (const auto& p : g) {
          s.soilPatches.push_back({detail::json_box(p), parse_soil_category(p.at("category").get<std::string>())});
        }
      }
    }
    if (j.contains("sensor")) {
      const auto& x = j.at("sensor");
      read_opt(x, "fov", s.sensor.fov);
      read_opt(x, "nRays", s.sensor.nRays);
      read_opt(x, "maxRange", s.sensor.maxRange);
    }
    if (j.contains("robot")) {
      const auto& x = j.at("robot");
      read_opt(x, "size", s.robot.size);
      read_opt(x, "vMax", s.robot.vMax);
      read_opt(x, "omegaMax", s.robot.omegaMax);
      read_opt(x, "kTheta", s.robot.kTheta);
    }
    if (j.contains("swarm")) {
      const auto& x = j.at("swarm");
      read_opt(x, "nAgents", s.swarm.nAgents);
      read_opt(x, "pelletMax", s.swarm.pelletMax);
      read_opt(x, "rankThreshold", s.swarm.rankThreshold);
      read_opt(x, "maxIterations", s.swarm.maxIterations);
      read_opt(x, "seed", s.swarm.seed);
      read_opt(x, "forageRadius", s.swarm.forageRadius);
      read_opt(x, "stallBudget", s.swarm.stallBudget);
    }
    if (j.contains("vfh")) {
      const auto& x = j.at("vfh");
      read_opt(x, "cellSize", s.vfh.cellSize);
      read_opt(x, "windowHalfWidth", s.vfh.windowHalfWidth);
      read_opt(x, "cMax", s.vfh.cMax);
      read_opt(x, "nSectors", s.vfh.nSectors);
      read_opt(x, "sMin", s.vfh.sMin);
      read_opt(x, "smoothingWindow", s.vfh.smoothingWindow);
      read_opt(x, "a", s.vfh.a);
      read_opt(x, "threshold", s.vfh.threshold);
      read_opt(x, "vMax", s.vfh.vMax);
      read_opt(x, "vMin", s.vfh.vMin);
      read_opt(x, "hysteresisSectors", s.vfh.hysteresisSectors);
      read_opt(x, "obstacleGrowth", s.obstacleGrowth);
    }
    if (j.contains("planner")) read_opt(j.at("planner"), "lambda", s.planner.lambda);
    if (j.contains("corridor")) {
      const auto& x = j.at("corridor");
      read_opt(x, "halfWidth", s.swatheHalfWidth);
      read_opt(x, "waypointRadius", s.waypointRadius);
    }
    if (j.contains("soil")) {
      const auto& x = j.at("soil");
      read_opt(x, "blockThreshold", s.soil.soilBlockThreshold);
      read_opt(x, "radius", s.soil.radius);
      read_opt(x, "probeLookahead", s.probeLookahead);
    }
    read_opt(j, "gradeGoodnessMin", s.gradeGoodnessMin);
    read_opt(j, "dt", s.dt);
    read_opt(j, "maxSteps", s.maxSteps);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFormat, std::string("scenario: ") + e.what());
  }
}

/// Inverse of scenario_from_json. Also serves as the list of keys that overrides may name.
inline nlohmann::json scenario_to_json(const Scenario& s) {
  auto box = [](const Box& b) { return nlohmann::json{{"min", {b.min.x, b.min.y}}, {"max", {b.max.x, b.max.y}}}; };
  nlohmann::json j;
  j["name"] = s.name;
  j["heightmapPath"] = s.heightmapPath;
  j["soilmapPath"] = s.soilmapPath;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [value, cat] : s.catMapping) cats[std::to_string(value)] = to_string(cat);
  j["catMapping"] = cats;
  nlohmann::json goodness = nlohmann::json::object();
  for (SoilCategory cat : kAllSoilCategories) goodness[to_string(cat)] = s.terrain.soilGoodness(cat);
  j["terrain"] = {{"blockW", s.terrain.blockW},
                  {"blockH", s.terrain.blockH},
                  {"cellSize", s.terrain.cellSizeMeters},
                  {"soilGoodness", goodness}};
  j["start"] = {s.start.x, s.start.y};
  j["goal"] = {s.goal.x, s.goal.y};
  if (s.startHeading) j["startHeading"] = *s.startHeading;
  j["goalTolerance"] = s.goalTolerance;
  j["crates"] = nlohmann::json::array();
  for (const Crate& c : s.crates) {
    nlohmann::json cj = box(c.box);
    cj["knownToPlanner"] = c.knownToPlanner;
    j["crates"].push_back(cj);
  }
  if (!s.groundTruthSoilPath.empty()) {
    j["groundTruthSoil"] = s.groundTruthSoilPath;
  } else if (!s.soilPatches.empty()) {
    j["groundTruthSoil"] = nlohmann::json::array();
    for (const SoilPatch& p : s.soilPatches) {
      nlohmann::json pj = box(p.box);
      pj["category"] = to_string(p.category);
      j["groundTruthSoil"].push_back(pj);
    }
  }
  j["sensor"] = {{"fov", s.sensor.fov}, {"nRays", s.sensor.nRays}, {"maxRange", s.sensor.maxRange}};
  j["robot"] = {{"size", s.robot.size}, {"vMax", s.robot.vMax}, {"omegaMax", s.robot.omegaMax}, {"kTheta", s.robot.kTheta}};
  j["swarm"] = {{"nAgents", s.swarm.nAgents},         {"pelletMax", s.swarm.pelletMax},
                {"rankThreshold", s.swarm.rankThreshold}, {"maxIterations", s.swarm.maxIterations},
                {"seed", s.swarm.seed},               {"forageRadius", s.swarm.forageRadius},
                {"stallBudget", s.swarm.stallBudget}};
  j["vfh"] = {{"cellSize", s.vfh.cellSize},   {"windowHalfWidth", s.vfh.windowHalfWidth},
              {"cMax", s.vfh.cMax},           {"nSectors", s.vfh.nSectors},
              {"sMin", s.vfh.sMin},           {"smoothingWindow", s.vfh.smoothingWindow},
              {"a", s.vfh.a},                 {"threshold", s.vfh.threshold},
              {"vMax", s.vfh.vMax},           {"vMin", s.vfh.vMin},
              {"hysteresisSectors", s.vfh.hysteresisSectors}, {"obstacleGrowth", s.obstacleGrowth}};
  j["planner"] = {{"lambda", s.planner.lambda}};
  j["corridor"] = {{"halfWidth", s.swatheHalfWidth}, {"waypointRadius", s.waypointRadius}};
  j["soil"] = {{"blockThreshold", s.soil.soilBlockThreshold}, {"radius", s.soil.radius}, {"probeLookahead", s.probeLookahead}};
  j["gradeGoodnessMin"] = s.gradeGoodnessMin;
  j["dt"] = s.dt;
  j["maxSteps"] = s.maxSteps;
  return j;
}

}  // namespace termite_nav
