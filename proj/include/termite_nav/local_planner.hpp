#pragma once

// Vector field histogram steering.
//
// Range returns accumulate in a robot-centred certainty window. The window is
// reduced to a polar obstacle density per sector, and the robot steers into
// the free valley (run of sectors below threshold) closest to the target
// direction. Penetrometer readings of impassable soil knock the affected
// coarse cells out of the nests and paint the surrounding window cells as
// fully certain obstacles.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <tuple>
#include <optional>
#include <vector>

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/nest_map.hpp"
#include "termite_nav/terrain.hpp"

namespace termite_nav {

struct Pose {
  Point2 position;
  double theta = 0.0;
};

struct VfhParams {
  double cellSize = 0.1;
  double windowHalfWidth = 5.0;
  int cMax = 15;
  int nSectors = 72;
  int sMin = 3;
  int smoothingWindow = 5;
  double a = 1.0;
  double threshold = 100.0;
  double vMax = 0.5;
  double vMin = 0.05;
  int hysteresisSectors = 2;  // used by select_direction_sticky; 0 disables

  double b() const { return a / windowHalfWidth; }

  void validate() const {
    if (!(cellSize > 0.0) || !(windowHalfWidth > cellSize)) throw Error(ErrorCode::InvalidConfig, "vfh window geometry");
    if (cMax < 1 || cMax > 255) throw Error(ErrorCode::InvalidConfig, "vfh.cMax must be in [1,255]");
    if (nSectors < 3) throw Error(ErrorCode::InvalidConfig, "vfh.nSectors must be >= 3");
    if (sMin < 1 || sMin > nSectors) throw Error(ErrorCode::InvalidConfig, "vfh.sMin out of range");
    if (smoothingWindow < 1 || smoothingWindow % 2 == 0) throw Error(ErrorCode::InvalidConfig, "vfh.smoothingWindow must be odd");
    if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "vfh.threshold must be positive");
    if (!(vMax > 0.0) || vMin < 0.0 || vMin > vMax) throw Error(ErrorCode::InvalidConfig, "vfh speed limits");
    if (hysteresisSectors < 0) throw Error(ErrorCode::InvalidConfig, "vfh.hysteresisSectors must be >= 0");
  }
};

struct RangeScan {
  std::vector<double> bearings;  // sensor frame, radians
  std::vector<double> ranges;    // meters, <= maxRange
  double maxRange = 8.0;
};

/// Square certainty window anchored to global cell indices so recentering keeps surviving cells aligned.
class HistogramGrid {
 public:
  HistogramGrid() = default;
  explicit HistogramGrid(const VfhParams& params)
      : cellSize_(params.cellSize),
        halfWidth_(params.windowHalfWidth),
        cMax_(params.cMax),
        side_(static_cast<int>(std::lround(2.0 * params.windowHalfWidth / params.cellSize))),
        cells_(static_cast<std::size_t>(side_) * side_, 0) {}

  int side() const { return side_; }
  int cMax() const { return cMax_; }
  double cell_size() const { return cellSize_; }
  double half_width() const { return halfWidth_; }
  std::int64_t origin_x() const { return originX_; }
  std::int64_t origin_y() const { return originY_; }

  std::int64_t global_index(double coord) const { return static_cast<std::int64_t>(std::floor(coord / cellSize_)); }

  /// Moves the window so the cell holding p is at its centre, dropping cells that fall out.
  void recenter(Point2 p) {
    const std::int64_t ox = global_index(p.x) - side_ / 2;
    const std::int64_t oy = global_index(p.y) - side_ / 2;
    if (centered_ && ox == originX_ && oy == originY_) return;
    std::vector<std::uint8_t> next(cells_.size(), 0);
    if (centered_) {
      for (int y = 0; y < side_; ++y) {
        for (int x = 0; x < side_; ++x) {
          const std::int64_t gx = ox + x;
          const std::int64_t gy = oy + y;
          if (in_window(gx, gy)) next[static_cast<std::size_t>(y) * side_ + x] = value(gx, gy);
        }
      }
    }
    cells_ = std::move(next);
    originX_ = ox;
    originY_ = oy;
    centered_ = true;
  }

  bool in_window(std::int64_t gx, std::int64_t gy) const {
    return gx >= originX_ && gy >= originY_ && gx < originX_ + side_ && gy < originY_ + side_;
  }

  int value(std::int64_t gx, std::int64_t gy) const {
    if (!in_window(gx, gy)) return 0;
    return cells_[slot(gx, gy)];
  }
  int value_at(Point2 p) const { return value(global_index(p.x), global_index(p.y)); }

  /// Saturating +1 on the cell holding p. Returns false if p is outside the window.
  bool add_hit(Point2 p) {
    const std::int64_t gx = global_index(p.x);
    const std::int64_t gy = global_index(p.y);
    if (!in_window(gx, gy)) return false;
    std::uint8_t& c = cells_[slot(gx, gy)];
    if (c < cMax_) ++c;
    return true;
  }

  /// Increments, once each, every window cell whose centre lies within `growth` of some hit.
  void add_grown_hits(const std::vector<Point2>& hits, double growth) {
    std::vector<std::uint8_t> mark(cells_.size(), 0);
    const auto reach = static_cast<std::int64_t>(std::ceil(growth / cellSize_)) + 1;
    for (Point2 h : hits) {
      const std::int64_t hx = global_index(h.x), hy = global_index(h.y);
      for (std::int64_t gy = hy - reach; gy <= hy + reach; ++gy) {
        for (std::int64_t gx = hx - reach; gx <= hx + reach; ++gx) {
          if (!in_window(gx, gy) || distance(cell_center(gx, gy), h) > growth) continue;
          mark[slot(gx, gy)] = 1;
        }
      }
    }
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (mark[k] && cells_[k] < cMax_) ++cells_[k];
    }
  }

  /// Raises every window cell whose centre lies within radius of p to at least `level`.
  int raise_within(Point2 p, double radius, int level) {
    int changed = 0;
    for (int y = 0; y < side_; ++y) {
      for (int x = 0; x < side_; ++x) {
        if (distance(cell_center(originX_ + x, originY_ + y), p) > radius) continue;
        std::uint8_t& c = cells_[static_cast<std::size_t>(y) * side_ + x];
        if (c < level) {
          c = static_cast<std::uint8_t>(level);
          ++changed;
        }
      }
    }
    return changed;
  }

  Point2 cell_center(std::int64_t gx, std::int64_t gy) const {
    return {(static_cast<double>(gx) + 0.5) * cellSize_, (static_cast<double>(gy) + 0.5) * cellSize_};
  }

  /// Calls fn(centre, certainty) for every non-zero cell, row-major.
  template <typename Fn>
  void for_each_occupied(Fn&& fn) const {
    for (int y = 0; y < side_; ++y) {
      for (int x = 0; x < side_; ++x) {
        const int c = cells_[static_cast<std::size_t>(y) * side_ + x];
        if (c > 0) fn(cell_center(originX_ + x, originY_ + y), c);
      }
    }
  }

  friend bool operator==(const HistogramGrid&, const HistogramGrid&) = default;

 private:
  std::size_t slot(std::int64_t gx, std::int64_t gy) const {
    return static_cast<std::size_t>(gy - originY_) * side_ + static_cast<std::size_t>(gx - originX_);
  }

  double cellSize_ = 0.1;
  double halfWidth_ = 5.0;
  int cMax_ = 15;
  int side_ = 0;
  std::int64_t originX_ = 0;
  std::int64_t originY_ = 0;
  bool centered_ = false;
  std::vector<std::uint8_t> cells_;
};

/// Recentres on the pose and adds one hit per return shorter than maxRange.
inline void update_histogram(HistogramGrid& grid, const Pose& pose, const RangeScan& scan, double growth = 0.0) {
  grid.recenter(pose.position);
  std::vector<Point2> hits;
  for (std::size_t k = 0; k < scan.ranges.size(); ++k) {
    const double r = scan.ranges[k];
    if (!(r < scan.maxRange)) continue;
    const double angle = pose.theta + scan.bearings[k];
    hits.push_back({pose.position.x + r * std::cos(angle), pose.position.y + r * std::sin(angle)});
  }
  if (growth <= 0.0) {
    for (Point2 h : hits) grid.add_hit(h);
  } else {
    grid.add_grown_hits(hits, growth);
  }
}

struct PolarHistogram {
  std::vector<double> density;

  int sectors() const { return static_cast<int>(density.size()); }
  double sector_width() const { return 2.0 * std::numbers::pi / sectors(); }
  int sector_of(double angle) const {
    const int k = static_cast<int>(std::floor(wrap_to_2pi(angle) / sector_width() + 1e-9));
    return k % sectors();
  }
  double sector_center(int k) const { return wrap_to_pi((k + 0.5) * sector_width()); }
};

/// Polar density before smoothing.
inline PolarHistogram build_polar_raw(const HistogramGrid& grid, const Pose& pose, const VfhParams& params) {
  PolarHistogram polar{std::vector<double>(static_cast<std::size_t>(params.nSectors), 0.0)};
  const double b = params.b();
  grid.for_each_occupied([&](Point2 center, int c) {
    const Point2 rel = center - pose.position;
    const double d = norm(rel);
    if (d > params.windowHalfWidth) return;
    const double magnitude = static_cast<double>(c) * c * (params.a - b * d);
    polar.density[polar.sector_of(std::atan2(rel.y, rel.x))] += magnitude;
  });
  return polar;
}

/// Circular moving average over `window` sectors.
inline PolarHistogram smooth_polar(const PolarHistogram& raw, int window) {
  const int n = raw.sectors();
  const int half = window / 2;
  PolarHistogram out{std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) sum += raw.density[((k + i) % n + n) % n];
    out.density[k] = sum / window;
  }
  return out;
}

inline PolarHistogram build_polar(const HistogramGrid& grid, const Pose& pose, const VfhParams& params) {
  return smooth_polar(build_polar_raw(grid, pose, params), params.smoothingWindow);
}

struct SteeringCommand {
  double heading = 0.0;  // world frame
  double speed = 0.0;
};

/// Maximal circular run of sectors below threshold.
struct FreeRun {
  int start = 0;
  int length = 0;

  int end(int n) const { return (start + length - 1) % n; }
  bool contains(int k, int n) const { return ((k - start) % n + n) % n < length; }
};

inline std::vector<FreeRun> free_runs(const PolarHistogram& polar, double threshold) {
  const int n = polar.sectors();
  std::vector<FreeRun> runs;
  int blocked = -1;
  for (int k = 0; k < n; ++k) {
    if (!(polar.density[k] < threshold)) {
      blocked = k;
      break;
    }
  }
  if (blocked < 0) return {FreeRun{0, n}};
  // Walk one full turn starting just after a blocked sector; the walk ends on it, closing the last run.
  FreeRun current{0, 0};
  for (int step = 1; step <= n; ++step) {
    const int k = (blocked + step) % n;
    if (polar.density[k] < threshold) {
      if (current.length == 0) current.start = k;
      ++current.length;
    } else if (current.length > 0) {
      runs.push_back(current);
      current = {0, 0};
    }
  }
  return runs;
}

namespace detail {

struct ValleyChoice {
  int dist;
  int side;  // 0: target inside or run reached counterclockwise, 1: clockwise
  int sector;

  bool better_than(const ValleyChoice& o) const { return std::tie(dist, side, sector) < std::tie(o.dist, o.side, o.sector); }
};

inline ValleyChoice valley_choice(const FreeRun& run, int target, int n, int shift) {
  if (run.contains(target, n)) return {0, 0, target};
  const int ccw = ((run.start - target) % n + n) % n;
  const int cw = ((target - run.end(n)) % n + n) % n;
  if (ccw <= cw) return {ccw, 0, (run.start + shift) % n};
  return {cw, 1, ((run.end(n) - shift) % n + n) % n};
}

inline SteeringCommand steering_for(const PolarHistogram& polar, const ValleyChoice& c, double targetDir,
                                    double threshold, const VfhParams& params) {
  SteeringCommand cmd;
  cmd.heading = c.dist == 0 ? wrap_to_pi(targetDir) : polar.sector_center(c.sector);
  const double density = polar.density[c.sector];
  cmd.speed = std::max(params.vMin, params.vMax * (1.0 - std::min(1.0, density / threshold)));
  return cmd;
}

}  // namespace detail

/// Heading and speed toward the free valley nearest targetDir, or nullopt when no valley of sMin sectors exists.
/// Equal distances resolve counterclockwise.
inline std::optional<SteeringCommand> select_direction(const PolarHistogram& polar, double targetDir, double threshold,
                                                       const VfhParams& params) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be positive");
  const int n = polar.sectors();
  const int target = polar.sector_of(targetDir);
  std::optional<detail::ValleyChoice> best;
  for (const FreeRun& run : free_runs(polar, threshold)) {
    if (run.length < params.sMin) continue;
    const detail::ValleyChoice c = detail::valley_choice(run, target, n, params.sMin / 2);
    if (!best || c.better_than(*best)) best = c;
  }
  if (!best) return std::nullopt;
  return detail::steering_for(polar, *best, targetDir, threshold, params);
}

/// select_direction with hysteresis: while the target sector is blocked, keep steering at the valley edge
/// used last tick unless another edge is more than params.hysteresisSectors closer to the target.
/// Stops the left/right flip-flop in front of an obstacle centred on the route.
inline std::optional<SteeringCommand> select_direction_sticky(const PolarHistogram& polar, double targetDir,
                                                              double threshold, const VfhParams& params,
                                                              std::optional<double> previousHeading) {
  const auto plain = select_direction(polar, targetDir, threshold, params);
  const int margin = params.hysteresisSectors;
  if (!plain || !previousHeading || margin <= 0) return plain;
  const int n = polar.sectors();
  const int target = polar.sector_of(targetDir);
  const int previous = polar.sector_of(*previousHeading);
  const int shift = params.sMin / 2;
  auto circular = [n](int a, int b) {
    const int d = ((a - b) % n + n) % n;
    return std::min(d, n - d);
  };
  std::optional<detail::ValleyChoice> best, kept;
  int keptOffset = n;
  for (const FreeRun& run : free_runs(polar, threshold)) {
    if (run.length < params.sMin) continue;
    if (run.contains(target, n)) return plain;
    const detail::ValleyChoice edges[2] = {
        {((run.start - target) % n + n) % n, 0, (run.start + shift) % n},
        {((target - run.end(n)) % n + n) % n, 1, ((run.end(n) - shift) % n + n) % n}};
    for (const detail::ValleyChoice& c : edges) {
      if (!best || c.better_than(*best)) best = c;
      const int offset = circular(c.sector, previous);
      if (offset < keptOffset) {
        keptOffset = offset;
        kept = c;
      }
    }
  }
  if (!kept || keptOffset > margin || kept->dist > best->dist + margin) return plain;
  return detail::steering_for(polar, *kept, targetDir, threshold, params);
}

// ---------------------------------------------------------------------------
// Penetrometer soil veto

struct PenetrometerReading {
  Point2 position;
  SoilCategory category = SoilCategory::Gravel;
};

struct SoilVetoParams {
  int soilBlockThreshold = 1;
  double radius = -1.0;  // histogram stamping radius; negative means one coarse cell
  SoilGoodnessTable goodness;
};

/// Mutable navigability state shared between the local and global planners.
struct CorridorState {
  NestPair nests;
  bool replanNeeded = false;
};

/// Applies a penetrometer reading. Returns true if the nests changed.
inline bool apply_soil_reading(const PenetrometerReading& reading, const DualGrid& dual, CorridorState& state,
                               HistogramGrid& histogram, const SoilVetoParams& params = {}) {
  if (!dual.inside(reading.position)) throw Error(ErrorCode::PointOutsideGrid, "reading outside terrain bounds");
  if (params.goodness(reading.category) > params.soilBlockThreshold) return false;
  bool changed = false;
  for (std::size_t g = 0; g < 2; ++g) {
    const auto idx = dual.grids[g].cell_at(reading.position);
    if (idx && state.nests[g].remove_cell(*idx)) {
      state.nests[g].normalize();
      changed = true;
    }
  }
  const double radius = params.radius < 0.0 ? dual.coarseCellSize : params.radius;
  histogram.raise_within(reading.position, radius, histogram.cMax());
  if (changed) state.replanNeeded = true;
  return changed;
}

}  // namespace termite_nav
