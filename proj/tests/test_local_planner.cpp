#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support.hpp"

using namespace termite_nav;

namespace {

constexpr double kPi = std::numbers::pi;

RangeScan empty_scan(int n = 181, double maxRange = 8.0) {
  RangeScan s;
  s.maxRange = maxRange;
  for (int k = 0; k < n; ++k) {
    s.bearings.push_back(-kPi / 2 + k * kPi / (n - 1));
    s.ranges.push_back(maxRange);
  }
  return s;
}

int total_certainty(const HistogramGrid& g) {
  int sum = 0;
  g.for_each_occupied([&](Point2, int c) { sum += c; });
  return sum;
}

PolarHistogram polar_of(std::vector<double> d) { return PolarHistogram{std::move(d)}; }

struct OracleChoice {
  bool found = false;
  int sector = -1;
  bool targetInside = false;
};

// Independent valley search: enumerate maximal runs from their starting sectors.
OracleChoice oracle_direction(const std::vector<double>& h, int target, double threshold, int sMin) {
  const int n = static_cast<int>(h.size());
  std::vector<bool> freeSector(n);
  for (int k = 0; k < n; ++k) freeSector[k] = h[k] < threshold;
  OracleChoice best;
  if (std::all_of(freeSector.begin(), freeSector.end(), [](bool f) { return f; })) {
    return n >= sMin ? OracleChoice{true, target, true} : OracleChoice{};
  }
  int bestDist = 1 << 30, bestSide = 2;
  for (int s = 0; s < n; ++s) {
    if (!freeSector[s] || freeSector[(s - 1 + n) % n]) continue;
    int len = 0;
    while (freeSector[(s + len) % n]) ++len;
    if (len < sMin) continue;
    const int e = (s + len - 1) % n;
    bool inside = false;
    for (int i = 0; i < len; ++i) inside = inside || (s + i) % n == target;
    int dist, side, sector;
    if (inside) {
      dist = 0, side = 0, sector = target;
    } else {
      const int ccw = ((s - target) % n + n) % n;
      const int cw = ((target - e) % n + n) % n;
      if (ccw <= cw) {
        dist = ccw, side = 0, sector = (s + sMin / 2) % n;
      } else {
        dist = cw, side = 1, sector = ((e - sMin / 2) % n + n) % n;
      }
    }
    if (dist < bestDist || (dist == bestDist && (side < bestSide || (side == bestSide && sector < best.sector)))) {
      bestDist = dist, bestSide = side;
      best = {true, sector, inside};
    }
  }
  return best;
}

bool oracle_has_run(const std::vector<double>& h, double threshold, int sMin) {
  const int n = static_cast<int>(h.size());
  for (int s = 0; s < n; ++s) {
    bool ok = true;
    for (int i = 0; i < sMin && ok; ++i) ok = h[(s + i) % n] < threshold;
    if (ok) return true;
  }
  return false;
}

}  // namespace

TEST(Histogram, EmptyScanLeavesGridUntouched) {
  HistogramGrid g(VfhParams{});
  update_histogram(g, {{1.0, 1.0}, 0.3}, empty_scan());
  EXPECT_EQ(total_certainty(g), 0);
}

TEST(Histogram, SingleReturnIncrementsOneCell) {
  HistogramGrid g(VfhParams{});
  RangeScan s = empty_scan();
  s.ranges[90] = 2.0;  // bearing 0
  update_histogram(g, {{1.03, 1.03}, 0.0}, s);
  EXPECT_EQ(total_certainty(g), 1);
  EXPECT_EQ(g.value_at({3.03, 1.03}), 1);
}

TEST(Histogram, SaturatesAtCMax) {
  const VfhParams p;
  HistogramGrid g(p);
  RangeScan s = empty_scan();
  s.ranges[90] = 2.0;
  for (int k = 0; k < p.cMax + 5; ++k) update_histogram(g, {{1.03, 1.03}, 0.0}, s);
  EXPECT_EQ(g.value_at({3.03, 1.03}), p.cMax);
  EXPECT_EQ(total_certainty(g), p.cMax);
}

TEST(Histogram, RecenterDropsCellsLeavingTheWindow) {
  HistogramGrid g(VfhParams{});
  g.recenter({0.0, 0.0});
  ASSERT_TRUE(g.add_hit({4.5, 0.0}));
  ASSERT_TRUE(g.add_hit({-4.5, 0.0}));
  g.recenter({2.0, 0.0});
  EXPECT_EQ(g.value_at({4.5, 0.0}), 1);
  EXPECT_EQ(g.value_at({-4.5, 0.0}), 0);
  EXPECT_FALSE(g.add_hit({-4.5, 0.0}));
}

TEST(Histogram, GrownHitsMarkDiskOncePerScan) {
  HistogramGrid g(VfhParams{});
  RangeScan s = empty_scan();
  s.ranges[90] = 2.0;
  s.ranges[91] = 2.0;  // two nearby hits, overlapping disks
  const Pose pose{{0.05, 0.05}, 0.0};
  update_histogram(g, pose, s, 0.3);
  int cells = 0, maxC = 0;
  g.for_each_occupied([&](Point2 c, int v) {
    ++cells;
    maxC = std::max(maxC, v);
    const double ang = s.bearings[91];
    const Point2 h1{2.05, 0.05}, h2{0.05 + 2.0 * std::cos(ang), 0.05 + 2.0 * std::sin(ang)};
    EXPECT_TRUE(distance(c, h1) <= 0.3 + 1e-9 || distance(c, h2) <= 0.3 + 1e-9);
  });
  EXPECT_EQ(maxC, 1);
  EXPECT_GE(cells, 25);  // roughly one disk of radius three cells
}

TEST(Polar, EmptyGridIsZero) {
  const VfhParams p;
  HistogramGrid g(p);
  g.recenter({0, 0});
  for (double v : build_polar(g, {{0, 0}, 0}, p).density) EXPECT_EQ(v, 0.0);
}

TEST(Polar, CellAtWindowEdgeContributesNothing) {
  const VfhParams p;
  HistogramGrid g(p);
  const Pose pose{{0.05, 0.05}, 0.0};
  g.recenter(pose.position);
  for (int k = 0; k < p.cMax; ++k) g.add_hit({0.05 - 5.0, 0.05});
  EXPECT_EQ(g.value_at({-4.95, 0.05}), p.cMax);
  for (double v : build_polar(g, pose, p).density) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Polar, HandComputedMagnitudeSpreadOverFiveSectors) {
  const VfhParams p;
  HistogramGrid g(p);
  const Pose pose{{0.05, 0.05}, 0.0};
  g.recenter(pose.position);
  g.add_hit({0.05, 2.55});
  g.add_hit({0.05, 2.55});
  const PolarHistogram raw = build_polar_raw(g, pose, p);
  // m = c^2 (a - b d) = 4 (1 - 2.5/5) = 2, all in the sector starting at 90 degrees.
  EXPECT_NEAR(raw.density[18], 2.0, 1e-9);
  const PolarHistogram smooth = build_polar(g, pose, p);
  double mass = 0.0;
  for (int k = 0; k < 72; ++k) {
    const double expected = (k >= 16 && k <= 20) ? 0.4 : 0.0;
    EXPECT_NEAR(smooth.density[k], expected, 1e-9) << k;
    mass += smooth.density[k];
  }
  EXPECT_NEAR(mass, 2.0, 1e-9);
}

TEST(Polar, AdditiveOverDisjointCells) {
  // Magnitude is quadratic in certainty, so additivity holds for grids with disjoint occupied cells.
  const VfhParams p;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-4.5, 4.5);
  const Pose pose{{0.05, 0.05}, 0.0};
  for (int trial = 0; trial < 20; ++trial) {
    HistogramGrid a(p), b(p), both(p);
    a.recenter(pose.position);
    b.recenter(pose.position);
    both.recenter(pose.position);
    for (int k = 0; k < 60; ++k) {
      const Point2 pt{u(rng), u(rng)};
      const bool left = pt.x < 0.0;
      const int reps = 1 + static_cast<int>(rng() % 4);
      for (int r = 0; r < reps; ++r) {
        (left ? a : b).add_hit(pt);
        both.add_hit(pt);
      }
    }
    const PolarHistogram pa = build_polar(a, pose, p), pb = build_polar(b, pose, p), pab = build_polar(both, pose, p);
    for (int k = 0; k < p.nSectors; ++k) EXPECT_NEAR(pab.density[k], pa.density[k] + pb.density[k], 1e-6);
  }
}

TEST(SelectDirection, FreeSpaceKeepsTarget) {
  const VfhParams p;
  for (double target : {0.0, 1.234, -2.9, kPi}) {
    const auto cmd = select_direction(polar_of(std::vector<double>(72, 0.0)), target, p.threshold, p);
    ASSERT_TRUE(cmd);
    EXPECT_EQ(cmd->heading, wrap_to_pi(target));
    EXPECT_EQ(cmd->speed, p.vMax);
  }
}

TEST(SelectDirection, BlockedTargetPicksNearValleyEdge) {
  const VfhParams p;
  std::vector<double> h(72, 500.0);
  for (int k = 10; k <= 30; ++k) h[k] = 0.0;  // valley counterclockwise of target sector 5
  const auto cmd = select_direction(polar_of(h), 5 * 5.0 * kPi / 180 + 0.01, p.threshold, p);
  ASSERT_TRUE(cmd);
  const PolarHistogram ph = polar_of(h);
  EXPECT_EQ(ph.sector_of(cmd->heading), 11);
  const OracleChoice o = oracle_direction(h, 5, p.threshold, p.sMin);
  EXPECT_EQ(o.sector, 11);
}

TEST(SelectDirection, AllBlockedIsNoFreeSector) {
  const VfhParams p;
  EXPECT_FALSE(select_direction(polar_of(std::vector<double>(72, p.threshold)), 0.0, p.threshold, p));
}

TEST(SelectDirection, NarrowGapRejected) {
  const VfhParams p;
  std::vector<double> h(72, 1000.0);
  h[3] = h[4] = 0.0;
  EXPECT_FALSE(select_direction(polar_of(h), 0.0, p.threshold, p));
  h[5] = 0.0;
  EXPECT_TRUE(select_direction(polar_of(h), 0.0, p.threshold, p));
}

TEST(SelectDirection, MirrorTieResolvesCounterclockwise) {
  const VfhParams p;
  std::vector<double> h(72, 900.0);
  for (int k = 5; k <= 10; ++k) h[k] = 0.0;   // counterclockwise of target sector 0
  for (int k = 62; k <= 67; ++k) h[k] = 0.0;  // clockwise, same gap
  for (int rep = 0; rep < 3; ++rep) {
    const auto cmd = select_direction(polar_of(h), 2.5 * kPi / 180, p.threshold, p);
    ASSERT_TRUE(cmd);
    EXPECT_EQ(polar_of(h).sector_of(cmd->heading), 6);
  }
}

TEST(SelectDirection, SpeedFallsWithDensity) {
  VfhParams p;
  std::vector<double> h(72, 0.0);
  h[0] = 0.5 * p.threshold;
  const auto cmd = select_direction(polar_of(h), 0.01, p.threshold, p);
  ASSERT_TRUE(cmd);
  EXPECT_NEAR(cmd->speed, 0.5 * p.vMax, 1e-12);
  h[0] = 0.99 * p.threshold;
  EXPECT_NEAR(select_direction(polar_of(h), 0.01, p.threshold, p)->speed, p.vMin, 1e-12);
}

TEST(SelectDirection, RandomHistogramsAgreeWithBruteForce) {
  const VfhParams p;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0), angle(-kPi, kPi);
  for (int trial = 0; trial < 3000; ++trial) {
    const double pFree = u(rng);
    std::vector<double> h(72);
    for (double& v : h) v = u(rng) < pFree ? u(rng) * p.threshold * 0.999 : p.threshold * (1.0 + 2.0 * u(rng));
    const double target = angle(rng);
    const PolarHistogram ph = polar_of(h);
    const auto cmd = select_direction(ph, target, p.threshold, p);
    ASSERT_EQ(cmd.has_value(), oracle_has_run(h, p.threshold, p.sMin));
    const OracleChoice o = oracle_direction(h, ph.sector_of(target), p.threshold, p.sMin);
    ASSERT_EQ(cmd.has_value(), o.found);
    if (!cmd) continue;
    ASSERT_LT(h[ph.sector_of(cmd->heading)], p.threshold);
    ASSERT_EQ(ph.sector_of(cmd->heading), o.sector);
    ASSERT_GE(cmd->speed, p.vMin);
    ASSERT_LE(cmd->speed, p.vMax);
  }
}

class SoilVeto : public ::testing::Test {
 protected:
  void SetUp() override {
    const TerrainGrid g = tn_test::uniform_grid(32, 32);
    dual = build_dual_grids(g, Swathe{Matrix<std::uint8_t>(32, 32, 1), 1e9}, 0.5);
    state.nests = {NestMap(dual.grids[0].rows(), dual.grids[0].cols()),
                   NestMap(dual.grids[1].rows(), dual.grids[1].cols())};
    for (int g2 = 0; g2 < 2; ++g2) {
      std::vector<CellIndex> all;
      for (int i = 0; i < dual.grids[g2].rows(); ++i) {
        for (int j = 0; j < dual.grids[g2].cols(); ++j) all.push_back({i, j});
      }
      state.nests[g2].add_nest(all);
    }
    histogram = HistogramGrid(VfhParams{});
    histogram.recenter({5.0, 5.0});
  }

  DualGrid dual;
  CorridorState state;
  HistogramGrid histogram;
};

TEST_F(SoilVeto, GravelChangesNothing) {
  const CorridorState before = state;
  EXPECT_FALSE(apply_soil_reading({{5.0, 5.0}, SoilCategory::Gravel}, dual, state, histogram));
  EXPECT_FALSE(state.replanNeeded);
  EXPECT_EQ(state.nests, before.nests);
  EXPECT_EQ(total_certainty(histogram), 0);
}

TEST_F(SoilVeto, SiltAndClayStayPassable) {
  EXPECT_FALSE(apply_soil_reading({{5.0, 5.0}, SoilCategory::Silt}, dual, state, histogram));
  EXPECT_FALSE(apply_soil_reading({{5.0, 5.0}, SoilCategory::Clay}, dual, state, histogram));
}

TEST_F(SoilVeto, RockRemovesCellFromBothGridsAndPaintsHistogram) {
  const Point2 p{5.0, 5.0};
  EXPECT_TRUE(apply_soil_reading({p, SoilCategory::Rock}, dual, state, histogram));
  EXPECT_TRUE(state.replanNeeded);
  EXPECT_FALSE(state.nests[0].in_nest(*dual.grids[0].cell_at(p)));
  EXPECT_FALSE(state.nests[1].in_nest(*dual.grids[1].cell_at(p)));
  EXPECT_FALSE(navigable_at(dual, state.nests, p));
  EXPECT_EQ(histogram.value_at(p), histogram.cMax());
  EXPECT_EQ(histogram.value_at({6.9, 5.0}), histogram.cMax());
  EXPECT_EQ(histogram.value_at({7.2, 5.0}), 0);
}

TEST_F(SoilVeto, SecondReadingIsIdempotent) {
  apply_soil_reading({{5.0, 5.0}, SoilCategory::Rock}, dual, state, histogram);
  const CorridorState after = state;
  const HistogramGrid hist = histogram;
  state.replanNeeded = false;
  EXPECT_FALSE(apply_soil_reading({{5.0, 5.0}, SoilCategory::Rock}, dual, state, histogram));
  EXPECT_FALSE(state.replanNeeded);
  EXPECT_EQ(state.nests, after.nests);
  EXPECT_TRUE(histogram == hist);
}

TEST_F(SoilVeto, NeverAddsNestCells) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 16.0);
  std::uniform_int_distribution<int> cat(0, 4);
  for (int k = 0; k < 300; ++k) {
    const NestPair before = state.nests;
    apply_soil_reading({{u(rng), u(rng)}, static_cast<SoilCategory>(cat(rng))}, dual, state, histogram);
    for (int g2 = 0; g2 < 2; ++g2) {
      for (int i = 0; i < before[g2].rows(); ++i) {
        for (int j = 0; j < before[g2].cols(); ++j) {
          if (state.nests[g2].in_nest({i, j})) {
            ASSERT_TRUE(before[g2].in_nest({i, j}));
          }
        }
      }
    }
  }
}

TEST_F(SoilVeto, OutsideTerrain) {
  try {
    apply_soil_reading({{-1.0, 5.0}, SoilCategory::Rock}, dual, state, histogram);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointOutsideGrid);
  }
}

TEST(SelectDirectionSticky, KeepsPreviousEdgeOnNearTie) {
  const VfhParams p;
  std::vector<double> h(72, 0.0);
  for (int k = 64; k < 72; ++k) h[k] = 500.0;
  for (int k = 0; k <= 8; ++k) h[k] = 500.0;  // blocked straight ahead, one wrapping valley
  const PolarHistogram ph = polar_of(h);
  const double justBelow = -0.01;  // target sector 71: clockwise edge is nearer
  const auto plain = select_direction(ph, justBelow, p.threshold, p);
  ASSERT_TRUE(plain);
  EXPECT_EQ(ph.sector_of(plain->heading), 62);
  const double ccwEdge = ph.sector_center(10);
  const auto sticky = select_direction_sticky(ph, justBelow, p.threshold, p, ccwEdge);
  ASSERT_TRUE(sticky);
  EXPECT_EQ(ph.sector_of(sticky->heading), 10);
  VfhParams off = p;
  off.hysteresisSectors = 0;
  EXPECT_EQ(select_direction_sticky(ph, justBelow, p.threshold, off, ccwEdge)->heading, plain->heading);
}

TEST(SelectDirectionSticky, FreeTargetAndFarEdgesFallBackToPlain) {
  const VfhParams p;
  std::vector<double> h(72, 500.0);
  for (int k = 10; k <= 30; ++k) h[k] = 0.0;
  for (int k = 50; k <= 60; ++k) h[k] = 0.0;
  const PolarHistogram ph = polar_of(h);
  const double target = ph.sector_center(20);
  EXPECT_EQ(select_direction_sticky(ph, target, p.threshold, p, ph.sector_center(55))->heading,
            select_direction(ph, target, p.threshold, p)->heading);
  const double blocked = ph.sector_center(5);
  EXPECT_EQ(select_direction_sticky(ph, blocked, p.threshold, p, ph.sector_center(59))->heading,
            select_direction(ph, blocked, p.threshold, p)->heading);
  EXPECT_EQ(select_direction_sticky(ph, blocked, p.threshold, p, std::nullopt)->heading,
            select_direction(ph, blocked, p.threshold, p)->heading);
}

TEST(SelectDirectionSticky, AlwaysFreeAndAgreesOnExistence) {
  const VfhParams p;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0), angle(-kPi, kPi);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<double> h(72);
    const double pFree = u(rng);
    for (double& v : h) v = u(rng) < pFree ? 0.0 : 2.0 * p.threshold;
    const PolarHistogram ph = polar_of(h);
    const double target = angle(rng);
    const auto plain = select_direction(ph, target, p.threshold, p);
    const auto sticky = select_direction_sticky(ph, target, p.threshold, p, angle(rng));
    ASSERT_EQ(plain.has_value(), sticky.has_value());
    if (sticky) {
      ASSERT_LT(h[ph.sector_of(sticky->heading)], p.threshold);
    }
  }
}
