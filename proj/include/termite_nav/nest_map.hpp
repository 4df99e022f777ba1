#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "termite_nav/matrix.hpp"

namespace termite_nav {

inline constexpr int kNoNest = -1;

/// Nest membership over one coarse grid. A cell belongs to at most one nest.
class NestMap {
 public:
  NestMap() = default;
  NestMap(int rows, int cols) : ids_(rows, cols, kNoNest) {}

  int rows() const { return ids_.rows(); }
  int cols() const { return ids_.cols(); }

  int nest_of(CellIndex idx) const { return ids_.contains(idx) ? ids_[idx] : kNoNest; }
  bool in_nest(CellIndex idx) const { return nest_of(idx) != kNoNest; }

  /// Nest id -> cells, cells sorted by (row, col).
  const std::map<int, std::vector<CellIndex>>& nests() const { return nests_; }
  const Matrix<int>& ids() const { return ids_; }
  int next_id() const { return nextId_; }

  std::size_t cell_count() const {
    std::size_t n = 0;
    for (const auto& [id, cells] : nests_) n += cells.size();
    return n;
  }

  /// Adds a nest of the given cells, skipping cells already nested. Returns the id, or kNoNest if nothing was added.
  int add_nest(const std::vector<CellIndex>& cells) {
    std::vector<CellIndex> fresh;
    for (CellIndex c : cells) {
      if (ids_.contains(c) && ids_[c] == kNoNest &&
          std::find(fresh.begin(), fresh.end(), c) == fresh.end()) {
        fresh.push_back(c);
      }
    }
    if (fresh.empty()) return kNoNest;
    const int id = nextId_++;
    std::sort(fresh.begin(), fresh.end());
    for (CellIndex c : fresh) ids_[c] = id;
    nests_[id] = std::move(fresh);
    return id;
  }

  /// Removes one cell from whatever nest holds it. Returns true if it was nested.
  /// Leaves nests possibly disconnected; call normalize() afterwards.
  bool remove_cell(CellIndex idx) {
    const int id = nest_of(idx);
    if (id == kNoNest) return false;
    ids_[idx] = kNoNest;
    auto& cells = nests_[id];
    cells.erase(std::find(cells.begin(), cells.end(), idx));
    if (cells.empty()) nests_.erase(id);
    return true;
  }

  /// Rebuilds nests as the 4-connected components of all nested cells.
  /// Each component takes the smallest id among its cells. When a nest was
  /// split, the piece holding its smallest cell keeps the id and the others get new ones.
  void normalize() {
    const int rows = ids_.rows();
    const int cols = ids_.cols();
    std::vector<int> parent(static_cast<std::size_t>(rows) * cols);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    auto unite = [&](int a, int b) {
      a = find(a);
      b = find(b);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (ids_(r, c) == kNoNest) continue;
        if (c + 1 < cols && ids_(r, c + 1) != kNoNest) unite(r * cols + c, r * cols + c + 1);
        if (r + 1 < rows && ids_(r + 1, c) != kNoNest) unite(r * cols + c, (r + 1) * cols + c);
      }
    }
    // Roots are the smallest linear index of each component, so visiting
    // cells in row-major order meets components in a fixed order.
    std::map<int, int> rootMinId;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (ids_(r, c) == kNoNest) continue;
        const int root = find(r * cols + c);
        auto [it, inserted] = rootMinId.try_emplace(root, ids_(r, c));
        if (!inserted) it->second = std::min(it->second, ids_(r, c));
      }
    }
    std::map<int, int> rootFinalId;
    std::vector<bool> taken;
    for (const auto& [root, minId] : rootMinId) {
      if (static_cast<std::size_t>(minId) >= taken.size()) taken.resize(minId + 1, false);
    }
    for (const auto& [root, minId] : rootMinId) {
      if (!taken[minId]) {
        taken[minId] = true;
        rootFinalId[root] = minId;
      } else {
        rootFinalId[root] = nextId_++;
      }
    }
    nests_.clear();
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (ids_(r, c) == kNoNest) continue;
        const int id = rootFinalId[find(r * cols + c)];
        ids_(r, c) = id;
        nests_[id].push_back({r, c});
      }
    }
  }

  friend bool operator==(const NestMap&, const NestMap&) = default;

 private:
  Matrix<int> ids_;
  std::map<int, std::vector<CellIndex>> nests_;
  int nextId_ = 0;
};

}  // namespace termite_nav
