#pragma once

#include <cstddef>
#include <vector>

#include "termite_nav/error.hpp"

namespace termite_nav {

/// Grid coordinate, row first.
struct CellIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Dense row-major 2D array.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 0 || cols < 0) throw Error(ErrorCode::OutOfRange, "negative matrix dimensions");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }
  bool contains(CellIndex idx) const noexcept { return contains(idx.row, idx.col); }

  T& operator()(int r, int c) { return data_[offset(r, c)]; }
  const T& operator()(int r, int c) const { return data_[offset(r, c)]; }
  T& operator[](CellIndex idx) { return (*this)(idx.row, idx.col); }
  const T& operator[](CellIndex idx) const { return (*this)(idx.row, idx.col); }

  T& at(int r, int c) {
    check(r, c);
    return data_[offset(r, c)];
  }
  const T& at(int r, int c) const {
    check(r, c);
    return data_[offset(r, c)];
  }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  const std::vector<T>& values() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t offset(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }
  void check(int r, int c) const {
    if (!contains(r, c)) throw Error(ErrorCode::IndexOutOfBounds, "cell index outside matrix");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace termite_nav
