#pragma once

// PGM/PPM output and the figure renderers: rank map, soil map, nest
// outlines, and global path versus driven trajectory.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "termite_nav/corridor.hpp"
#include "termite_nav/error.hpp"
#include "termite_nav/global_planner.hpp"
#include "termite_nav/matrix.hpp"
#include "termite_nav/nest_map.hpp"
#include "termite_nav/sim.hpp"
#include "termite_nav/terrain.hpp"

namespace termite_nav {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using GrayImage = Matrix<std::uint8_t>;
using RgbImage = Matrix<Rgb>;

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.values().data()), static_cast<std::streamsize>(img.size()));
}

inline void write_ppm(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (const Rgb& px : img) {
    const char bytes[3] = {static_cast<char>(px.r), static_cast<char>(px.g), static_cast<char>(px.b)};
    out.write(bytes, 3);
  }
}

template <typename Image, typename Writer>
void save_image(const std::string& path, const Image& img, Writer writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  writer(out, img);
}

/// Rank 2 maps to 0 and rank 10 to 255, linearly, rounded half up.
inline std::uint8_t rank_to_gray(int rank) {
  return static_cast<std::uint8_t>(((rank - 2) * 255 * 2 + 8) / 16);
}

inline GrayImage render_rank(const TerrainGrid& grid) {
  GrayImage img(grid.rows(), grid.cols());
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) img(r, c) = rank_to_gray(grid.cells(r, c).rank);
  }
  return img;
}

inline GrayImage render_heights(const TerrainGrid& grid) {
  GrayImage img(grid.rows(), grid.cols());
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) img(r, c) = static_cast<std::uint8_t>(grid.cells(r, c).heightValue);
  }
  return img;
}

inline Rgb soil_color(SoilCategory cat) {
  switch (cat) {
    case SoilCategory::Gravel: return {150, 150, 150};
    case SoilCategory::Sand: return {230, 210, 140};
    case SoilCategory::Clay: return {180, 100, 60};
    case SoilCategory::Silt: return {120, 140, 90};
    case SoilCategory::Rock: return {60, 50, 50};
  }
  return {};
}

/// Upscaled canvas: `scale` pixels per fine terrain cell.
class Canvas {
 public:
  Canvas(const TerrainGrid& grid, int scale)
      : scale_(scale), cellSize_(grid.cellSizeMeters), img_(grid.rows() * scale, grid.cols() * scale) {}

  RgbImage& image() { return img_; }
  const RgbImage& image() const { return img_; }

  void fill_cell(int r, int c, Rgb color) {
    for (int y = r * scale_; y < (r + 1) * scale_; ++y) {
      for (int x = c * scale_; x < (c + 1) * scale_; ++x) img_(y, x) = color;
    }
  }

  int px(double meters) const { return static_cast<int>(std::floor(meters / cellSize_ * scale_)); }

  void plot(int x, int y, Rgb color) {
    if (img_.contains(y, x)) img_(y, x) = color;
  }

  /// Bresenham line; with dash > 0 only alternate runs of `dash` pixels are drawn.
  void line(Point2 a, Point2 b, Rgb color, int dash = 0) {
    int x0 = px(a.x), y0 = px(a.y);
    const int x1 = px(b.x), y1 = px(b.y);
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      if (dash <= 0 || (counter_ / dash) % 2 == 0) plot(x0, y0, color);
      ++counter_;
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void rect_outline(const Box& box, Rgb color) {
    const Point2 a = box.min, b{box.max.x, box.min.y}, c = box.max, d{box.min.x, box.max.y};
    line(a, b, color);
    line(b, c, color);
    line(c, d, color);
    line(d, a, color);
  }

  void reset_dash() { counter_ = 0; }

 private:
  int scale_;
  double cellSize_;
  RgbImage img_;
  long counter_ = 0;
};

inline Rgb gray(std::uint8_t v) { return {v, v, v}; }

inline Canvas rank_canvas(const TerrainGrid& grid, int scale) {
  Canvas canvas(grid, scale);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) canvas.fill_cell(r, c, gray(rank_to_gray(grid.cells(r, c).rank)));
  }
  return canvas;
}

inline RgbImage render_soil(const TerrainGrid& grid, int scale = 4) {
  Canvas canvas(grid, scale);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) canvas.fill_cell(r, c, soil_color(grid.cells(r, c).soil));
  }
  return canvas.image();
}

inline constexpr std::array<Rgb, 2> kGridColors = {Rgb{220, 30, 30}, Rgb{30, 60, 220}};

/// Outlines the boundary edges of every nest (grid 0 red, grid 1 blue) over the rank map.
inline void draw_nest_outlines(Canvas& canvas, const DualGrid& dual, const NestPair& nests) {
  for (int g = 0; g < 2; ++g) {
    const CoarseGrid& cg = dual.grids[g];
    for (const auto& [id, cells] : nests[g].nests()) {
      for (CellIndex c : cells) {
        const Box box = cg.cell_box(c);
        const Point2 corners[4] = {box.min, {box.max.x, box.min.y}, box.max, {box.min.x, box.max.y}};
        const CellIndex neighbors[4] = {{c.row - 1, c.col}, {c.row, c.col + 1}, {c.row + 1, c.col}, {c.row, c.col - 1}};
        for (int k = 0; k < 4; ++k) {
          if (nests[g].nest_of(neighbors[k]) == id) continue;
          canvas.line(corners[k], corners[(k + 1) % 4], kGridColors[g]);
        }
      }
    }
  }
}

inline RgbImage render_nest_overlay(const TerrainGrid& grid, const DualGrid& dual, const NestPair& nests,
                                    int scale = 4) {
  Canvas canvas = rank_canvas(grid, scale);
  draw_nest_outlines(canvas, dual, nests);
  return canvas.image();
}

/// Global path solid, executed trajectory dotted, crates outlined.
inline RgbImage render_paths(const TerrainGrid& grid, const DualGrid& dual, const NestPair& nests,
                             const GlobalPath& global, const std::vector<TraceRow>& trace,
                             const std::vector<Crate>& crates, int scale = 4) {
  Canvas canvas = rank_canvas(grid, scale);
  draw_nest_outlines(canvas, dual, nests);
  for (const Crate& crate : crates) {
    canvas.rect_outline(crate.box, crate.knownToPlanner ? Rgb{120, 60, 0} : Rgb{255, 140, 0});
  }
  for (std::size_t k = 1; k < global.waypoints.size(); ++k) {
    canvas.line(global.waypoints[k - 1], global.waypoints[k], Rgb{0, 160, 0});
  }
  canvas.reset_dash();
  for (std::size_t k = 1; k < trace.size(); ++k) {
    canvas.line(trace[k - 1].state.position(), trace[k].state.position(), Rgb{0, 0, 0}, 3);
  }
  return canvas.image();
}

}  // namespace termite_nav
