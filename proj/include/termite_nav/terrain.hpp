#pragma once

// Terrain ingestion and traversability ranking.
//
// A grayscale heightmap is block-averaged onto a coarser cell grid, each cell
// gets a gradient goodness from its steepest neighbor difference and a soil
// goodness from its category, and the two are summed into the cell rank.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "termite_nav/error.hpp"
#include "termite_nav/geometry.hpp"
#include "termite_nav/matrix.hpp"

namespace termite_nav {

struct HeightMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;  // row-major, top row first

  std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class SoilCategory : std::uint8_t { Gravel, Sand, Clay, Silt, Rock };

inline constexpr std::array<SoilCategory, 5> kAllSoilCategories = {
    SoilCategory::Gravel, SoilCategory::Sand, SoilCategory::Clay, SoilCategory::Silt, SoilCategory::Rock};

inline std::string to_string(SoilCategory cat) {
  switch (cat) {
    case SoilCategory::Gravel: return "Gravel";
    case SoilCategory::Sand: return "Sand";
    case SoilCategory::Clay: return "Clay";
    case SoilCategory::Silt: return "Silt";
    case SoilCategory::Rock: return "Rock";
  }
  return "Unknown";
}

inline SoilCategory parse_soil_category(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (SoilCategory cat : kAllSoilCategories) {
    std::string candidate = to_string(cat);
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (candidate == lower) return cat;
  }
  throw Error(ErrorCode::MalformedFormat, "unknown soil category '" + std::string(name) + "'");
}

/// Goodness per soil category, indexed by the enum value.
struct SoilGoodnessTable {
  std::array<int, 5> goodness = {5, 4, 3, 3, 1};

  int operator()(SoilCategory cat) const { return goodness[static_cast<std::size_t>(cat)]; }
};

struct TerrainParams {
  int blockW = 4;
  int blockH = 2;
  double cellSizeMeters = 0.5;
  SoilGoodnessTable soilGoodness;
};

struct TerrainCell {
  int heightValue = 0;
  SoilCategory soil = SoilCategory::Gravel;
  int gradientGoodness = 5;
  int soilGoodness = 5;
  int rank = 10;

  friend bool operator==(const TerrainCell&, const TerrainCell&) = default;
};

/// Ranked fine grid. Row r spans y in [r*s, (r+1)*s), column c spans x in [c*s, (c+1)*s).
struct TerrainGrid {
  Matrix<TerrainCell> cells;
  double cellSizeMeters = 1.0;

  int rows() const { return cells.rows(); }
  int cols() const { return cells.cols(); }
  double widthMeters() const { return cols() * cellSizeMeters; }
  double heightMeters() const { return rows() * cellSizeMeters; }

  bool inside(Point2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= widthMeters() && p.y <= heightMeters(); }

  Point2 cell_center(CellIndex idx) const {
    return {(idx.col + 0.5) * cellSizeMeters, (idx.row + 0.5) * cellSizeMeters};
  }

  /// Cell containing p; points on an edge go to the lower index, except the far bounds.
  CellIndex cell_at(Point2 p) const {
    if (!inside(p)) throw Error(ErrorCode::PointOutsideGrid, "point outside terrain bounds");
    const int col = std::min(static_cast<int>(std::floor(p.x / cellSizeMeters)), cols() - 1);
    const int row = std::min(static_cast<int>(std::floor(p.y / cellSizeMeters)), rows() - 1);
    return {row, col};
  }

  friend bool operator==(const TerrainGrid&, const TerrainGrid&) = default;
};

// ---------------------------------------------------------------------------
// Heightmap ingestion

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_pnm_int(std::istream& in) {
  skip_pnm_space(in);
  long value = -1;
  if (!(in >> value)) throw Error(ErrorCode::MalformedFormat, "expected integer in PGM header");
  return value;
}

}  // namespace detail

/// Decodes an 8-bit binary PGM (P5) stream.
inline HeightMap load_heightmap(std::istream& in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || magic[1] != '5') {
    throw Error(ErrorCode::MalformedFormat, "not a binary PGM (expected P5 magic)");
  }
  const long width = detail::read_pnm_int(in);
  const long height = detail::read_pnm_int(in);
  if (width < 1 || height < 1 || width > (1L << 16) || height > (1L << 16)) {
    throw Error(ErrorCode::MalformedFormat, "invalid PGM dimensions");
  }
  const long maxval = detail::read_pnm_int(in);
  if (maxval != 255) throw Error(ErrorCode::OutOfRangeDepth, "PGM maxval must be 255, got " + std::to_string(maxval));
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) throw Error(ErrorCode::MalformedFormat, "missing whitespace after maxval");

  HeightMap hm;
  hm.width = static_cast<int>(width);
  hm.height = static_cast<int>(height);
  hm.values.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  if (!in.read(reinterpret_cast<char*>(hm.values.data()), static_cast<std::streamsize>(hm.values.size()))) {
    throw Error(ErrorCode::MalformedFormat, "truncated PGM pixel data");
  }
  return hm;
}

inline HeightMap load_heightmap_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open heightmap '" + path + "'");
  return load_heightmap(in);
}

/// Block-averages the heightmap; partial edge blocks average the pixels they have.
/// Means are rounded half up.
inline Matrix<int> subsample(const HeightMap& hm, int blockW = 4, int blockH = 2) {
  if (hm.width < 1 || hm.height < 1 || hm.values.empty()) throw Error(ErrorCode::EmptyImage, "heightmap is empty");
  if (blockW < 1 || blockH < 1) throw Error(ErrorCode::OutOfRange, "block dimensions must be >= 1");
  const int rows = (hm.height + blockH - 1) / blockH;
  const int cols = (hm.width + blockW - 1) / blockW;
  Matrix<int> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      long sum = 0;
      long n = 0;
      for (int y = r * blockH; y < std::min(hm.height, (r + 1) * blockH); ++y) {
        for (int x = c * blockW; x < std::min(hm.width, (c + 1) * blockW); ++x) {
          sum += hm.at(x, y);
          ++n;
        }
      }
      out(r, c) = static_cast<int>((2 * sum + n) / (2 * n));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Goodness values

/// Maps a signed height difference to a goodness in [1,5].
/// Bands on |diff|: 0 -> 5, 1..66 -> 4, 67..129 -> 3, 130..192 -> 2, 193..255 -> 1.
inline int gradient_goodness(int diff) {
  if (diff < -255 || diff > 255) throw Error(ErrorCode::OutOfRange, "height difference outside [-255,255]");
  const int mag = diff < 0 ? -diff : diff;
  if (mag == 0) return 5;
  if (mag <= 66) return 4;
  if (mag <= 129) return 3;
  if (mag <= 192) return 2;
  return 1;
}

/// Worst gradient goodness over the 8 neighbors of idx; 5 when there are none.
inline int cell_gradient_goodness(const Matrix<int>& heights, CellIndex idx) {
  if (!heights.contains(idx)) throw Error(ErrorCode::IndexOutOfBounds, "cell index outside height grid");
  int worst = 5;
  const int h0 = heights[idx];
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int r = idx.row + dr;
      const int c = idx.col + dc;
      if (!heights.contains(r, c)) continue;
      worst = std::min(worst, gradient_goodness(heights(r, c) - h0));
    }
  }
  return worst;
}

inline int soil_goodness(SoilCategory cat, const SoilGoodnessTable& table = {}) { return table(cat); }

// ---------------------------------------------------------------------------
// Soil raster

using CatMapping = std::map<long, SoilCategory>;

/// Parses {"<catValue>": "<categoryName>", ...}.
inline CatMapping parse_cat_mapping(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedFormat, "cat mapping must be a JSON object");
  CatMapping mapping;
  for (const auto& [key, value] : j.items()) {
    long cat = 0;
    try {
      std::size_t used = 0;
      cat = std::stol(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedFormat, "cat value key '" + key + "' is not an integer");
    }
    if (!value.is_string()) throw Error(ErrorCode::MalformedFormat, "category for cat " + key + " must be a string");
    mapping[cat] = parse_soil_category(value.get<std::string>());
  }
  return mapping;
}

inline CatMapping load_cat_mapping_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open cat mapping '" + path + "'");
  try {
    return parse_cat_mapping(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFormat, std::string("cat mapping JSON: ") + e.what());
  }
}

/// Reads a CSV matrix of integer cat values.
inline Matrix<long> read_int_csv(std::istream& in) {
  std::vector<std::vector<long>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<long> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stol(field, &used));
        if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedFormat, "non-integer soil CSV field '" + field + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::MalformedFormat, "ragged soil CSV row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Matrix<long> out(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out(r, c) = rows[r][c];
  }
  return out;
}

inline Matrix<SoilCategory> categorize_soil(const Matrix<long>& cats, const CatMapping& mapping) {
  Matrix<SoilCategory> out(cats.rows(), cats.cols());
  for (int r = 0; r < cats.rows(); ++r) {
    for (int c = 0; c < cats.cols(); ++c) {
      const auto it = mapping.find(cats(r, c));
      if (it == mapping.end()) {
        throw Error(ErrorCode::UnknownCatValue, "cat value " + std::to_string(cats(r, c)) + " has no mapping");
      }
      out(r, c) = it->second;
    }
  }
  return out;
}

/// Loads a soil raster that must match the sub-sampled grid dimensions.
inline Matrix<SoilCategory> load_soilmap(std::istream& in, const CatMapping& mapping, int expectedRows,
                                         int expectedCols) {
  const Matrix<long> cats = read_int_csv(in);
  if (cats.rows() != expectedRows || cats.cols() != expectedCols) {
    throw Error(ErrorCode::DimensionMismatch, "soil raster is " + std::to_string(cats.rows()) + "x" +
                                                  std::to_string(cats.cols()) + ", expected " +
                                                  std::to_string(expectedRows) + "x" + std::to_string(expectedCols));
  }
  return categorize_soil(cats, mapping);
}

inline Matrix<SoilCategory> load_soilmap_file(const std::string& path, const CatMapping& mapping, int expectedRows,
                                              int expectedCols) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open soil raster '" + path + "'");
  return load_soilmap(in, mapping, expectedRows, expectedCols);
}

// ---------------------------------------------------------------------------
// Grid assembly

/// Ranks an already sub-sampled height matrix.
inline TerrainGrid build_terrain_grid(const Matrix<int>& heights, const Matrix<SoilCategory>& soil,
                                      const TerrainParams& params = {}) {
  if (heights.empty()) throw Error(ErrorCode::EmptyImage, "height grid is empty");
  if (soil.rows() != heights.rows() || soil.cols() != heights.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "soil and height grids differ in size");
  }
  if (!(params.cellSizeMeters > 0.0)) throw Error(ErrorCode::InvalidConfig, "cell size must be positive");
  TerrainGrid grid;
  grid.cellSizeMeters = params.cellSizeMeters;
  grid.cells = Matrix<TerrainCell>(heights.rows(), heights.cols());
  for (int r = 0; r < heights.rows(); ++r) {
    for (int c = 0; c < heights.cols(); ++c) {
      TerrainCell& cell = grid.cells(r, c);
      cell.heightValue = heights(r, c);
      cell.soil = soil(r, c);
      cell.gradientGoodness = cell_gradient_goodness(heights, {r, c});
      cell.soilGoodness = params.soilGoodness(cell.soil);
      cell.rank = cell.gradientGoodness + cell.soilGoodness;
    }
  }
  return grid;
}

inline TerrainGrid build_terrain_grid(const HeightMap& hm, const Matrix<SoilCategory>& soil,
                                      const TerrainParams& params = {}) {
  return build_terrain_grid(subsample(hm, params.blockW, params.blockH), soil, params);
}

inline void write_terrain_csv(std::ostream& out, const TerrainGrid& grid) {
  out << "row,col,height,soil,gradGoodness,soilGoodness,rank\n";
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const TerrainCell& cell = grid.cells(r, c);
      out << r << ',' << c << ',' << cell.heightValue << ',' << to_string(cell.soil) << ','
          << cell.gradientGoodness << ',' << cell.soilGoodness << ',' << cell.rank << '\n';
    }
  }
}

}  // namespace termite_nav
