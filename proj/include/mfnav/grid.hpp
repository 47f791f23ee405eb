#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfnav {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
  constexpr Cell operator+(Cell o) const { return {x + o.x, y + o.y}; }
  constexpr Cell operator-(Cell o) const { return {x - o.x, y - o.y}; }
};

inline std::string to_string(Cell c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

inline constexpr std::array<Cell, 4> kNeighbors4 = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

inline constexpr std::array<Cell, 8> kNeighbors8 = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

inline int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }
inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }
inline double euclidean(Cell a, Cell b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

// Screen convention: x grows east, y grows south.
enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr Cell offset(Heading h) {
  switch (h) {
    case Heading::North: return {0, -1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, 1};
    case Heading::West: return {-1, 0};
  }
  return {0, 0};
}

inline constexpr Heading turned_left(Heading h) { return Heading((int(h) + 3) % 4); }
inline constexpr Heading turned_right(Heading h) { return Heading((int(h) + 1) % 4); }

inline const char* heading_name(Heading h) {
  static constexpr const char* names[] = {"N", "E", "S", "W"};
  return names[int(h)];
}

inline Heading parse_heading(const std::string& s) {
  if (s == "N") return Heading::North;
  if (s == "E") return Heading::East;
  if (s == "S") return Heading::South;
  if (s == "W") return Heading::West;
  throw std::invalid_argument("unknown heading '" + s + "'");
}

/// Axis-aligned inclusive cell rectangle.
struct Rect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
  friend bool operator==(const Rect&, const Rect&) = default;
  int width() const { return empty() ? 0 : x1 - x0 + 1; }
  int height() const { return empty() ? 0 : y1 - y0 + 1; }
  bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  void expand_to(Cell c) {
    if (empty()) {
      *this = {c.x, c.y, c.x, c.y};
      return;
    }
    x0 = std::min(x0, c.x);
    y0 = std::min(y0, c.y);
    x1 = std::max(x1, c.x);
    y1 = std::max(y1, c.y);
  }
  Rect inflated(int r) const { return empty() ? *this : Rect{x0 - r, y0 - r, x1 + r, y1 + r}; }
  Rect clipped(int w, int h) const {
    return {std::max(x0, 0), std::max(y0, 0), std::min(x1, w - 1), std::min(y1, h - 1)};
  }
};

/// Dense row-major 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(std::size_t(checked_area(width, height)), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return std::size_t(c.y) * std::size_t(width_) + std::size_t(c.x); }
  Cell cell_of(std::size_t i) const { return {int(i % std::size_t(width_)), int(i / std::size_t(width_))}; }

  T& operator[](Cell c) { return data_[index(c)]; }
  const T& operator[](Cell c) const { return data_[index(c)]; }

  T& at(Cell c) {
    if (!in_bounds(c)) throw std::out_of_range("cell " + to_string(c) + " outside grid");
    return data_[index(c)];
  }
  const T& at(Cell c) const {
    if (!in_bounds(c)) throw std::out_of_range("cell " + to_string(c) + " outside grid");
    return data_[index(c)];
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }
  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static int checked_area(int w, int h) {
    if (w < 0 || h < 0) throw std::invalid_argument("negative grid extent");
    return w * h;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

inline std::optional<Heading> heading_of(Cell step) {
  for (int h = 0; h < 4; ++h) {
    if (offset(Heading(h)) == step) return Heading(h);
  }
  return std::nullopt;
}

}  // namespace mfnav
