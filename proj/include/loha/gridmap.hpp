#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "loha/prng.hpp"

namespace loha {

class MapParseError : public std::runtime_error {
 public:
  MapParseError(int line, const std::string& what)
      : std::runtime_error("map parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// A rectangular occupancy grid. Cell (x, y) has x growing rightward and y
// downward, with (0, 0) the top-left cell. Anything outside the bounds is
// treated as blocked.
class GridMap {
 public:
  GridMap() = default;

  GridMap(int width, int height, std::string name = "")
      : width_(width), height_(height), name_(std::move(name)) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("grid dimensions must be positive");
    cells_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  bool is_blocked(int x, int y) const {
    if (!in_bounds(x, y)) return true;
    return cells_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }

  void set_blocked(int x, int y, bool blocked) {
    if (!in_bounds(x, y)) throw std::out_of_range("cell out of bounds");
    cells_[static_cast<std::size_t>(y) * width_ + x] = blocked ? 1 : 0;
  }

  std::size_t blocked_count() const {
    std::size_t n = 0;
    for (auto c : cells_) n += c;
    return n;
  }

  friend bool operator==(const GridMap& a, const GridMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.cells_ == b.cells_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::string name_;
  std::vector<std::uint8_t> cells_;  // row-major, 1 = blocked
};

namespace detail {

inline std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

}  // namespace detail

// Parses the MovingAI .map format:
//
//   type octile
//   height H
//   width W
//   map
//   <H rows of W terrain characters>
//
// "height" and "width" may appear in either order. Passable characters are
// '.' and 'G'; blocked are '@', 'O', 'T', 'S', 'W'. Anything else, a bad
// header, or a row count/length mismatch raises MapParseError naming the
// offending 1-based line.
inline GridMap parse_map(std::istream& in, const std::string& name = "") {
  int line_no = 0;
  std::string line;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    line = detail::trim_cr(line);
    return true;
  };

  if (!next_line()) throw MapParseError(1, "empty input, expected 'type' header");
  {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key != "type") throw MapParseError(line_no, "expected 'type <t>' header, got '" + line + "'");
  }

  int width = -1, height = -1;
  for (int i = 0; i < 2; ++i) {
    if (!next_line()) throw MapParseError(line_no + 1, "expected 'height'/'width' header");
    std::istringstream ls(line);
    std::string key;
    long long value = -1;
    if (!(ls >> key >> value) || (key != "height" && key != "width") || value <= 0)
      throw MapParseError(line_no, "expected 'height <H>' or 'width <W>', got '" + line + "'");
    if (key == "height") {
      if (height != -1) throw MapParseError(line_no, "duplicate 'height' header");
      height = static_cast<int>(value);
    } else {
      if (width != -1) throw MapParseError(line_no, "duplicate 'width' header");
      width = static_cast<int>(value);
    }
  }

  if (!next_line() || line != "map")
    throw MapParseError(line_no, "expected 'map' header line");

  GridMap map(width, height, name);
  for (int y = 0; y < height; ++y) {
    if (!next_line())
      throw MapParseError(line_no + 1, "expected " + std::to_string(height) + " map rows, got " +
                                           std::to_string(y));
    if (static_cast<int>(line.size()) != width)
      throw MapParseError(line_no, "row has " + std::to_string(line.size()) +
                                       " characters, expected " + std::to_string(width));
    for (int x = 0; x < width; ++x) {
      char c = line[x];
      if (c == '.' || c == 'G') {
        // passable
      } else if (c == '@' || c == 'O' || c == 'T' || c == 'S' || c == 'W') {
        map.set_blocked(x, y, true);
      } else {
        throw MapParseError(line_no, std::string("unknown terrain character '") + c + "'");
      }
    }
  }
  return map;
}

inline GridMap parse_map(const std::string& text, const std::string& name = "") {
  std::istringstream in(text);
  return parse_map(in, name);
}

// Writes a map in the same .map layout, using '.' for passable and '@' for
// blocked cells. parse_map(serialize_map(m)) reproduces m exactly.
inline void serialize_map(const GridMap& map, std::ostream& out) {
  out << "type octile\n";
  out << "height " << map.height() << "\n";
  out << "width " << map.width() << "\n";
  out << "map\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out.put(map.is_blocked(x, y) ? '@' : '.');
    out.put('\n');
  }
}

inline std::string serialize_map(const GridMap& map) {
  std::ostringstream out;
  serialize_map(map, out);
  return out.str();
}

// Breadth-first connectivity test between two cells through unblocked
// 4-neighbor moves.
inline bool cells_connected(const GridMap& map, int x0, int y0, int x1, int y1) {
  if (map.is_blocked(x0, y0) || map.is_blocked(x1, y1)) return false;
  if (x0 == x1 && y0 == y1) return true;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(map.width()) * map.height(), 0);
  auto at = [&](int x, int y) -> std::uint8_t& {
    return seen[static_cast<std::size_t>(y) * map.width() + x];
  };
  std::vector<std::pair<int, int>> frontier{{x0, y0}}, next;
  at(x0, y0) = 1;
  while (!frontier.empty()) {
    next.clear();
    for (auto [x, y] : frontier) {
      static constexpr int dx[4] = {0, 0, 1, -1}, dy[4] = {-1, 1, 0, 0};
      for (int i = 0; i < 4; ++i) {
        int nx = x + dx[i], ny = y + dy[i];
        if (map.is_blocked(nx, ny) || at(nx, ny)) continue;
        if (nx == x1 && ny == y1) return true;
        at(nx, ny) = 1;
        next.push_back({nx, ny});
      }
    }
    frontier.swap(next);
  }
  return false;
}

// Generates a width x height map where each cell is independently blocked
// with probability percent/100, drawn from SplitMix64(seed) in row-major
// order. Same arguments always produce the same map.
inline GridMap generate_random_map(int width, int height, double percent, std::uint64_t seed,
                                   std::string name = "") {
  if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (!(percent >= 0.0 && percent <= 100.0))
    throw std::invalid_argument("obstacle percentage must be in [0, 100]");
  if (name.empty())
    name = "random" + std::to_string(static_cast<long long>(percent)) + "-" + std::to_string(seed);
  GridMap map(width, height, std::move(name));
  SplitMix64 rng(seed);
  const double p = percent / 100.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (rng.next_double() < p) map.set_blocked(x, y, true);
  return map;
}

}  // namespace loha
