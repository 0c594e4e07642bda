#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <utility>
#include <vector>

#include "loha/gridmap.hpp"
#include "loha/prng.hpp"

namespace loha {

struct GridState {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridState&, const GridState&) = default;
};

// 4-connected unit-cost grid domain with Manhattan distance as the global
// heuristic. Successors are emitted in N, S, E, W order (y-1, y+1, x+1, x-1).
class GridDomain {
 public:
  using State = GridState;
  static constexpr const char* kName = "grid";

  GridDomain(const GridMap& map, GridState goal) : map_(&map), goal_(goal) {}

  const GridMap& map() const { return *map_; }
  GridState goal() const { return goal_; }

  void successors(const State& s, std::vector<std::pair<State, double>>& out) const {
    out.clear();
    static constexpr int dx[4] = {0, 0, 1, -1};
    static constexpr int dy[4] = {-1, 1, 0, 0};
    for (int i = 0; i < 4; ++i) {
      int nx = s.x + dx[i], ny = s.y + dy[i];
      if (!map_->is_blocked(nx, ny)) out.push_back({State{nx, ny}, 1.0});
    }
  }

  bool is_goal(const State& s) const { return s == goal_; }

  double heuristic(const State& s) const {
    return static_cast<double>(std::abs(s.x - goal_.x) + std::abs(s.y - goal_.y));
  }

  // Heuristic evaluated at an arbitrary map position rather than a lattice
  // state; used for the local feature channels.
  double heuristic_at(double px, double py) const {
    return std::abs(px - goal_.x) + std::abs(py - goal_.y);
  }

  std::array<double, 2> position(const State& s) const {
    return {static_cast<double>(s.x), static_cast<double>(s.y)};
  }

  std::array<double, 2> goal_position() const {
    return {static_cast<double>(goal_.x), static_cast<double>(goal_.y)};
  }

  // Position tolerance of the goal test: exact cell match.
  double goal_radius() const { return 0.0; }

  // Fractional position, heading, velocity: all degenerate on the grid.
  std::array<double, 4> invariant_state(const State&) const { return {0.0, 0.0, 0.0, 0.0}; }

  // Largest possible heuristic decrease per unit of edge cost. Manhattan
  // distance drops by at most 1 per unit move, so it is exactly consistent.
  double h_drop_rate() const { return 1.0; }

  // Largest possible heuristic decrease from a state to anything generated
  // at or beyond the border of a radius-K window around it.
  double escape_h_drop(int radius) const { return 2.0 * radius; }

  // Largest heuristic value any goal-satisfying state can have.
  double max_goal_h() const { return 0.0; }

  // Dense indexing of states strictly inside a radius-K window centered on
  // `center`, for the local search's visited table.
  static std::uint32_t local_slot_count(int radius) {
    std::uint32_t side = static_cast<std::uint32_t>(2 * radius - 1);
    return side * side;
  }

  static std::uint32_t local_slot(const State& center, const State& s, int radius) {
    int side = 2 * radius - 1;
    int dx = s.x - center.x + radius - 1;
    int dy = s.y - center.y + radius - 1;
    return static_cast<std::uint32_t>(dy * side + dx);
  }

 private:
  const GridMap* map_;
  GridState goal_;
};

}  // namespace loha

template <>
struct std::hash<loha::GridState> {
  std::size_t operator()(const loha::GridState& s) const noexcept {
    std::uint64_t packed = static_cast<std::uint32_t>(s.x) |
                           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y)) << 32);
    return static_cast<std::size_t>(loha::mix64(packed));
  }
};
