#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "loha/gridmap.hpp"
#include "loha/prng.hpp"

namespace loha {

// Kinematic car state on a half-unit position lattice: x = x2 * 0.5,
// y = y2 * 0.5, heading theta in 30-degree steps (0..11, 0 = +x, 3 = +y),
// signed velocity v in {-1, 0, 1, 2, 3} map units per time step.
struct CarState {
  int x2 = 0;
  int y2 = 0;
  int theta = 0;
  int v = 0;
  friend bool operator==(const CarState&, const CarState&) = default;
};

namespace detail {

struct CarTrig {
  // cos/sin of 15-degree multiples; index k = angle / 15 degrees, 0..23.
  std::array<double, 24> cos15{};
  std::array<double, 24> sin15{};
  CarTrig() {
    for (int k = 0; k < 24; ++k) {
      double a = k * (3.14159265358979323846 / 12.0);
      cos15[k] = std::cos(a);
      sin15[k] = std::sin(a);
    }
  }
};

inline const CarTrig& car_trig() {
  static const CarTrig t;
  return t;
}

}  // namespace detail

// Non-holonomic car lattice domain. 15 unit-cost actions: dv in {-1, 0, 1}
// crossed with steer in {-60, -30, 0, 30, 60} degrees. An action with
// v' = v + dv outside [-1, 3] is rejected. v' = 0 stops the car in place
// (position and heading unchanged). Otherwise the heading advances by
// (steer / 30) * sign(v') heading steps, the car translates v' units along
// the average heading, and the displacement is snapped to the half-unit
// lattice (ties round away from zero). The swept segment is collision
// checked by sampling at most 0.5 units apart, endpoints included.
//
// The global heuristic is straight-line distance over the top speed:
// h_g = L2(s, goal) / 3. Lattice snapping lets a top-speed step cover up to
// sqrt(10) units (e.g. heading 15 degrees: (2.898, 0.776) snaps to (3, 1)),
// so h_g can decrease by up to sqrt(10)/3 per unit cost; h_drop_rate()
// reports that exact slope. The goal test is positional: within 1.0 units,
// any heading or velocity.
class CarDomain {
 public:
  using State = CarState;
  static constexpr const char* kName = "car";
  static constexpr int kMinV = -1;
  static constexpr int kMaxV = 3;

  CarDomain(const GridMap& map, CarState goal) : map_(&map), goal_(goal) {}

  const GridMap& map() const { return *map_; }
  CarState goal() const { return goal_; }

  void successors(const State& s, std::vector<std::pair<State, double>>& out) const {
    out.clear();
    const auto& trig = detail::car_trig();
    const double x = s.x2 * 0.5, y = s.y2 * 0.5;
    for (int dv = -1; dv <= 1; ++dv) {
      int v2 = s.v + dv;
      if (v2 < kMinV || v2 > kMaxV) continue;
      for (int steer_idx = -2; steer_idx <= 2; ++steer_idx) {
        if (v2 == 0) {
          out.push_back({State{s.x2, s.y2, s.theta, 0}, 1.0});
          continue;
        }
        int sign = v2 > 0 ? 1 : -1;
        int dtheta = steer_idx * sign;
        int theta2 = ((s.theta + dtheta) % 12 + 12) % 12;
        int mid = ((2 * s.theta + dtheta) % 24 + 24) % 24;
        double dx = v2 * trig.cos15[mid];
        double dy = v2 * trig.sin15[mid];
        int nx2 = s.x2 + static_cast<int>(std::llround(2.0 * dx));
        int ny2 = s.y2 + static_cast<int>(std::llround(2.0 * dy));
        if (!segment_clear(x, y, nx2 * 0.5, ny2 * 0.5)) continue;
        out.push_back({State{nx2, ny2, theta2, v2}, 1.0});
      }
    }
  }

  bool is_goal(const State& s) const {
    double dx = (s.x2 - goal_.x2) * 0.5, dy = (s.y2 - goal_.y2) * 0.5;
    return dx * dx + dy * dy <= 1.0;
  }

  double heuristic(const State& s) const {
    double dx = (s.x2 - goal_.x2) * 0.5, dy = (s.y2 - goal_.y2) * 0.5;
    return std::sqrt(dx * dx + dy * dy) / 3.0;
  }

  double heuristic_at(double px, double py) const {
    double dx = px - goal_.x2 * 0.5, dy = py - goal_.y2 * 0.5;
    return std::sqrt(dx * dx + dy * dy) / 3.0;
  }

  std::array<double, 2> position(const State& s) const { return {s.x2 * 0.5, s.y2 * 0.5}; }

  std::array<double, 2> goal_position() const { return {goal_.x2 * 0.5, goal_.y2 * 0.5}; }

  double goal_radius() const { return 1.0; }

  std::array<double, 4> invariant_state(const State& s) const {
    double x = s.x2 * 0.5, y = s.y2 * 0.5;
    return {x - std::floor(x), y - std::floor(y), s.theta / 11.0, (s.v + 1) / 4.0};
  }

  // sqrt(10)/3: the exact maximum heuristic decrease per unit cost over all
  // snapped displacement vectors (see class comment).
  double h_drop_rate() const { return 1.0540925533894598; }

  // A state strictly inside a radius-K window sits within K - 0.5 of the
  // center per axis, and one snapped step moves at most 3.0 per axis, so
  // anything generated from inside lies within K + 2.5 per axis; the largest
  // heuristic drop to such a point is its diagonal distance over 3.
  double escape_h_drop(int radius) const {
    return std::sqrt(2.0) * (radius + 2.5) / 3.0;
  }

  // Goal-satisfying states lie within 1.0 of the goal position.
  double max_goal_h() const { return 1.0 / 3.0; }

  // Strictly inside a radius-K window: |dx2|, |dy2| <= 2K - 1. 12 headings
  // and 5 velocities per position.
  static std::uint32_t local_slot_count(int radius) {
    std::uint32_t side = static_cast<std::uint32_t>(4 * radius - 1);
    return side * side * 60u;
  }

  static std::uint32_t local_slot(const State& center, const State& s, int radius) {
    int r = 2 * radius - 1;
    int side = 4 * radius - 1;
    int dx2 = s.x2 - center.x2 + r;
    int dy2 = s.y2 - center.y2 + r;
    return static_cast<std::uint32_t>((dy2 * side + dx2) * 60 + s.theta * 5 + (s.v + 1));
  }

 private:
  bool segment_clear(double x0, double y0, double x1, double y1) const {
    double len = std::hypot(x1 - x0, y1 - y0);
    int n = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
    for (int i = 0; i <= n; ++i) {
      double t = static_cast<double>(i) / n;
      int cx = static_cast<int>(std::floor(x0 + t * (x1 - x0)));
      int cy = static_cast<int>(std::floor(y0 + t * (y1 - y0)));
      if (map_->is_blocked(cx, cy)) return false;
    }
    return true;
  }

  const GridMap* map_;
  CarState goal_;
};

}  // namespace loha

template <>
struct std::hash<loha::CarState> {
  std::size_t operator()(const loha::CarState& s) const noexcept {
    std::uint64_t packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x2)) &
                            0xFFFFFu) |
                           ((static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y2)) &
                             0xFFFFFu)
                            << 20) |
                           (static_cast<std::uint64_t>(s.theta) << 40) |
                           (static_cast<std::uint64_t>(s.v + 1) << 44);
    return static_cast<std::size_t>(loha::mix64(packed));
  }
};
