#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace loha {

// Network input describing the surroundings of a state: two (2K+1) x (2K+1)
// channels over the map cells centered at (floor(x), floor(y)), plus the
// 4-dimensional invariant state. Channels are row-major with the top-left
// entry at cell offset (-K, -K).
//
//   obstacle: 1 = blocked, 0 = free; cells beyond the map edge count as
//             blocked.
//   dh:       h_g evaluated at the cell center (cx + 0.5, cy + 0.5) minus
//             h_g(s), so the channel is invariant to translating the map,
//             state, and goal together.
//   invariant: (x - floor(x), y - floor(y), theta / 11, (v + 1) / 4) for the
//             car; all zeros on the grid.
struct LocalInput {
  int radius = 0;
  std::vector<double> obstacle;
  std::vector<double> dh;
  std::array<double, 4> invariant{};

  int side() const { return 2 * radius + 1; }

  friend bool operator==(const LocalInput&, const LocalInput&) = default;
};

// The domain supplies the map, the goal, and the heuristic, so they are not
// passed separately.
template <class Domain>
LocalInput extract_features(const Domain& dom, const typename Domain::State& s, int radius) {
  LocalInput in;
  in.radius = radius;
  const int side = 2 * radius + 1;
  in.obstacle.resize(static_cast<std::size_t>(side) * side);
  in.dh.resize(in.obstacle.size());

  const auto pos = dom.position(s);
  const int cx = static_cast<int>(std::floor(pos[0]));
  const int cy = static_cast<int>(std::floor(pos[1]));
  const double h_s = dom.heuristic(s);
  const auto& map = dom.map();

  std::size_t idx = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx, ++idx) {
      const int mx = cx + dx, my = cy + dy;
      in.obstacle[idx] = map.is_blocked(mx, my) ? 1.0 : 0.0;
      in.dh[idx] = dom.heuristic_at(mx + 0.5, my + 0.5) - h_s;
    }
  }
  in.invariant = dom.invariant_state(s);
  return in;
}

}  // namespace loha
