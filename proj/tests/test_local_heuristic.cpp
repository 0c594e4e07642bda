#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "loha/car_domain.hpp"
#include "loha/grid_domain.hpp"
#include "loha/gridmap.hpp"
#include "loha/local_heuristic.hpp"
#include "loha/prng.hpp"
#include "test_support.hpp"

using loha::CarDomain;
using loha::CarState;
using loha::GridDomain;
using loha::GridMap;
using loha::GridState;
using loha::LocalHeuristic;
using loha::LocalHValue;
using loha::LocalRegionSpec;
using loha::SplitMix64;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("combined heuristic adds the local value and propagates dead ends") {
  CHECK(loha::combined_h(5.0, {0.0, true, false}) == 5.0);
  CHECK(loha::combined_h(5.0, {2.5, true, false}) == 7.5);
  CHECK(loha::combined_h(5.0, {kInf, true, true}) == kInf);
  CHECK(loha::combined_h(0.0, {kInf, false, true}) == kInf);
}

TEST_CASE("local window radius must be positive") {
  GridMap m(4, 4);
  GridDomain dom(m, {3, 3});
  CHECK_THROWS_AS((LocalHeuristic<GridDomain>(dom, {0, 0})),
                  std::invalid_argument);
  CHECK_THROWS_AS((LocalHeuristic<GridDomain>(dom, {-2, 0})),
                  std::invalid_argument);
}

TEST_CASE("grid local value is zero everywhere on an open map") {
  GridMap m(32, 32);
  GridDomain dom(m, {28, 16});
  SplitMix64 rng(7);
  for (int radius : {1, 2, 3, 4}) {
    LocalHeuristic<GridDomain> eval(dom, {radius, 0});
    for (int i = 0; i < 30; ++i) {
      GridState s = testsupport::random_free_cell(m, rng);
      LocalHValue v = eval.evaluate(s);
      REQUIRE(v.value == 0.0);
      REQUIRE(v.exact);
      REQUIRE_FALSE(v.dead_end);
    }
  }
}

TEST_CASE("goal state evaluates to zero") {
  GridMap m(16, 16);
  GridDomain grid(m, {9, 9});
  CHECK(loha::local_h_exact(grid, {9, 9}, {3, 0}).value == 0.0);

  CarDomain car(m, {18, 18, 0, 0});
  // Positional goal test: anything within 1.0 of the goal position counts.
  CHECK(loha::local_h_exact(car, {18, 18, 5, 2}, {3, 0}).value == 0.0);
  CHECK(loha::local_h_exact(car, {20, 18, 0, 0}, {3, 0}).value == 0.0);
}

TEST_CASE("pocket cells near the blind wall carry a positive local value") {
  GridMap m = testsupport::cul_de_sac_map();
  GridDomain dom(m, testsupport::cul_de_sac_goal());
  LocalHeuristic<GridDomain> eval(dom, {3, 0});

  // Deep pocket cells cannot reach their window border eastward (the wall is
  // in the way), north/south rows are walls, and backing out west raises the
  // global heuristic one-for-one: cost K plus K lost progress.
  for (int x : {9, 10, 11}) {
    LocalHValue v = eval.evaluate({x, 5});
    REQUIRE(v.exact);
    REQUIRE_FALSE(v.dead_end);
    REQUIRE(v.value == 6.0);
  }

  // Cells near the pocket mouth still escape eastward inside the pocket.
  CHECK(eval.evaluate({7, 5}).value == 0.0);
  CHECK(eval.evaluate({8, 5}).value == 0.0);

  // Outside the pocket nothing is inflated.
  CHECK(eval.evaluate({0, 5}).value == 0.0);
  CHECK(eval.evaluate({15, 5}).value == 0.0);
}

TEST_CASE("grid local values match the exhaustive oracle on every free cell") {
  GridMap m = testsupport::cul_de_sac_map();
  GridDomain dom(m, testsupport::cul_de_sac_goal());
  for (int radius : {2, 3, 4}) {
    LocalHeuristic<GridDomain> eval(dom, {radius, 0});
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (m.is_blocked(x, y)) continue;
        LocalHValue got = eval.evaluate({x, y});
        LocalHValue want = testsupport::local_oracle(dom, GridState{x, y}, radius);
        REQUIRE(got.exact);
        REQUIRE(got.dead_end == want.dead_end);
        REQUIRE(got.value == want.value);
      }
    }
  }
}

TEST_CASE("grid local values match the oracle on random maps") {
  SplitMix64 rng(20260501);
  for (int trial = 0; trial < 20; ++trial) {
    GridMap m = loha::generate_random_map(20, 20, 25.0, 1000 + trial);
    GridState goal = testsupport::random_free_cell(m, rng);
    GridDomain dom(m, goal);
    for (int radius : {2, 3, 4}) {
      LocalHeuristic<GridDomain> eval(dom, {radius, 0});
      for (int i = 0; i < 10; ++i) {
        GridState s = testsupport::random_free_cell(m, rng);
        LocalHValue got = eval.evaluate(s);
        LocalHValue want = testsupport::local_oracle(dom, s, radius);
        REQUIRE(got.exact);
        REQUIRE(got.dead_end == want.dead_end);
        REQUIRE(got.value == want.value);
        if (!got.dead_end) REQUIRE(got.value >= 0.0);
      }
    }
  }
}

TEST_CASE("car local values match the oracle on random maps") {
  SplitMix64 rng(818);
  auto random_car_state = [&](const GridMap& m) {
    GridState c = testsupport::random_free_cell(m, rng);
    return CarState{2 * c.x + static_cast<int>(rng.next_below(2)),
                    2 * c.y + static_cast<int>(rng.next_below(2)),
                    static_cast<int>(rng.next_below(12)),
                    static_cast<int>(rng.next_below(5)) - 1};
  };
  for (int trial = 0; trial < 11; ++trial) {
    GridMap m = trial == 0 ? GridMap(16, 16)
                           : loha::generate_random_map(16, 16, 15.0, 9000 + trial);
    GridState gc = testsupport::random_free_cell(m, rng);
    CarDomain dom(m, {2 * gc.x, 2 * gc.y, 0, 0});
    for (int radius : {2, 3}) {
      LocalHeuristic<CarDomain> eval(dom, {radius, 0});
      for (int i = 0; i < 6; ++i) {
        CarState s = random_car_state(m);
        LocalHValue got = eval.evaluate(s);
        LocalHValue want = testsupport::local_oracle(dom, s, radius);
        REQUIRE(got.exact);
        REQUIRE(got.dead_end == want.dead_end);
        if (!got.dead_end) {
          REQUIRE_THAT(got.value, Catch::Matchers::WithinAbs(want.value, 1e-9));
          REQUIRE(got.value >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("car local values match the oracle at radius 4") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 3; ++trial) {
    GridMap m = loha::generate_random_map(20, 20, 12.0, 600 + trial);
    GridState gc = testsupport::random_free_cell(m, rng);
    CarDomain dom(m, {2 * gc.x, 2 * gc.y, 0, 0});
    LocalHeuristic<CarDomain> eval(dom, {4, 0});
    for (int i = 0; i < 6; ++i) {
      GridState c = testsupport::random_free_cell(m, rng);
      CarState s{2 * c.x, 2 * c.y, static_cast<int>(rng.next_below(12)),
                 static_cast<int>(rng.next_below(5)) - 1};
      LocalHValue got = eval.evaluate(s);
      LocalHValue want = testsupport::local_oracle(dom, s, 4);
      REQUIRE(got.exact);
      REQUIRE(got.dead_end == want.dead_end);
      if (!got.dead_end)
        REQUIRE_THAT(got.value, Catch::Matchers::WithinAbs(want.value, 1e-9));
    }
  }
}

TEST_CASE("car semantics on an open map") {
  GridMap m(32, 32);

  SECTION("top speed straight at a distant goal costs nothing extra") {
    CarDomain dom(m, {52, 32, 0, 0});  // goal at (26, 16)
    LocalHValue v = loha::local_h_exact(dom, {32, 32, 0, 3}, {3, 0});
    REQUIRE(v.exact);
    REQUIRE(v.value >= 0.0);
    REQUIRE_THAT(v.value, Catch::Matchers::WithinAbs(0.0, 1e-12));
  }

  SECTION("racing away from the goal pays for the lost ground") {
    CarDomain dom(m, {4, 32, 0, 0});  // goal at (2, 16), car facing east
    LocalHValue v = loha::local_h_exact(dom, {32, 32, 0, 3}, {3, 0});
    // Cheapest way out of the window is one full-speed step east: 1 step
    // paid, 1 unit of heuristic lost.
    REQUIRE_THAT(v.value, Catch::Matchers::WithinAbs(2.0, 1e-9));
  }
}

TEST_CASE("walled-in states are dead ends") {
  GridMap m(9, 9);
  for (int i = 2; i <= 6; ++i) {
    m.set_blocked(i, 2, true);
    m.set_blocked(i, 6, true);
    m.set_blocked(2, i, true);
    m.set_blocked(6, i, true);
  }

  GridDomain grid(m, {0, 0});
  for (int radius : {3, 4}) {
    LocalHValue v = loha::local_h_exact(grid, {4, 4}, {radius, 0});
    REQUIRE(v.dead_end);
    REQUIRE(v.exact);
    REQUIRE(v.value == kInf);
    REQUIRE(loha::combined_h(8.0, v) == kInf);
  }

  CarDomain car(m, {0, 0, 0, 0});
  LocalHValue v = loha::local_h_exact(car, {8, 8, 0, 0}, {4, 0});
  REQUIRE(v.dead_end);
  REQUIRE(v.value == kInf);

  // The same cell is not a dead end once the window shrinks inside the box.
  LocalHValue small = loha::local_h_exact(grid, {4, 4}, {1, 0});
  REQUIRE_FALSE(small.dead_end);
}

TEST_CASE("expansion cap yields a lower bound and marks the result inexact") {
  SplitMix64 rng(424242);
  GridMap gm = testsupport::cul_de_sac_map();
  GridDomain grid(gm, testsupport::cul_de_sac_goal());

  for (int i = 0; i < 40; ++i) {
    GridState s = testsupport::random_free_cell(gm, rng);
    double exact = loha::local_h_exact(grid, s, {3, 0}).value;
    for (std::uint64_t cap : {std::uint64_t{1}, std::uint64_t{3}, std::uint64_t{10}}) {
      LocalHValue capped = loha::local_h_exact(grid, s, {3, cap});
      REQUIRE(capped.value >= 0.0);
      REQUIRE_FALSE(capped.dead_end);
      if (capped.exact) {
        REQUIRE(capped.value == exact);
      } else {
        REQUIRE(capped.value <= exact);
      }
    }
  }

  GridMap cm = loha::generate_random_map(16, 16, 15.0, 77);
  GridState gc = testsupport::random_free_cell(cm, rng);
  CarDomain car(cm, {2 * gc.x, 2 * gc.y, 0, 0});
  for (int i = 0; i < 20; ++i) {
    GridState c = testsupport::random_free_cell(cm, rng);
    CarState s{2 * c.x, 2 * c.y, static_cast<int>(rng.next_below(12)),
               static_cast<int>(rng.next_below(5)) - 1};
    LocalHValue full = loha::local_h_exact(car, s, {3, 0});
    double exact = full.dead_end ? kInf : full.value;
    for (std::uint64_t cap : {std::uint64_t{2}, std::uint64_t{8}, std::uint64_t{32}}) {
      LocalHValue capped = loha::local_h_exact(car, s, {3, cap});
      REQUIRE(capped.value >= 0.0);
      if (!capped.dead_end) REQUIRE(capped.value <= exact + 1e-9);
    }
  }
}

TEST_CASE("local values are translation invariant") {
  GridMap base = testsupport::cul_de_sac_map();
  GridMap shifted(base.width() + 5, base.height() + 4);
  for (int y = 0; y < base.height(); ++y)
    for (int x = 0; x < base.width(); ++x)
      if (base.is_blocked(x, y)) shifted.set_blocked(x + 3, y + 2, true);

  GridDomain dom_a(base, {18, 5});
  GridDomain dom_b(shifted, {21, 7});
  for (int radius : {2, 3, 4}) {
    for (int y = 3; y < base.height() - 3; ++y) {
      for (int x = 3; x < base.width() - 3; ++x) {
        if (base.is_blocked(x, y)) continue;
        LocalHValue a = loha::local_h_exact(dom_a, {x, y}, {radius, 0});
        LocalHValue b = loha::local_h_exact(dom_b, {x + 3, y + 2}, {radius, 0});
        REQUIRE(a.dead_end == b.dead_end);
        REQUIRE(a.value == b.value);
      }
    }
  }
}

TEST_CASE("evaluator instances are reusable and deterministic") {
  GridMap m = testsupport::cul_de_sac_map();
  GridDomain dom(m, testsupport::cul_de_sac_goal());
  // A fully boxed cell in an otherwise open corner, to exercise the
  // dead-end path mid-sequence.
  GridMap boxed = m;
  boxed.set_blocked(16, 9, true);
  boxed.set_blocked(18, 9, true);
  boxed.set_blocked(17, 8, true);
  boxed.set_blocked(17, 10, true);
  GridDomain dom_boxed(boxed, testsupport::cul_de_sac_goal());

  LocalHeuristic<GridDomain> shared(dom, {3, 0});
  std::vector<GridState> states;
  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) states.push_back(testsupport::random_free_cell(m, rng));

  std::vector<double> first, second;
  for (const auto& s : states) first.push_back(shared.evaluate(s).value);
  LocalHValue mid = loha::local_h_exact(dom_boxed, {17, 9}, {3, 0});
  REQUIRE(mid.dead_end);
  for (const auto& s : states) second.push_back(shared.evaluate(s).value);
  REQUIRE(first == second);

  for (std::size_t i = 0; i < states.size(); ++i) {
    LocalHeuristic<GridDomain> fresh(dom, {3, 0});
    REQUIRE(fresh.evaluate(states[i]).value == first[i]);
  }
}
