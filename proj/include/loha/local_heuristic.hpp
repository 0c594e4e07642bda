#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace loha {

// Parameters of the local window: states whose position offset from the
// query state is within |dx| <= K and |dy| <= K (Chebyshev radius K) form
// the local region; offset exactly K on either axis is the border. The
// local search expands only strictly-inside states and may be truncated
// after expansion_cap expansions (0 = unlimited).
struct LocalRegionSpec {
  int radius = 4;
  std::uint64_t expansion_cap = 0;
};

// Result of a local evaluation. `value` is the extra cost, beyond the global
// heuristic, needed to escape the window or reach the goal inside it.
// `exact` is false when the expansion cap forced the lower-bound fallback.
// `dead_end` marks states that can reach neither the border nor the goal;
// `value` is then +infinity.
struct LocalHValue {
  double value = 0.0;
  bool exact = true;
  bool dead_end = false;
};

// h_g + h_k, with dead ends propagated as the infinity sentinel.
inline double combined_h(double h_g, const LocalHValue& hk) {
  if (hk.dead_end) return std::numeric_limits<double>::infinity();
  return h_g + hk.value;
}

// Exact local heuristic evaluator over a domain with a fixed goal.
//
// In addition to the search interface (successors / is_goal), the domain
// supplies the geometry hooks the window logic needs:
//   position(s) -> {x, y}            map coordinates of a state
//   heuristic(s), heuristic_at(x,y)  the global heuristic h_g
//   goal_position(), goal_radius()   the goal test is positional within
//                                    goal_radius of goal_position
//   h_drop_rate()                    max (h_g(s) - h_g(s')) / cost over all
//                                    edges; 1 means h_g is consistent
//   escape_h_drop(K)                 max h_g drop from a state to anything
//                                    generated at or beyond its K-border
//   max_goal_h()                     max h_g over goal-satisfying states
//   local_slot(center, s, K),        dense indexing of strictly-inside
//   local_slot_count(K)              states for the visited table
//
// The evaluation runs a best-first search from s restricted to the window.
// Candidate values, collected when states are generated:
//   escape:  s' at or beyond the border  ->  g(s') + h_g(s') - h_g(s)
//   goal:    s' inside satisfying the goal test -> max(0, g(s') - h_g(s))
// and the result is the minimum candidate, clamped at zero (the clamp
// covers the slight negativity h_g rounding slack can cause).
//
// Expansion order is f = g + h~ where h~ rescales h_g by h_drop_rate() to
// make it consistent, so pops see non-decreasing f and the search can stop
// the moment no future candidate can beat the best one found:
//   future escape value  >= f_top - h_g(s) - (r-1)/r * escape_h_drop(K)
//   future goal value    >= f_top - h_g(s) - (r-1)/r * h_g(s) - max_goal_h()/r
// with r = h_drop_rate() (both slacks vanish when h_g is consistent and the
// goal is positionally out of reach). Since any candidate at or below zero
// already clamps to the floor, the search also stops early in that case.
// The same band prunes enqueues, which keeps the explored set close to the
// corridor a plain A* would walk.
//
// The evaluator reuses its internal arrays across calls; use one instance
// per thread. Results are a pure function of (domain, state, spec).
template <class Domain>
class LocalHeuristic {
 public:
  using State = typename Domain::State;

  LocalHeuristic(const Domain& domain, LocalRegionSpec spec)
      : dom_(&domain), spec_(spec) {
    if (spec.radius < 1) throw std::invalid_argument("local window radius must be >= 1");
    slot_g_.assign(Domain::local_slot_count(spec.radius), 0.0);
    slot_stamp_.assign(slot_g_.size(), 0);
    stamp_ = 0;
  }

  const LocalRegionSpec& spec() const { return spec_; }

  LocalHValue evaluate(const State& s) {
    const Domain& dom = *dom_;
    const int K = spec_.radius;
    const double Kd = static_cast<double>(K);
    const auto center = dom.position(s);
    const double h_s = dom.heuristic(s);
    const double rate = dom.h_drop_rate();
    const double shrink = 1.0 / rate;

    double slack = (rate - 1.0) * shrink * dom.escape_h_drop(K);
    {
      const auto goal_pos = dom.goal_position();
      double cheb = std::max(std::abs(goal_pos[0] - center[0]), std::abs(goal_pos[1] - center[1]));
      if (cheb <= Kd + dom.goal_radius())
        slack += (rate - 1.0) * shrink * h_s + dom.max_goal_h() * shrink;
    }
    slack += 1e-9;  // absorb floating-point noise in the bounds above

    double best = std::numeric_limits<double>::infinity();
    if (dom.is_goal(s)) return {0.0, true, false};

    if (++stamp_ == 0) {  // stamp counter wrapped; reset the table
      std::fill(slot_stamp_.begin(), slot_stamp_.end(), 0);
      stamp_ = 1;
    }
    heap_.clear();
    std::uint64_t seq = 0;
    std::uint64_t expansions = 0;

    auto heap_less = [](const Entry& a, const Entry& b) {
      if (a.f != b.f) return a.f > b.f;  // min-heap on f
      return a.seq > b.seq;              // then FIFO
    };
    auto push_entry = [&](const State& st, double g, double h) {
      double f = g + h_s + (h - h_s) * shrink;
      if (f - h_s >= best + slack) return;  // outside the usable band
      std::uint32_t slot = Domain::local_slot(s, st, K);
      if (slot_stamp_[slot] == stamp_ && slot_g_[slot] <= g) return;
      slot_stamp_[slot] = stamp_;
      slot_g_[slot] = g;
      heap_.push_back({f, g, h, seq++, st});
      std::push_heap(heap_.begin(), heap_.end(), heap_less);
    };

    push_entry(s, 0.0, h_s);

    while (!heap_.empty()) {
      Entry top = heap_.front();
      std::pop_heap(heap_.begin(), heap_.end(), heap_less);
      heap_.pop_back();
      {
        std::uint32_t slot = Domain::local_slot(s, top.state, K);
        if (slot_stamp_[slot] != stamp_ || slot_g_[slot] != top.g) continue;  // stale
      }
      if (top.f - h_s >= best + slack) break;  // nothing ahead can improve

      if (spec_.expansion_cap != 0 && expansions >= spec_.expansion_cap) {
        // Truncated: fall back to the best lower bound available, the
        // smallest g + h_g - h_g(s) pending in the queue (including the
        // entry just popped), merged with any candidate already found.
        double pending = top.g + top.h - h_s;
        for (const Entry& e : heap_) {
          std::uint32_t slot = Domain::local_slot(s, e.state, K);
          if (slot_stamp_[slot] != stamp_ || slot_g_[slot] != e.g) continue;
          pending = std::min(pending, e.g + e.h - h_s);
        }
        return {std::max(0.0, std::min(best, pending)), false, false};
      }
      ++expansions;

      dom.successors(top.state, succ_);
      for (auto& [s2, cost] : succ_) {
        double g2 = top.g + cost;
        auto pos2 = dom.position(s2);
        double dx = pos2[0] - center[0], dy = pos2[1] - center[1];
        if (dx >= Kd || dx <= -Kd || dy >= Kd || dy <= -Kd) {
          best = std::min(best, g2 + dom.heuristic(s2) - h_s);
        } else {
          double h2 = dom.heuristic(s2);
          if (dom.is_goal(s2)) best = std::min(best, std::max(0.0, g2 - h_s));
          push_entry(s2, g2, h2);
        }
        if (best <= 0.0) return {0.0, true, false};
      }
    }

    if (best == std::numeric_limits<double>::infinity())
      return {best, true, true};  // locally trapped
    return {std::max(0.0, best), true, false};
  }

 private:
  struct Entry {
    double f;
    double g;
    double h;
    std::uint64_t seq;
    State state;
  };

  const Domain* dom_;
  LocalRegionSpec spec_;
  std::vector<double> slot_g_;
  std::vector<std::uint32_t> slot_stamp_;
  std::uint32_t stamp_;
  std::vector<Entry> heap_;
  std::vector<std::pair<State, double>> succ_;
};

// One-shot convenience wrapper.
template <class Domain>
LocalHValue local_h_exact(const Domain& domain, const typename Domain::State& s,
                          const LocalRegionSpec& spec) {
  LocalHeuristic<Domain> eval(domain, spec);
  return eval.evaluate(s);
}

}  // namespace loha
