#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace loha {

// Domains plug into the search templates through a small implicit interface:
//   using State;                       // equality-comparable, std::hash-able
//   void successors(const State&, std::vector<std::pair<State, double>>&);
//   bool is_goal(const State&) const;
// plus the position/heuristic hooks described in local_heuristic.hpp for the
// local-window machinery. Heuristic arguments are callables State -> double;
// +infinity marks a state as hopeless (see the per-engine policy below).

enum class SearchStatus { kSolved, kExhausted, kLimitReached };

inline const char* to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::kSolved: return "solved";
    case SearchStatus::kExhausted: return "exhausted";
    case SearchStatus::kLimitReached: return "limit-reached";
  }
  return "?";
}

inline SearchStatus search_status_from(const std::string& s) {
  if (s == "solved") return SearchStatus::kSolved;
  if (s == "exhausted") return SearchStatus::kExhausted;
  if (s == "limit-reached") return SearchStatus::kLimitReached;
  throw std::invalid_argument("unknown search status: " + s);
}

template <class State>
struct SearchResult {
  std::vector<State> path;  // start..goal when solved, empty otherwise
  double cost = 0.0;
  std::uint64_t expansions = 0;
  std::uint64_t generated = 0;
  double elapsed = 0.0;  // seconds
  SearchStatus status = SearchStatus::kExhausted;

  bool solved() const { return status == SearchStatus::kSolved; }
};

constexpr std::uint64_t kNoExpansionLimit = std::numeric_limits<std::uint64_t>::max();

namespace detail {

template <class State>
struct SearchNode {
  State state;
  double g = 0.0;
  double h = 0.0;
  std::int64_t parent = -1;
  bool closed = false;
};

// Walks the parent chain from idx back to the root and returns the
// start..idx state sequence. Works with any node type exposing .state
// and .parent.
template <class Node>
auto walk_parents(const std::vector<Node>& nodes, std::int64_t idx) {
  std::vector<decltype(nodes.front().state)> path;
  for (std::int64_t i = idx; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent)
    path.push_back(nodes[static_cast<std::size_t>(i)].state);
  std::reverse(path.begin(), path.end());
  return path;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Ordering keys for the focal engine's two ordered sets.
// f (resp. fhat) ascending, then larger g, then FIFO.
struct OpenKey {
  double f;
  double g;
  std::uint64_t seq;
  bool operator<(const OpenKey& o) const {
    if (f != o.f) return f < o.f;
    if (g != o.g) return g > o.g;
    return seq < o.seq;
  }
};

struct FocalKey {
  double fhat;
  double g;
  std::uint64_t seq;
  bool operator<(const FocalKey& o) const {
    if (fhat != o.fhat) return fhat < o.fhat;
    if (g != o.g) return g > o.g;
    return seq < o.seq;
  }
};

}  // namespace detail

// Weighted A*: best-first on f = g + w * h. Ties broken by larger g, then by
// insertion order (FIFO). A strictly cheaper g reached later updates an open
// state and re-opens a closed one, so inconsistent heuristics (the combined
// global-plus-local value is one) keep their guarantees: with w = 1 and
// admissible h the result is optimal, and in general cost <= w * C* because
// some node on an optimal path is always open with its true g.
//
// A successor whose h is +infinity is pruned at generation (it still counts
// as generated). Infinity is only sound for heuristics that return it when
// the goal is provably unreachable, like the exact local heuristic.
//
// on_expand(state) is invoked for every expanded state; returning false
// aborts the search with limit-reached status (used by dataset collection).
template <class Domain, class H, class OnExpand>
SearchResult<typename Domain::State> weighted_astar(const Domain& domain,
                                                    const typename Domain::State& start, H&& h,
                                                    double weight,
                                                    std::uint64_t expansion_limit,
                                                    OnExpand&& on_expand) {
  using State = typename Domain::State;
  detail::Stopwatch timer;
  SearchResult<State> result;

  struct Entry {
    double f;
    double g;
    std::uint64_t seq;
    std::uint32_t node;
  };
  struct Worse {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.f != b.f) return a.f > b.f;
      if (a.g != b.g) return a.g < b.g;
      return a.seq > b.seq;
    }
  };

  std::vector<detail::SearchNode<State>> nodes;
  std::unordered_map<State, std::uint32_t> index;
  std::priority_queue<Entry, std::vector<Entry>, Worse> open;
  std::uint64_t seq = 0;
  std::vector<std::pair<State, double>> succ;

  {
    double h0 = h(start);
    if (h0 == std::numeric_limits<double>::infinity()) h0 = 0.0;  // still search from start
    nodes.push_back({start, 0.0, h0, -1, false});
    index.emplace(start, 0);
    open.push({weight * h0, 0.0, seq++, 0});
  }

  while (!open.empty()) {
    Entry top = open.top();
    open.pop();
    auto& node = nodes[top.node];
    if (node.closed || node.g != top.g) continue;  // stale entry

    if (result.expansions >= expansion_limit) {
      result.status = SearchStatus::kLimitReached;
      result.elapsed = timer.seconds();
      return result;
    }

    node.closed = true;
    ++result.expansions;
    if (domain.is_goal(node.state)) {
      result.status = SearchStatus::kSolved;
      result.cost = node.g;
      result.path = detail::walk_parents(nodes, top.node);
      result.elapsed = timer.seconds();
      return result;
    }
    if (!on_expand(node.state)) {
      result.status = SearchStatus::kLimitReached;
      result.elapsed = timer.seconds();
      return result;
    }

    domain.successors(node.state, succ);
    const double g = node.g;
    for (auto& [s2, cost] : succ) {
      ++result.generated;
      double g2 = g + cost;
      auto [it, fresh] = index.try_emplace(s2, static_cast<std::uint32_t>(nodes.size()));
      if (fresh) {
        double h2 = h(s2);
        if (h2 == std::numeric_limits<double>::infinity()) {
          // provably hopeless; keep the node so the index stays consistent
          nodes.push_back({s2, g2, h2, static_cast<std::int64_t>(top.node), true});
          continue;
        }
        nodes.push_back({s2, g2, h2, static_cast<std::int64_t>(top.node), false});
        open.push({g2 + weight * h2, g2, seq++, it->second});
      } else {
        auto& other = nodes[it->second];
        if (g2 < other.g && other.h != std::numeric_limits<double>::infinity()) {
          other.g = g2;
          other.parent = static_cast<std::int64_t>(top.node);
          other.closed = false;
          open.push({g2 + weight * other.h, g2, seq++, it->second});
        }
      }
    }
  }

  result.status = SearchStatus::kExhausted;
  result.elapsed = timer.seconds();
  return result;
}

template <class Domain, class H>
SearchResult<typename Domain::State> weighted_astar(const Domain& domain,
                                                    const typename Domain::State& start, H&& h,
                                                    double weight,
                                                    std::uint64_t expansion_limit = kNoExpansionLimit) {
  return weighted_astar(domain, start, h, weight, expansion_limit,
                        [](const typename Domain::State&) { return true; });
}

// Focal search (bounded-suboptimal best-first search).
//
// OPEN is ordered by f = g + h_open; FOCAL holds every open node with
// f <= bound, where bound = w * f_min is frozen at its historical maximum
// (f_min never decreases when h_open is consistent, so this equals the
// textbook rule while staying safe against slight inconsistency). Each
// iteration expands the FOCAL node minimizing fhat = g + h_focal, ties
// broken by larger g then FIFO. h_focal may be arbitrary: a value of
// +infinity is mapped to the largest finite fhat so the node stays
// expandable. Closed states found again with a cheaper g are re-opened,
// which keeps the w * C* cost bound valid whatever h_focal does.
template <class Domain, class HOpen, class HFocal>
SearchResult<typename Domain::State> focal_search(const Domain& domain,
                                                  const typename Domain::State& start,
                                                  HOpen&& h_open, HFocal&& h_focal, double weight,
                                                  std::uint64_t expansion_limit = kNoExpansionLimit,
                                                  std::vector<double>* f_min_trace = nullptr) {
  using State = typename Domain::State;
  detail::Stopwatch timer;
  SearchResult<State> result;

  struct Node {
    State state;
    double g = 0.0;
    double h = 0.0;       // h_open, evaluated once per state
    double hf = 0.0;      // h_focal, evaluated once per state
    std::int64_t parent = -1;
    std::uint64_t seq = 0;  // of the live open/focal entries
    bool closed = false;
    bool in_open = false;
    bool in_focal = false;
  };

  using OpenKey = detail::OpenKey;
  using FocalKey = detail::FocalKey;

  std::vector<Node> nodes;
  std::unordered_map<State, std::uint32_t> index;
  std::set<std::pair<OpenKey, std::uint32_t>> open;
  std::set<std::pair<FocalKey, std::uint32_t>> focal;
  std::uint64_t seq = 0;
  double bound = -std::numeric_limits<double>::infinity();
  double admitted_up_to = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<State, double>> succ;

  auto fhat_of = [](const Node& n) {
    return n.hf == std::numeric_limits<double>::infinity() ? std::numeric_limits<double>::max()
                                                           : n.g + n.hf;
  };
  auto open_key = [](const Node& n) { return OpenKey{n.g + n.h, n.g, n.seq}; };
  auto focal_key = [&](const Node& n) { return FocalKey{fhat_of(n), n.g, n.seq}; };

  auto enqueue = [&](std::uint32_t id) {
    Node& n = nodes[id];
    n.seq = seq++;
    n.in_open = true;
    open.insert({open_key(n), id});
    if (n.g + n.h <= bound) {
      n.in_focal = true;
      focal.insert({focal_key(n), id});
    }
  };
  auto dequeue = [&](std::uint32_t id) {
    Node& n = nodes[id];
    if (n.in_open) {
      open.erase({open_key(n), id});
      n.in_open = false;
    }
    if (n.in_focal) {
      focal.erase({focal_key(n), id});
      n.in_focal = false;
    }
  };

  {
    Node n;
    n.state = start;
    n.g = 0.0;
    n.h = h_open(start);
    n.hf = h_focal(start);
    nodes.push_back(n);
    index.emplace(start, 0);
    bound = weight * n.h;
    admitted_up_to = bound;
    enqueue(0);
  }

  while (!open.empty()) {
    double f_min = open.begin()->first.f;
    if (f_min_trace) f_min_trace->push_back(f_min);
    double new_bound = weight * f_min;
    if (new_bound > bound) {
      bound = new_bound;
      // admit newly qualifying nodes: f in (admitted_up_to, bound]
      auto it = open.upper_bound(
          {OpenKey{admitted_up_to, -std::numeric_limits<double>::infinity(),
                   std::numeric_limits<std::uint64_t>::max()},
           std::numeric_limits<std::uint32_t>::max()});
      for (; it != open.end() && it->first.f <= bound; ++it) {
        Node& n = nodes[it->second];
        if (!n.in_focal) {
          n.in_focal = true;
          focal.insert({focal_key(n), it->second});
        }
      }
      admitted_up_to = bound;
    }

    if (result.expansions >= expansion_limit) {
      result.status = SearchStatus::kLimitReached;
      result.elapsed = timer.seconds();
      return result;
    }

    std::uint32_t id = focal.begin()->second;
    dequeue(id);
    Node& node = nodes[id];
    node.closed = true;
    ++result.expansions;

    if (domain.is_goal(node.state)) {
      result.status = SearchStatus::kSolved;
      result.cost = node.g;
      result.path = detail::walk_parents(nodes, static_cast<std::int64_t>(id));
      result.elapsed = timer.seconds();
      return result;
    }

    domain.successors(node.state, succ);
    const double g = node.g;
    const std::int64_t parent = static_cast<std::int64_t>(id);
    for (auto& [s2, cost] : succ) {
      ++result.generated;
      double g2 = g + cost;
      auto [it, fresh] = index.try_emplace(s2, static_cast<std::uint32_t>(nodes.size()));
      if (fresh) {
        Node n;
        n.state = s2;
        n.g = g2;
        n.h = h_open(s2);
        n.hf = h_focal(s2);
        n.parent = parent;
        nodes.push_back(n);
        enqueue(it->second);
      } else {
        Node& other = nodes[it->second];
        if (g2 < other.g) {
          dequeue(it->second);
          other.g = g2;
          other.parent = parent;
          other.closed = false;  // re-open: keeps the bound proof intact
          enqueue(it->second);
        }
      }
    }
  }

  result.status = SearchStatus::kExhausted;
  result.elapsed = timer.seconds();
  return result;
}

}  // namespace loha
