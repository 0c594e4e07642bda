#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "loha/car_domain.hpp"
#include "loha/features.hpp"
#include "loha/grid_domain.hpp"
#include "loha/gridmap.hpp"
#include "loha/local_heuristic.hpp"
#include "loha/prng.hpp"
#include "loha/search.hpp"

namespace loha {

struct TrainingExample {
  LocalInput input;
  double target = 0.0;  // h_k with dead ends replaced by 2K, clamped to [0, 2K]

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct DatasetProvenance {
  std::vector<std::string> maps;
  std::uint64_t seed = 0;
  double weight = 0.0;

  friend bool operator==(const DatasetProvenance&, const DatasetProvenance&) = default;
};

struct Dataset {
  int radius = 0;
  std::vector<TrainingExample> examples;
  DatasetProvenance provenance;
};

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(int line, const std::string& what)
      : std::runtime_error("dataset parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline double parse_number(const std::string& tok, int line, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw DatasetParseError(line, std::string("bad ") + what + " value '" + tok + "'");
  return v;
}

}  // namespace detail

// Text dataset format. Header line:
//
//   loha-dataset v1 K=<K>
//
// then one example per line as five whitespace-separated fields:
//
//   <obstacle> <dh> <inv0> <inv1> <inv2> <inv3> <target>
//
// where obstacle is a (2K+1)^2-character 0/1 string, dh is (2K+1)^2
// comma-separated decimals, and the invariant components and target are
// decimals. Decimals use shortest round-trip notation, so load(save(d))
// reproduces every value exactly.
inline void save_dataset(const Dataset& ds, std::ostream& out) {
  out << "loha-dataset v1 K=" << ds.radius << "\n";
  std::string line;
  for (const TrainingExample& ex : ds.examples) {
    line.clear();
    for (double o : ex.input.obstacle) line.push_back(o != 0.0 ? '1' : '0');
    line.push_back(' ');
    for (std::size_t i = 0; i < ex.input.dh.size(); ++i) {
      if (i) line.push_back(',');
      detail::append_number(line, ex.input.dh[i]);
    }
    for (double v : ex.input.invariant) {
      line.push_back(' ');
      detail::append_number(line, v);
    }
    line.push_back(' ');
    detail::append_number(line, ex.target);
    line.push_back('\n');
    out << line;
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
  save_dataset(ds, out);
  if (!out) throw std::runtime_error("dataset write failed: " + path);
}

inline Dataset load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetParseError(1, "empty input, expected header");
  line = detail::trim_cr(line);

  Dataset ds;
  {
    std::istringstream hs(line);
    std::string tag, ver, kfield;
    hs >> tag >> ver >> kfield;
    if (tag != "loha-dataset" || ver != "v1" || kfield.rfind("K=", 0) != 0)
      throw DatasetParseError(1, "expected 'loha-dataset v1 K=<K>', got '" + line + "'");
    int k = 0;
    auto res = std::from_chars(kfield.data() + 2, kfield.data() + kfield.size(), k);
    if (res.ec != std::errc() || res.ptr != kfield.data() + kfield.size() || k < 1)
      throw DatasetParseError(1, "bad K in header '" + kfield + "'");
    ds.radius = k;
  }

  const std::size_t cells =
      static_cast<std::size_t>(2 * ds.radius + 1) * (2 * ds.radius + 1);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim_cr(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string obstacle, dh;
    std::string inv[4], target, extra;
    if (!(ls >> obstacle >> dh >> inv[0] >> inv[1] >> inv[2] >> inv[3] >> target))
      throw DatasetParseError(line_no, "expected 7 whitespace-separated fields");
    if (ls >> extra) throw DatasetParseError(line_no, "trailing field '" + extra + "'");

    TrainingExample ex;
    ex.input.radius = ds.radius;
    if (obstacle.size() != cells)
      throw DatasetParseError(line_no, "obstacle field has " + std::to_string(obstacle.size()) +
                                           " cells, expected " + std::to_string(cells));
    ex.input.obstacle.reserve(cells);
    for (char c : obstacle) {
      if (c != '0' && c != '1')
        throw DatasetParseError(line_no, std::string("bad obstacle character '") + c + "'");
      ex.input.obstacle.push_back(c == '1' ? 1.0 : 0.0);
    }

    ex.input.dh.reserve(cells);
    std::size_t at = 0;
    while (at <= dh.size()) {
      std::size_t comma = dh.find(',', at);
      std::string tok = dh.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
      ex.input.dh.push_back(detail::parse_number(tok, line_no, "dh"));
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
    if (ex.input.dh.size() != cells)
      throw DatasetParseError(line_no, "dh field has " + std::to_string(ex.input.dh.size()) +
                                           " entries, expected " + std::to_string(cells));

    for (int k = 0; k < 4; ++k)
      ex.input.invariant[k] = detail::parse_number(inv[k], line_no, "invariant");
    ex.target = detail::parse_number(target, line_no, "target");
    if (!(ex.target >= 0.0 && ex.target <= 2.0 * ds.radius))
      throw DatasetParseError(line_no, "target " + target + " outside [0, 2K]");
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return load_dataset(in);
}

namespace detail {

// Start/goal lattice states for dataset collection. Grid states are the
// cells themselves; car states sit on the cell corner, starting at rest
// with a random heading, aiming for a goal position with any heading.
template <class Domain>
typename Domain::State collect_start(GridState cell, SplitMix64& rng) {
  if constexpr (std::is_same_v<Domain, GridDomain>) {
    (void)rng;
    return cell;
  } else {
    return {2 * cell.x, 2 * cell.y, static_cast<int>(rng.next_below(12)), 0};
  }
}

template <class Domain>
typename Domain::State collect_goal(GridState cell) {
  if constexpr (std::is_same_v<Domain, GridDomain>) {
    return cell;
  } else {
    return {2 * cell.x, 2 * cell.y, 0, 0};
  }
}

inline GridState random_free_cell_or_fail(const GridMap& map, SplitMix64& rng, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    int x = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(map.width())));
    int y = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(map.height())));
    if (!map.is_blocked(x, y)) return {x, y};
  }
  return {-1, -1};
}

}  // namespace detail

// Per-query search budget during collection; queries hitting it still
// contribute the states they expanded.
constexpr std::uint64_t kCollectExpansionLimit = 200000;

// Runs weighted A* with f = g + w * (h_g + capped local value) on seeded
// random solvable start/goal pairs and records (features, local value) for
// every expanded state. Dead ends are recorded as 2K and everything is
// clamped to [0, 2K]. Unsolvable pairs are resampled a bounded number of
// times, then skipped with a warning. The result is a pure function of the
// arguments; Domain is GridDomain or CarDomain.
template <class Domain>
Dataset collect_dataset(const std::vector<GridMap>& maps, int queries_per_map, double w, int K,
                        std::uint64_t cap, std::uint64_t seed, std::size_t target_size,
                        std::vector<std::string>* warnings = nullptr) {
  if (maps.empty()) throw std::invalid_argument("dataset collection needs at least one map");
  if (queries_per_map < 1) throw std::invalid_argument("queries_per_map must be >= 1");

  Dataset ds;
  ds.radius = K;
  ds.provenance.seed = seed;
  ds.provenance.weight = w;
  for (const GridMap& m : maps) ds.provenance.maps.push_back(m.name());

  const double hi = 2.0 * K;
  for (std::size_t mi = 0; mi < maps.size() && ds.examples.size() < target_size; ++mi) {
    const GridMap& map = maps[mi];
    for (int q = 0; q < queries_per_map && ds.examples.size() < target_size; ++q) {
      SplitMix64 rng(derive_seed(seed, mi * 1000003u + static_cast<std::uint64_t>(q)));

      GridState sc{-1, -1}, gc{-1, -1};
      bool found = false;
      for (int attempt = 0; attempt < 50 && !found; ++attempt) {
        sc = detail::random_free_cell_or_fail(map, rng, 200);
        gc = detail::random_free_cell_or_fail(map, rng, 200);
        if (sc.x < 0 || gc.x < 0) break;
        found = !(sc == gc) && cells_connected(map, sc.x, sc.y, gc.x, gc.y);
      }
      if (!found) {
        if (warnings)
          warnings->push_back("map '" + map.name() + "' query " + std::to_string(q) +
                              ": no solvable start/goal pair found, skipped");
        continue;
      }

      Domain dom(map, detail::collect_goal<Domain>(gc));
      typename Domain::State start = detail::collect_start<Domain>(sc, rng);
      LocalHeuristic<Domain> local(dom, {K, cap});

      auto h = [&](const typename Domain::State& s) {
        return combined_h(dom.heuristic(s), local.evaluate(s));
      };
      auto record = [&](const typename Domain::State& s) {
        LocalHValue hk = local.evaluate(s);
        double target = hk.dead_end ? hi : std::min(hk.value, hi);
        ds.examples.push_back({extract_features(dom, s, K), target});
        return ds.examples.size() < target_size;
      };
      weighted_astar(dom, start, h, w, kCollectExpansionLimit, record);
    }
  }
  return ds;
}

}  // namespace loha
