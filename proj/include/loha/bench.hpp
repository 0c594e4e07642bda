#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "loha/car_domain.hpp"
#include "loha/dataset.hpp"
#include "loha/features.hpp"
#include "loha/grid_domain.hpp"
#include "loha/gridmap.hpp"
#include "loha/local_heuristic.hpp"
#include "loha/nn.hpp"
#include "loha/prng.hpp"
#include "loha/search.hpp"
#include "loha/train.hpp"

namespace loha {

enum class Method { kWAstar, kAstarTL, kLoha };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kWAstar: return "wastar";
    case Method::kAstarTL: return "astar_tl";
    case Method::kLoha: return "loha";
  }
  return "?";
}

inline Method method_from(std::string_view name) {
  if (name == "wastar") return Method::kWAstar;
  if (name == "astar_tl") return Method::kAstarTL;
  if (name == "loha") return Method::kLoha;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

// Seeded start/goal sampling: free cells, position separation >= min_separation,
// and cell-level connectivity. Connectivity is exact for the grid domain and a
// necessary condition for the car domain; car queries that are still infeasible
// surface later as unsolved result rows rather than aborting anything.
// Returns a partial list plus a warning when the map cannot supply n pairs.
template <class Domain>
std::vector<std::pair<typename Domain::State, typename Domain::State>> generate_scenarios(
    const GridMap& map, std::size_t n, std::uint64_t seed, double min_separation,
    std::vector<std::string>* warnings = nullptr) {
  if (n < 1) throw std::invalid_argument("scenario count must be >= 1");
  if (!(min_separation >= 0.0)) throw std::invalid_argument("min_separation must be >= 0");

  std::vector<std::pair<typename Domain::State, typename Domain::State>> out;
  out.reserve(n);
  SplitMix64 rng(seed);
  double sep2 = min_separation * min_separation;
  while (out.size() < n) {
    bool found = false;
    for (int attempt = 0; attempt < 400 && !found; ++attempt) {
      GridState sc = detail::random_free_cell_or_fail(map, rng, 200);
      GridState gc = detail::random_free_cell_or_fail(map, rng, 200);
      if (sc.x < 0 || gc.x < 0) break;
      double dx = sc.x - gc.x;
      double dy = sc.y - gc.y;
      if (dx * dx + dy * dy < sep2) continue;
      if (!cells_connected(map, sc.x, sc.y, gc.x, gc.y)) continue;
      out.emplace_back(detail::collect_start<Domain>(sc, rng), detail::collect_goal<Domain>(gc));
      found = true;
    }
    if (!found) {
      if (warnings)
        warnings->push_back("generated " + std::to_string(out.size()) + " of " +
                            std::to_string(n) + " scenarios for map " + map.name());
      break;
    }
  }
  return out;
}

struct ResultRow {
  std::string map;
  std::string split;
  std::string method;
  double weight = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t query = 0;
  std::uint64_t expansions = 0;
  std::uint64_t generated = 0;
  double cost = 0.0;
  double elapsed_s = 0.0;
  std::string status = "solved";

  bool operator==(const ResultRow&) const = default;
};

struct ExperimentConfig {
  std::vector<GridMap> train_maps;
  std::vector<GridMap> test_maps;
  std::string domain = "grid";
  std::vector<Method> methods{Method::kWAstar, Method::kAstarTL};
  std::vector<double> weights{2.0, 8.0, 32.0, 128.0};
  int radius = 4;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int queries_per_map = 10;
  std::uint64_t expansion_limit = 2000000;
  const Model* model = nullptr;  // required when methods include loha
  std::uint64_t local_cap = 0;   // 0: exact local values for astar_tl
  double min_separation = -1.0;  // negative: map width / 2
};

// Runs one method on one query. The local heuristic instance is shared across
// calls for the same domain; the learned method reads the window radius off
// the model so a mismatched config radius cannot skew feature extraction.
template <class Domain>
SearchResult<typename Domain::State> run_method(const Domain& dom, LocalHeuristic<Domain>& local,
                                                Predictor* pred,
                                                const typename Domain::State& start, Method method,
                                                double w, std::uint64_t expansion_limit) {
  using State = typename Domain::State;
  switch (method) {
    case Method::kWAstar: {
      auto h = [&](const State& s) { return dom.heuristic(s); };
      return weighted_astar(dom, start, h, w, expansion_limit);
    }
    case Method::kAstarTL: {
      auto h = [&](const State& s) { return combined_h(dom.heuristic(s), local.evaluate(s)); };
      return weighted_astar(dom, start, h, w, expansion_limit);
    }
    case Method::kLoha: {
      if (pred == nullptr) throw std::invalid_argument("loha method needs a model");
      int mk = pred->model().radius;
      auto h_open = [&](const State& s) { return dom.heuristic(s); };
      // FOCAL ranks by the weighted combined estimate so the search is as
      // greedy as the weighted A* it is compared against; the admissible
      // OPEN queue alone enforces the w * C* bound.
      auto h_focal = [&](const State& s) {
        return w * (dom.heuristic(s) + pred->predict_hk(extract_features(dom, s, mk)));
      };
      return focal_search(dom, start, h_open, h_focal, w, expansion_limit);
    }
  }
  throw std::invalid_argument("unknown method");
}

namespace detail {

template <class Domain>
void run_split(const ExperimentConfig& cfg, const std::vector<GridMap>& maps, const char* split,
               std::size_t& map_ordinal, std::optional<Predictor>& pred,
               std::vector<ResultRow>& rows, std::vector<std::string>* warnings) {
  for (const GridMap& map : maps) {
    double min_sep = cfg.min_separation >= 0.0 ? cfg.min_separation : map.width() / 2.0;
    for (std::uint64_t seed : cfg.seeds) {
      auto scenarios = generate_scenarios<Domain>(map, static_cast<std::size_t>(cfg.queries_per_map),
                                                  derive_seed(seed, map_ordinal), min_sep, warnings);
      for (std::size_t qi = 0; qi < scenarios.size(); ++qi) {
        Domain dom(map, scenarios[qi].second);
        LocalHeuristic<Domain> local(dom, {cfg.radius, cfg.local_cap});
        for (double w : cfg.weights) {
          for (Method method : cfg.methods) {
            auto res = run_method(dom, local, pred ? &*pred : nullptr, scenarios[qi].first, method,
                                  w, cfg.expansion_limit);
            ResultRow row;
            row.map = map.name();
            row.split = split;
            row.method = to_string(method);
            row.weight = w;
            row.seed = seed;
            row.query = qi;
            row.expansions = res.expansions;
            row.generated = res.generated;
            row.cost = res.cost;
            row.elapsed_s = res.elapsed;
            row.status = to_string(res.status);
            rows.push_back(std::move(row));
          }
        }
      }
    }
    ++map_ordinal;
  }
}

template <class Domain>
std::vector<ResultRow> run_domain(const ExperimentConfig& cfg, std::vector<std::string>* warnings) {
  std::optional<Predictor> pred;
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::kLoha) != cfg.methods.end()) {
    if (cfg.model == nullptr) throw std::invalid_argument("loha method needs a model");
    pred.emplace(*cfg.model);
  }
  std::vector<ResultRow> rows;
  std::size_t map_ordinal = 0;
  run_split<Domain>(cfg, cfg.train_maps, "train", map_ordinal, pred, rows, warnings);
  run_split<Domain>(cfg, cfg.test_maps, "test", map_ordinal, pred, rows, warnings);
  return rows;
}

}  // namespace detail

// Runs every (map, seed, query, weight, method) cell and emits one row per
// cell. Scenarios are derived per (seed, map ordinal), shared by all methods
// and weights so rows pair up exactly. Unsolved queries land in row.status.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg,
                                             std::vector<std::string>* warnings = nullptr) {
  if (cfg.train_maps.empty() && cfg.test_maps.empty())
    throw std::invalid_argument("experiment needs at least one map");
  if (cfg.methods.empty()) throw std::invalid_argument("experiment needs at least one method");
  if (cfg.weights.empty()) throw std::invalid_argument("experiment needs at least one weight");
  for (double w : cfg.weights)
    if (!(w >= 1.0)) throw std::invalid_argument("weights must be >= 1");
  if (cfg.radius < 1) throw std::invalid_argument("radius must be >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (cfg.queries_per_map < 1) throw std::invalid_argument("queries_per_map must be >= 1");

  if (cfg.domain == "grid") return detail::run_domain<GridDomain>(cfg, warnings);
  if (cfg.domain == "car") return detail::run_domain<CarDomain>(cfg, warnings);
  throw std::invalid_argument("unknown domain: " + cfg.domain);
}

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(std::size_t line, const std::string& what)
      : std::runtime_error("csv parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kCsvHeader =
    "map,split,method,weight,seed,query,expansions,generated,cost,elapsed_s,status";

namespace detail {

inline void csv_text_field(std::string& out, const std::string& v) {
  if (v.find_first_of(",\n\r") != std::string::npos)
    throw std::invalid_argument("csv field contains a delimiter: " + v);
  out += v;
}

inline double csv_double(std::string_view tok, std::size_t line, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw CsvParseError(line, std::string("bad ") + what + ": " + std::string(tok));
  return v;
}

inline std::uint64_t csv_u64(std::string_view tok, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw CsvParseError(line, std::string("bad ") + what + ": " + std::string(tok));
  return v;
}

}  // namespace detail

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    detail::csv_text_field(out, r.map);
    out += ',';
    detail::csv_text_field(out, r.split);
    out += ',';
    detail::csv_text_field(out, r.method);
    out += ',';
    detail::append_number(out, r.weight);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.query);
    out += ',';
    out += std::to_string(r.expansions);
    out += ',';
    out += std::to_string(r.generated);
    out += ',';
    detail::append_number(out, r.cost);
    out += ',';
    detail::append_number(out, r.elapsed_s);
    out += ',';
    detail::csv_text_field(out, r.status);
    out += '\n';
  }
  return out;
}

inline std::vector<ResultRow> rows_from_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t f = 0;
    while (true) {
      std::size_t c = line.find(',', f);
      if (c == std::string_view::npos) {
        fields.push_back(line.substr(f));
        break;
      }
      fields.push_back(line.substr(f, c - f));
      f = c + 1;
    }

    if (!saw_header) {
      if (line != kCsvHeader) throw CsvParseError(line_no, "missing or malformed header");
      saw_header = true;
      continue;
    }
    if (fields.size() != 11)
      throw CsvParseError(line_no, "expected 11 fields, got " + std::to_string(fields.size()));

    ResultRow r;
    r.map = std::string(fields[0]);
    r.split = std::string(fields[1]);
    r.method = std::string(fields[2]);
    r.weight = detail::csv_double(fields[3], line_no, "weight");
    r.seed = detail::csv_u64(fields[4], line_no, "seed");
    r.query = detail::csv_u64(fields[5], line_no, "query");
    r.expansions = detail::csv_u64(fields[6], line_no, "expansions");
    r.generated = detail::csv_u64(fields[7], line_no, "generated");
    r.cost = detail::csv_double(fields[8], line_no, "cost");
    r.elapsed_s = detail::csv_double(fields[9], line_no, "elapsed_s");
    r.status = std::string(fields[10]);
    try {
      search_status_from(r.status);
    } catch (const std::invalid_argument& e) {
      throw CsvParseError(line_no, e.what());
    }
    rows.push_back(std::move(r));
  }
  if (!saw_header) throw CsvParseError(1, "missing or malformed header");
  return rows;
}

// Map names generated by generate_random_map end in "-<seed>"; stripping the
// numeric suffix groups maps drawn from the same recipe into one report row.
inline std::string map_type(std::string_view name) {
  std::size_t dash = name.rfind('-');
  if (dash != std::string_view::npos && dash + 1 < name.size()) {
    bool digits = true;
    for (std::size_t i = dash + 1; i < name.size(); ++i)
      if (name[i] < '0' || name[i] > '9') digits = false;
    if (digits) return std::string(name.substr(0, dash));
  }
  return std::string(name);
}

struct AggregateRow {
  std::string map_type;
  std::string split;
  std::string method;
  double weight = 1.0;
  std::size_t pairs = 0;
  std::size_t limit_reached = 0;
  double median_reduction = 0.0;
  double expansions_per_second = 0.0;

  bool operator==(const AggregateRow&) const = default;
};

struct Report {
  std::vector<AggregateRow> rows;
  std::vector<std::string> warnings;
};

// Per-query reduction = baseline expansions / method expansions on the same
// (map, weight, seed, query), then the median per (map type, split, method,
// weight) cell. Even-sized cells take the mean of the two middle values.
// Pairs where either side hit the expansion limit are counted and excluded;
// other unsolved pairs and rows with no baseline are excluded with a warning.
// Expansions per second covers every row of the cell, whatever its status.
inline Report aggregate(const std::vector<ResultRow>& rows, const std::string& baseline = "wastar") {
  Report rep;

  std::map<std::tuple<std::string, double, std::uint64_t, std::uint64_t>, const ResultRow*> base;
  for (const ResultRow& r : rows) {
    if (r.method != baseline) continue;
    auto key = std::make_tuple(r.map, r.weight, r.seed, r.query);
    auto [it, inserted] = base.try_emplace(key, &r);
    if (!inserted && r.expansions < it->second->expansions) it->second = &r;
  }

  struct Cell {
    std::vector<double> reductions;
    std::size_t limit_reached = 0;
    std::uint64_t expansions = 0;
    double elapsed = 0.0;
  };
  std::map<std::tuple<std::string, std::string, std::string, double>, Cell> cells;

  for (const ResultRow& r : rows) {
    Cell& cell = cells[{map_type(r.map), r.split, r.method, r.weight}];
    cell.expansions += r.expansions;
    cell.elapsed += r.elapsed_s;

    auto bit = base.find(std::make_tuple(r.map, r.weight, r.seed, r.query));
    if (bit == base.end()) {
      rep.warnings.push_back("no baseline row for " + r.map + " w=" + std::to_string(r.weight) +
                             " seed=" + std::to_string(r.seed) +
                             " query=" + std::to_string(r.query));
      continue;
    }
    const ResultRow& b = *bit->second;
    if (r.status == "limit-reached" || b.status == "limit-reached") {
      ++cell.limit_reached;
      continue;
    }
    if (r.status != "solved" || b.status != "solved") {
      rep.warnings.push_back("unsolved query excluded: " + r.map + " method=" + r.method +
                             " seed=" + std::to_string(r.seed) +
                             " query=" + std::to_string(r.query));
      continue;
    }
    cell.reductions.push_back(static_cast<double>(b.expansions) /
                              static_cast<double>(r.expansions));
  }

  for (auto& [key, cell] : cells) {
    AggregateRow out;
    out.map_type = std::get<0>(key);
    out.split = std::get<1>(key);
    out.method = std::get<2>(key);
    out.weight = std::get<3>(key);
    out.pairs = cell.reductions.size();
    out.limit_reached = cell.limit_reached;
    if (!cell.reductions.empty()) {
      std::sort(cell.reductions.begin(), cell.reductions.end());
      std::size_t n = cell.reductions.size();
      out.median_reduction = n % 2 == 1
                                 ? cell.reductions[n / 2]
                                 : (cell.reductions[n / 2 - 1] + cell.reductions[n / 2]) / 2.0;
    }
    if (cell.elapsed > 0.0)
      out.expansions_per_second = static_cast<double>(cell.expansions) / cell.elapsed;
    rep.rows.push_back(std::move(out));
  }
  return rep;
}

namespace detail {

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed0(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

inline std::string weight_label(double w) {
  std::string s = "w=";
  append_number(s, w);
  return s;
}

}  // namespace detail

// Markdown tables: median reduction per (map type, split, method) row with one
// column per weight, the baseline itself omitted, then expansions per second
// for every method. Cells whose median excluded limit-reached queries get a
// trailing *.
inline std::string report_markdown(const Report& rep, const std::string& baseline = "wastar") {
  std::vector<double> weights;
  for (const AggregateRow& r : rep.rows)
    if (std::find(weights.begin(), weights.end(), r.weight) == weights.end())
      weights.push_back(r.weight);
  std::sort(weights.begin(), weights.end());

  auto table = [&](bool reductions) {
    std::vector<std::tuple<std::string, std::string, std::string>> keys;
    for (const AggregateRow& r : rep.rows) {
      if (reductions && r.method == baseline) continue;
      auto key = std::make_tuple(r.map_type, r.split, r.method);
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }

    std::string out = "| map | split | method |";
    for (double w : weights) out += " " + detail::weight_label(w) + " |";
    out += "\n|---|---|---|";
    for (std::size_t i = 0; i < weights.size(); ++i) out += "---|";
    out += '\n';
    for (const auto& [mt, split, method] : keys) {
      out += "| " + mt + " | " + split + " | " + method + " |";
      for (double w : weights) {
        const AggregateRow* found = nullptr;
        for (const AggregateRow& r : rep.rows)
          if (r.map_type == mt && r.split == split && r.method == method && r.weight == w)
            found = &r;
        if (found == nullptr || (reductions && found->pairs == 0)) {
          out += " n/a |";
        } else if (reductions) {
          out += " " + detail::fixed2(found->median_reduction);
          if (found->limit_reached > 0) out += "*";
          out += " |";
        } else {
          out += " " + detail::fixed0(found->expansions_per_second) + " |";
        }
      }
      out += '\n';
    }
    return out;
  };

  std::size_t limit_total = 0;
  for (const AggregateRow& r : rep.rows) limit_total += r.limit_reached;

  std::string out = "Median node-expansion reduction vs " + baseline + ":\n\n";
  out += table(true);
  if (limit_total > 0)
    out += "\n\\* median excludes " + std::to_string(limit_total) +
           " limit-reached query pairings\n";
  out += "\nExpansions per second:\n\n";
  out += table(false);
  return out;
}

// Collection with the domain picked by name; the CLI and the ablation both
// dispatch through this.
inline Dataset collect_domain_dataset(const std::string& domain, const std::vector<GridMap>& maps,
                                      int queries_per_map, double w, int K, std::uint64_t cap,
                                      std::uint64_t seed, std::size_t target_size,
                                      std::vector<std::string>* warnings = nullptr) {
  if (domain == "grid")
    return collect_dataset<GridDomain>(maps, queries_per_map, w, K, cap, seed, target_size,
                                       warnings);
  if (domain == "car")
    return collect_dataset<CarDomain>(maps, queries_per_map, w, K, cap, seed, target_size,
                                      warnings);
  throw std::invalid_argument("unknown domain: " + domain);
}

struct AblationConfig {
  std::vector<GridMap> train_maps;
  std::vector<GridMap> test_maps;
  std::string domain = "grid";
  std::vector<int> radii{2, 4, 6};
  int queries_per_map = 50;
  double weight = 8.0;
  std::uint64_t cap = 100;
  std::uint64_t seed = 0;
  std::size_t train_examples = 20000;
  std::size_t test_examples = 4000;
  double holdout_fraction = 0.2;
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int filters = 8;
};

struct AblationRow {
  int radius = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

// For each window radius: collect on train maps, hold out a shuffled fraction,
// train on the rest, report held-out loss on the train-map distribution and on
// a dataset collected from the test maps.
inline std::vector<AblationRow> ablate_k(const AblationConfig& cfg,
                                         std::vector<std::string>* warnings = nullptr) {
  if (cfg.radii.empty()) throw std::invalid_argument("ablation needs at least one radius");
  if (cfg.train_maps.empty() || cfg.test_maps.empty())
    throw std::invalid_argument("ablation needs train and test maps");
  if (!(cfg.holdout_fraction > 0.0) || !(cfg.holdout_fraction < 1.0))
    throw std::invalid_argument("holdout fraction must be in (0, 1)");

  std::vector<AblationRow> out;
  for (std::size_t ki = 0; ki < cfg.radii.size(); ++ki) {
    int K = cfg.radii[ki];
    std::uint64_t kseed = derive_seed(cfg.seed, 1000 + ki);
    Dataset train_ds =
        collect_domain_dataset(cfg.domain, cfg.train_maps, cfg.queries_per_map, cfg.weight, K,
                               cfg.cap, derive_seed(kseed, 0), cfg.train_examples, warnings);
    Dataset test_ds =
        collect_domain_dataset(cfg.domain, cfg.test_maps, cfg.queries_per_map, cfg.weight, K,
                               cfg.cap, derive_seed(kseed, 1), cfg.test_examples, warnings);
    std::size_t n = train_ds.examples.size();
    if (n < 2 || test_ds.examples.empty())
      throw std::runtime_error("ablation collected too few examples at K=" + std::to_string(K));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(kseed, 2));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    std::size_t held = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * n));
    held = std::min(std::max<std::size_t>(held, 1), n - 1);

    Dataset fit{K, {}, train_ds.provenance};
    Dataset held_out{K, {}, train_ds.provenance};
    fit.examples.reserve(n - held);
    held_out.examples.reserve(held);
    for (std::size_t i = 0; i < n; ++i)
      (i < held ? held_out : fit).examples.push_back(train_ds.examples[order[i]]);

    TrainResult tr = train(fit, cfg.epochs, cfg.batch_size, cfg.learning_rate,
                           derive_seed(kseed, 3), cfg.filters);
    out.push_back({K, evaluate_loss(tr.model, held_out), evaluate_loss(tr.model, test_ds)});
  }
  return out;
}

}  // namespace loha
