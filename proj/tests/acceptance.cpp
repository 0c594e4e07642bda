// Acceptance gate: each criterion prints one PASS/FAIL line. Run with a
// criterion number to check just that one, with no argument to run all.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "loha/bench.hpp"
#include "test_support.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridInstance {
  loha::GridMap map;
  loha::GridState start;
  loha::GridState goal;
  int optimal;
};

std::optional<GridInstance> sample_grid_instance(std::uint64_t i) {
  static const double pcts[4] = {15.0, 25.0, 35.0, 45.0};
  loha::GridMap map = loha::generate_random_map(24, 24, pcts[i % 4], 1000 + i);
  auto pairs = loha::generate_scenarios<loha::GridDomain>(map, 1, loha::derive_seed(7, i), 6.0);
  if (pairs.empty()) return std::nullopt;
  int optimal = testsupport::bfs_cost(map, pairs[0].first, pairs[0].second);
  if (optimal < 0) return std::nullopt;
  return GridInstance{std::move(map), pairs[0].first, pairs[0].second, optimal};
}

// w = 1 with the exact combined heuristic must reproduce the breadth-first
// optimum on every instance.
bool criterion1() {
  int checked = 0;
  int optimal = 0;
  for (std::uint64_t i = 0; checked < 200; ++i) {
    auto inst = sample_grid_instance(i);
    if (!inst) continue;
    ++checked;
    loha::GridDomain dom(inst->map, inst->goal);
    loha::LocalHeuristic<loha::GridDomain> local(dom, {3, 0});
    auto res = loha::run_method(dom, local, nullptr, inst->start, loha::Method::kAstarTL, 1.0,
                                loha::kNoExpansionLimit);
    if (res.solved() && res.cost == static_cast<double>(inst->optimal)) ++optimal;
  }
  std::printf("  %d of %d instances matched the breadth-first optimum\n", optimal, checked);
  return optimal == checked;
}

// Focal search must respect cost <= w * C* whatever h_focal does.
bool criterion2() {
  const double weights[3] = {1.5, 2.0, 8.0};
  bool ok = true;
  for (double w : weights) {
    int checked = 0;
    int within = 0;
    for (std::uint64_t i = 0; checked < 200; ++i) {
      auto inst = sample_grid_instance(10000 + i);
      if (!inst) continue;
      ++checked;
      loha::GridDomain dom(inst->map, inst->goal);
      auto h_open = [&](const loha::GridState& s) { return dom.heuristic(s); };
      std::uint64_t salt = loha::derive_seed(99, i);
      int variant = static_cast<int>(i % 3);
      auto h_focal = [&](const loha::GridState& s) -> double {
        if (variant == 2) return 0.0;
        if (variant == 1) return std::max(0.0, 50.0 - dom.heuristic(s));
        std::uint64_t r = loha::mix64(std::hash<loha::GridState>{}(s) ^ salt);
        if ((r & 7u) == 0) return kInf;
        return static_cast<double>(r % 512) / 8.0;
      };
      auto res = loha::focal_search(dom, inst->start, h_open, h_focal, w);
      if (res.solved() && res.cost <= w * inst->optimal + 1e-9) ++within;
    }
    std::printf("  w=%.1f: %d of %d within bound\n", w, within, checked);
    if (within != checked) ok = false;
  }
  return ok;
}

// Exact local values against the exhaustive breadth-first oracle.
bool criterion3() {
  int grid_match = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    static const double pcts[4] = {15.0, 25.0, 35.0, 45.0};
    loha::GridMap map = loha::generate_random_map(20, 20, pcts[i % 4], 3000 + i);
    loha::SplitMix64 rng(loha::derive_seed(31, i));
    loha::GridState s = testsupport::random_free_cell(map, rng);
    loha::GridState goal = i % 13 == 0 ? s : testsupport::random_free_cell(map, rng);
    loha::GridDomain dom(map, goal);
    bool all = true;
    for (int K : {2, 3, 4}) {
      auto mine = loha::local_h_exact(dom, s, {K, 0});
      auto orc = testsupport::local_oracle(dom, s, K);
      if (mine.value != orc.value || mine.dead_end != orc.dead_end || !mine.exact) all = false;
    }
    grid_match += all ? 1 : 0;
  }
  std::printf("  grid: %d of 1000 states matched exactly at K in {2, 3, 4}\n", grid_match);

  int car_match = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    static const double pcts[4] = {10.0, 15.0, 20.0, 25.0};
    loha::GridMap map = loha::generate_random_map(20, 20, pcts[i % 4], 4000 + i);
    loha::SplitMix64 rng(loha::derive_seed(33, i));
    loha::GridState sc = testsupport::random_free_cell(map, rng);
    loha::GridState gc = i % 13 == 0 ? sc : testsupport::random_free_cell(map, rng);
    loha::CarState s{2 * sc.x, 2 * sc.y, static_cast<int>(rng.next_below(24)),
                     static_cast<int>(rng.next_below(5)) - 1};
    loha::CarDomain dom(map, loha::CarState{2 * gc.x, 2 * gc.y, 0, 0});
    bool all = true;
    for (int K : {2, 3, 4}) {
      auto mine = loha::local_h_exact(dom, s, {K, 0});
      auto orc = testsupport::local_oracle(dom, s, K);
      bool same = mine.dead_end == orc.dead_end && mine.exact;
      if (same) {
        if (mine.value == kInf || orc.value == kInf)
          same = mine.value == orc.value;
        else
          same = std::abs(mine.value - orc.value) <= 1e-9;
      }
      if (!same) all = false;
    }
    car_match += all ? 1 : 0;
  }
  std::printf("  car: %d of 1000 states matched within 1e-9 at K in {2, 3, 4}\n", car_match);
  return grid_match == 1000 && car_match == 1000;
}

// On the dead-end corridor the combined heuristic must expand strictly fewer
// nodes, expand no pocket cell, and return a path that avoids the pocket.
bool criterion4() {
  loha::GridMap map = testsupport::dead_end_corridor_map();
  loha::GridDomain dom(map, testsupport::cul_de_sac_goal());
  loha::LocalHeuristic<loha::GridDomain> local(dom, {3, 0});
  loha::GridState start = testsupport::cul_de_sac_start();

  std::uint64_t plain_pocket = 0;
  std::uint64_t tl_pocket = 0;
  auto h_plain = [&](const loha::GridState& s) { return dom.heuristic(s); };
  auto h_tl = [&](const loha::GridState& s) {
    return loha::combined_h(dom.heuristic(s), local.evaluate(s));
  };
  auto plain =
      loha::weighted_astar(dom, start, h_plain, 2.0, 1000000, [&](const loha::GridState& s) {
        plain_pocket += testsupport::in_dead_end_corridor(s) ? 1 : 0;
        return true;
      });
  auto tl = loha::weighted_astar(dom, start, h_tl, 2.0, 1000000, [&](const loha::GridState& s) {
    tl_pocket += testsupport::in_dead_end_corridor(s) ? 1 : 0;
    return true;
  });

  bool path_clear = true;
  for (const loha::GridState& s : tl.path)
    if (testsupport::in_dead_end_corridor(s)) path_clear = false;
  std::printf("  plain %llu expansions (%llu in pocket), combined %llu (%llu in pocket)\n",
              static_cast<unsigned long long>(plain.expansions),
              static_cast<unsigned long long>(plain_pocket),
              static_cast<unsigned long long>(tl.expansions),
              static_cast<unsigned long long>(tl_pocket));
  return plain.solved() && tl.solved() && tl.expansions < plain.expansions && tl_pocket == 0 &&
         path_clear;
}

const loha::AggregateRow* find_cell(const loha::Report& rep, const std::string& split,
                                    const std::string& method, double w) {
  for (const loha::AggregateRow& r : rep.rows)
    if (r.split == split && r.method == method && r.weight == w) return &r;
  return nullptr;
}

// Car-domain reductions with the exact local heuristic at desk scale.
bool criterion5() {
  loha::ExperimentConfig cfg;
  cfg.train_maps = {loha::generate_random_map(256, 256, 20, 1),
                    loha::generate_random_map(256, 256, 20, 2),
                    loha::generate_random_map(256, 256, 20, 3)};
  cfg.domain = "car";
  cfg.methods = {loha::Method::kWAstar, loha::Method::kAstarTL};
  cfg.weights = {2.0, 8.0, 32.0, 128.0};
  cfg.radius = 4;
  cfg.local_cap = 0;
  cfg.seeds = {0, 1, 2};
  cfg.queries_per_map = 10;
  cfg.expansion_limit = 2000000;

  std::vector<std::string> warnings;
  auto rows = loha::run_experiment(cfg, &warnings);
  for (const std::string& w : warnings) std::printf("  warning: %s\n", w.c_str());
  loha::Report rep = loha::aggregate(rows);

  bool ok = true;
  double red2 = 0.0;
  double red128 = 0.0;
  for (double w : cfg.weights) {
    const loha::AggregateRow* cell = find_cell(rep, "train", "astar_tl", w);
    if (cell == nullptr) {
      std::printf("  w=%g: no aggregate cell\n", w);
      ok = false;
      continue;
    }
    std::printf("  w=%g: median reduction %.2f over %zu pairs (%zu limit-reached)\n", w,
                cell->median_reduction, cell->pairs, cell->limit_reached);
    if (w == 2.0) red2 = cell->median_reduction;
    if (w == 128.0) red128 = cell->median_reduction;
    if (w >= 8.0 && !(cell->median_reduction >= 2.0)) ok = false;
  }
  if (!(red128 >= red2)) ok = false;
  return ok;
}

// Train on collected car examples, check held-out loss and reductions with
// the learned heuristic on an unseen map.
bool criterion6() {
  using clock = std::chrono::steady_clock;
  std::vector<loha::GridMap> train_maps = {loha::generate_random_map(256, 256, 20, 1),
                                           loha::generate_random_map(256, 256, 20, 2),
                                           loha::generate_random_map(256, 256, 20, 3)};

  auto t0 = clock::now();
  loha::Dataset ds =
      loha::collect_dataset<loha::CarDomain>(train_maps, 900, 8.0, 4, 100, 42, 112000);
  double collect_s = std::chrono::duration<double>(clock::now() - t0).count();
  std::printf("  collected %zu examples in %.0f s\n", ds.examples.size(), collect_s);
  if (ds.examples.size() < 110000) return false;

  std::size_t n = ds.examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  loha::SplitMix64 rng(loha::derive_seed(42, 77));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
  loha::Dataset fit{4, {}, ds.provenance};
  loha::Dataset held{4, {}, ds.provenance};
  for (std::size_t i = 0; i < n; ++i)
    (i < 10000 ? held : fit).examples.push_back(ds.examples[order[i]]);
  if (fit.examples.size() < 100000) return false;

  t0 = clock::now();
  loha::TrainResult tr = loha::train(fit, 100, 32, 1e-3, 5, 8);
  double train_s = std::chrono::duration<double>(clock::now() - t0).count();
  double held_loss = loha::evaluate_loss(tr.model, held);
  std::printf("  trained %zu examples for 100 epochs in %.0f s, loss %.4f -> %.4f\n",
              fit.examples.size(), train_s, tr.loss_history.front(), tr.loss_history.back());
  std::printf("  held-out squared log loss %.4f (bound 0.10)\n", held_loss);
  bool ok = held_loss <= 0.10 && train_s <= 3600.0;

  loha::ExperimentConfig cfg;
  cfg.test_maps = {loha::generate_random_map(256, 256, 20, 9)};
  cfg.domain = "car";
  cfg.methods = {loha::Method::kWAstar, loha::Method::kLoha};
  cfg.weights = {8.0, 32.0, 128.0};
  cfg.radius = 4;
  cfg.seeds = {0, 1, 2};
  cfg.queries_per_map = 10;
  cfg.expansion_limit = 2000000;
  cfg.model = &tr.model;

  auto rows = loha::run_experiment(cfg);
  loha::Report rep = loha::aggregate(rows);
  for (double w : cfg.weights) {
    const loha::AggregateRow* cell = find_cell(rep, "test", "loha", w);
    if (cell == nullptr) {
      std::printf("  w=%g: no aggregate cell\n", w);
      ok = false;
      continue;
    }
    std::printf("  unseen map, w=%g: median reduction %.2f over %zu pairs (%zu limit-reached)\n",
                w, cell->median_reduction, cell->pairs, cell->limit_reached);
    if (!(cell->median_reduction >= 1.5)) ok = false;
  }
  return ok;
}

// Analytic gradients against central finite differences.
bool criterion7() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    loha::Model m = loha::make_model(2, 2, 1000 + i);
    loha::SplitMix64 rng(loha::derive_seed(55, i));
    loha::LocalInput input;
    input.radius = 2;
    for (int k = 0; k < 25; ++k) {
      input.obstacle.push_back(static_cast<double>(rng.next_below(2)));
      input.dh.push_back(rng.next_double() * 4.0 - 2.0);
    }
    for (double& v : input.invariant) v = rng.next_double();
    double target = rng.next_double() * 4.0;
    worst = std::max(worst, loha::gradient_check(m, input, target, 1e-4));
  }
  std::printf("  worst relative discrepancy %.3g over 10 models\n", worst);
  return worst < 1e-4;
}

// Larger windows must generalize no better than small ones on unseen maps.
bool criterion8() {
  int agree = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    loha::AblationConfig cfg;
    cfg.train_maps = {loha::generate_random_map(64, 64, 25, 100 + s),
                      loha::generate_random_map(64, 64, 25, 200 + s)};
    cfg.test_maps = {loha::generate_random_map(64, 64, 25, 300 + s),
                     loha::generate_random_map(64, 64, 25, 400 + s)};
    cfg.domain = "grid";
    cfg.radii = {2, 4, 6};
    cfg.queries_per_map = 60;
    cfg.weight = 8.0;
    cfg.cap = 100;
    cfg.seed = 500 + s;
    cfg.train_examples = 12000;
    cfg.test_examples = 3000;
    cfg.holdout_fraction = 0.2;
    cfg.epochs = 25;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-3;
    cfg.filters = 8;

    auto rows = loha::ablate_k(cfg);
    double loss2 = 0.0;
    double loss6 = 0.0;
    std::printf("  seed %llu:", static_cast<unsigned long long>(s));
    for (const loha::AblationRow& r : rows) {
      std::printf(" K=%d test %.4f", r.radius, r.test_loss);
      if (r.radius == 2) loss2 = r.test_loss;
      if (r.radius == 6) loss6 = r.test_loss;
    }
    bool holds = loss6 >= loss2;
    std::printf(" -> %s\n", holds ? "K=6 >= K=2" : "inverted");
    agree += holds ? 1 : 0;
  }
  std::printf("  trend holds on %d of 3 seeds\n", agree);
  return agree >= 2;
}

// Reruns reproduce counts bit-exactly; every format round-trips.
bool criterion9() {
  bool ok = true;

  std::vector<loha::GridMap> maps = {loha::generate_random_map(32, 32, 20, 11),
                                     loha::generate_random_map(32, 32, 20, 12)};
  auto small = loha::collect_domain_dataset("grid", maps, 30, 8.0, 2, 50, 13, 1500);
  auto trained = loha::train(small, 8, 16, 1e-3, 3, 2);

  loha::ExperimentConfig cfg;
  cfg.train_maps = {maps[0]};
  cfg.test_maps = {maps[1]};
  cfg.domain = "grid";
  cfg.methods = {loha::Method::kWAstar, loha::Method::kAstarTL, loha::Method::kLoha};
  cfg.weights = {2.0, 8.0};
  cfg.radius = 2;
  cfg.seeds = {0, 1};
  cfg.queries_per_map = 3;
  cfg.model = &trained.model;

  auto rows_a = loha::run_experiment(cfg);
  auto rows_b = loha::run_experiment(cfg);
  bool grid_same = rows_a.size() == rows_b.size();
  for (std::size_t i = 0; grid_same && i < rows_a.size(); ++i) {
    loha::ResultRow a = rows_a[i];
    loha::ResultRow b = rows_b[i];
    a.elapsed_s = b.elapsed_s = 0.0;
    grid_same = a == b;
  }
  std::printf("  grid rerun: %zu rows %s\n", rows_a.size(),
              grid_same ? "bit-exact" : "DIFFER");
  ok = ok && grid_same;

  loha::ExperimentConfig car_cfg;
  car_cfg.train_maps = {loha::generate_random_map(48, 48, 15, 8)};
  car_cfg.domain = "car";
  car_cfg.methods = {loha::Method::kWAstar, loha::Method::kAstarTL};
  car_cfg.weights = {8.0};
  car_cfg.radius = 3;
  car_cfg.local_cap = 100;
  car_cfg.seeds = {0};
  car_cfg.queries_per_map = 2;
  car_cfg.expansion_limit = 200000;
  auto car_a = loha::run_experiment(car_cfg);
  auto car_b = loha::run_experiment(car_cfg);
  bool car_same = car_a.size() == car_b.size();
  for (std::size_t i = 0; car_same && i < car_a.size(); ++i) {
    loha::ResultRow a = car_a[i];
    loha::ResultRow b = car_b[i];
    a.elapsed_s = b.elapsed_s = 0.0;
    car_same = a == b;
  }
  std::printf("  car rerun: %zu rows %s\n", car_a.size(), car_same ? "bit-exact" : "DIFFER");
  ok = ok && car_same;

  bool map_rt = loha::parse_map(loha::serialize_map(maps[0]), maps[0].name()) == maps[0];
  std::string alt =
      "type octile\nheight 2\nwidth 5\nmap\n.G.TW\nOS@..\n";
  loha::GridMap alt_map = loha::parse_map(alt, "alt");
  bool alt_rt = loha::parse_map(loha::serialize_map(alt_map), "alt") == alt_map &&
                !alt_map.is_blocked(1, 0) && alt_map.is_blocked(3, 0) && alt_map.is_blocked(0, 1);
  std::printf("  map round-trip: %s\n", map_rt && alt_rt ? "ok" : "FAILED");
  ok = ok && map_rt && alt_rt;

  std::ostringstream ds_out;
  loha::save_dataset(small, ds_out);
  std::istringstream ds_in(ds_out.str());
  loha::Dataset ds_back = loha::load_dataset(ds_in);
  std::ostringstream ds_again;
  loha::save_dataset(ds_back, ds_again);
  bool ds_rt = ds_back.radius == small.radius && ds_back.examples == small.examples &&
               ds_out.str() == ds_again.str();
  std::printf("  dataset round-trip: %zu examples %s\n", small.examples.size(),
              ds_rt ? "ok" : "FAILED");
  ok = ok && ds_rt;

  std::ostringstream m_out;
  loha::save_model(trained.model, m_out);
  std::istringstream m_in(m_out.str());
  loha::Model m_back = loha::load_model(m_in);
  bool model_rt = m_back == trained.model;
  std::printf("  model round-trip: %s\n", model_rt ? "ok" : "FAILED");
  ok = ok && model_rt;

  bool csv_rt = loha::rows_from_csv(loha::to_csv(rows_a)) == rows_a;
  std::printf("  csv round-trip: %s\n", csv_rt ? "ok" : "FAILED");
  ok = ok && csv_rt;

  return ok;
}

struct Criterion {
  int id;
  const char* name;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "optimal A* with exact local values", criterion1},
    {2, "focal suboptimality bound", criterion2},
    {3, "local values match the exhaustive oracle", criterion3},
    {4, "dead-end pocket regression", criterion4},
    {5, "exact local reductions at desk scale", criterion5},
    {6, "learned local quality", criterion6},
    {7, "gradient correctness", criterion7},
    {8, "window radius generalization trend", criterion8},
    {9, "determinism and format round-trips", criterion9},
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 9) {
      std::fprintf(stderr, "usage: %s [1..9]\n", argv[0]);
      return 2;
    }
  }

  bool all_ok = true;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      std::printf("  exception: %s\n", e.what());
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d (%s): %s [%.1f s]\n", c.id, c.name, ok ? "PASS" : "FAIL", s);
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
