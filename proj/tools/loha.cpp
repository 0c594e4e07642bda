#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loha/bench.hpp"

namespace fs = std::filesystem;

namespace {

int parse_int(const std::string& tok, const char* what) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw std::invalid_argument(std::string("bad ") + what + ": " + tok);
  return v;
}

std::uint64_t parse_u64(const std::string& tok, const char* what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw std::invalid_argument(std::string("bad ") + what + ": " + tok);
  return v;
}

double parse_double(const std::string& tok, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw std::invalid_argument(std::string("bad ") + what + ": " + tok);
  return v;
}

// --map paths plus --random W H PCT SEED recipes, in that order.
std::vector<loha::GridMap> load_maps(const std::vector<std::string>& paths,
                                     const std::vector<std::string>& random_specs) {
  std::vector<loha::GridMap> maps;
  for (const std::string& p : paths) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open map file: " + p);
    maps.push_back(loha::parse_map(in, fs::path(p).stem().string()));
  }
  if (random_specs.size() % 4 != 0)
    throw std::invalid_argument("--random takes four values: W H PCT SEED");
  for (std::size_t i = 0; i < random_specs.size(); i += 4) {
    int w = parse_int(random_specs[i], "--random width");
    int h = parse_int(random_specs[i + 1], "--random height");
    double pct = parse_double(random_specs[i + 2], "--random percent");
    std::uint64_t seed = parse_u64(random_specs[i + 3], "--random seed");
    maps.push_back(loha::generate_random_map(w, h, pct, seed));
  }
  return maps;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string number_str(double v) {
  std::string s;
  loha::detail::append_number(s, v);
  return s;
}

struct GenMapsOpts {
  std::vector<std::string> random;
  int count = 1;
  std::string out = ".";
};

void run_gen_maps(const GenMapsOpts& o) {
  if (o.random.empty())
    throw std::invalid_argument("gen-maps needs at least one --random W H PCT SEED recipe");
  if (o.count < 1) throw std::invalid_argument("--count must be >= 1");
  if (o.random.size() % 4 != 0)
    throw std::invalid_argument("--random takes four values: W H PCT SEED");
  fs::create_directories(o.out);
  for (std::size_t i = 0; i < o.random.size(); i += 4) {
    int w = parse_int(o.random[i], "--random width");
    int h = parse_int(o.random[i + 1], "--random height");
    double pct = parse_double(o.random[i + 2], "--random percent");
    std::uint64_t seed = parse_u64(o.random[i + 3], "--random seed");
    for (int k = 0; k < o.count; ++k) {
      loha::GridMap map = loha::generate_random_map(w, h, pct, seed + static_cast<std::uint64_t>(k));
      fs::path path = fs::path(o.out) / (map.name() + ".map");
      write_text_file(path, loha::serialize_map(map));
      std::cout << path.string() << "\n";
    }
  }
}

struct GenScenariosOpts {
  std::vector<std::string> maps;
  std::vector<std::string> random;
  std::string domain = "grid";
  int queries = 10;
  std::uint64_t seed = 0;
  double min_sep = -1.0;
  std::string out;
};

void run_gen_scenarios(const GenScenariosOpts& o) {
  auto maps = load_maps(o.maps, o.random);
  if (maps.size() != 1)
    throw std::invalid_argument("gen-scenarios needs exactly one map");
  if (o.queries < 1) throw std::invalid_argument("--queries must be >= 1");
  const loha::GridMap& map = maps[0];
  double min_sep = o.min_sep >= 0.0 ? o.min_sep : map.width() / 2.0;

  std::vector<std::string> warnings;
  std::string text;
  if (o.domain == "grid") {
    auto pairs = loha::generate_scenarios<loha::GridDomain>(
        map, static_cast<std::size_t>(o.queries), o.seed, min_sep, &warnings);
    for (const auto& [s, g] : pairs)
      text += std::to_string(s.x) + " " + std::to_string(s.y) + " " + std::to_string(g.x) + " " +
              std::to_string(g.y) + "\n";
  } else if (o.domain == "car") {
    auto pairs = loha::generate_scenarios<loha::CarDomain>(
        map, static_cast<std::size_t>(o.queries), o.seed, min_sep, &warnings);
    for (const auto& [s, g] : pairs)
      text += std::to_string(s.x2) + " " + std::to_string(s.y2) + " " + std::to_string(s.theta) +
              " " + std::to_string(s.v) + " " + std::to_string(g.x2) + " " +
              std::to_string(g.y2) + " " + std::to_string(g.theta) + " " + std::to_string(g.v) +
              "\n";
  } else {
    throw std::invalid_argument("unknown domain: " + o.domain);
  }
  print_warnings(warnings);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(o.out, text);
    std::cout << o.out << "\n";
  }
}

struct CollectOpts {
  std::vector<std::string> maps;
  std::vector<std::string> random;
  std::string domain = "grid";
  int radius = 4;
  int queries = 40;
  double weight = 8.0;
  std::uint64_t cap = 100;
  std::uint64_t seed = 0;
  std::size_t target = 100000;
  std::string out = "dataset.txt";
};

void run_collect(const CollectOpts& o) {
  auto maps = load_maps(o.maps, o.random);
  if (maps.empty()) throw std::invalid_argument("collect needs at least one map");
  std::vector<std::string> warnings;
  loha::Dataset ds = loha::collect_domain_dataset(o.domain, maps, o.queries, o.weight, o.radius,
                                                  o.cap, o.seed, o.target, &warnings);
  print_warnings(warnings);
  loha::save_dataset(ds, o.out);
  std::cout << "collected " << ds.examples.size() << " examples -> " << o.out << "\n";
}

struct TrainOpts {
  std::string data;
  int epochs = 100;
  int batch = 32;
  double lr = 1e-3;
  int filters = 8;
  std::uint64_t seed = 0;
  std::string out = "model.bin";
};

void run_train(const TrainOpts& o) {
  loha::Dataset ds = loha::load_dataset(o.data);
  loha::TrainResult tr = loha::train(ds, o.epochs, o.batch, o.lr, o.seed, o.filters);
  loha::save_model(tr.model, o.out);
  std::cout << "trained on " << ds.examples.size() << " examples, loss "
            << number_str(tr.loss_history.front()) << " -> " << number_str(tr.loss_history.back())
            << ", saved model -> " << o.out << "\n";
}

struct BenchOpts {
  std::vector<std::string> maps;
  std::vector<std::string> random;
  std::vector<std::string> test_maps;
  std::vector<std::string> test_random;
  std::string domain = "grid";
  std::vector<std::string> methods{"wastar", "astar_tl"};
  std::vector<double> weights{2.0, 8.0, 32.0, 128.0};
  int radius = 4;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int queries = 10;
  std::uint64_t limit = 2000000;
  std::uint64_t cap = 0;
  std::string model;
  double min_sep = -1.0;
  std::string out;
};

void run_bench(const BenchOpts& o) {
  loha::ExperimentConfig cfg;
  cfg.train_maps = load_maps(o.maps, o.random);
  cfg.test_maps = load_maps(o.test_maps, o.test_random);
  cfg.domain = o.domain;
  cfg.methods.clear();
  for (const std::string& m : o.methods) cfg.methods.push_back(loha::method_from(m));
  cfg.weights = o.weights;
  cfg.radius = o.radius;
  cfg.seeds = o.seeds;
  cfg.queries_per_map = o.queries;
  cfg.expansion_limit = o.limit;
  cfg.local_cap = o.cap;
  cfg.min_separation = o.min_sep;

  std::optional<loha::Model> model;
  if (!o.model.empty()) {
    model = loha::load_model(o.model);
    cfg.model = &*model;
  }

  std::vector<std::string> warnings;
  auto rows = loha::run_experiment(cfg, &warnings);
  print_warnings(warnings);
  loha::Report rep = loha::aggregate(rows);
  print_warnings(rep.warnings);
  std::string md = loha::report_markdown(rep);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text_file(fs::path(o.out) / "results.csv", loha::to_csv(rows));
    write_text_file(fs::path(o.out) / "report.md", md);
    std::cout << (fs::path(o.out) / "results.csv").string() << "\n"
              << (fs::path(o.out) / "report.md").string() << "\n";
  }
  std::cout << md;
}

struct AblateOpts {
  std::vector<std::string> maps;
  std::vector<std::string> random;
  std::vector<std::string> test_maps;
  std::vector<std::string> test_random;
  std::string domain = "grid";
  std::vector<int> radii{2, 4, 6};
  int queries = 50;
  double weight = 8.0;
  std::uint64_t cap = 100;
  std::uint64_t seed = 0;
  std::size_t target = 20000;
  std::size_t test_target = 4000;
  double holdout = 0.2;
  int epochs = 20;
  int batch = 32;
  double lr = 1e-3;
  int filters = 8;
  std::string out;
};

void run_ablate(const AblateOpts& o) {
  loha::AblationConfig cfg;
  cfg.train_maps = load_maps(o.maps, o.random);
  cfg.test_maps = load_maps(o.test_maps, o.test_random);
  cfg.domain = o.domain;
  cfg.radii = o.radii;
  cfg.queries_per_map = o.queries;
  cfg.weight = o.weight;
  cfg.cap = o.cap;
  cfg.seed = o.seed;
  cfg.train_examples = o.target;
  cfg.test_examples = o.test_target;
  cfg.holdout_fraction = o.holdout;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.filters = o.filters;

  std::vector<std::string> warnings;
  auto rows = loha::ablate_k(cfg, &warnings);
  print_warnings(warnings);
  std::string csv = "K,train_loss,test_loss\n";
  for (const loha::AblationRow& r : rows)
    csv += std::to_string(r.radius) + "," + number_str(r.train_loss) + "," +
           number_str(r.test_loss) + "\n";
  if (!o.out.empty()) {
    write_text_file(o.out, csv);
    std::cout << o.out << "\n";
  }
  std::cout << csv;
}

struct ReportOpts {
  std::string csv;
  std::string out;
};

void run_report(const ReportOpts& o) {
  auto rows = loha::rows_from_csv(read_text_file(o.csv));
  loha::Report rep = loha::aggregate(rows);
  print_warnings(rep.warnings);
  std::string md = loha::report_markdown(rep);
  if (!o.out.empty()) {
    write_text_file(o.out, md);
    std::cout << o.out << "\n";
  }
  std::cout << md;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-heuristic planning toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; flags override it");

  GenMapsOpts gm;
  CLI::App* gen_maps = app.add_subcommand("gen-maps", "Generate random maps as .map files");
  gen_maps->add_option("--random", gm.random, "W H PCT SEED recipe (repeatable)")->type_size(4);
  gen_maps->add_option("--count", gm.count, "Maps per recipe, consecutive seeds");
  gen_maps->add_option("--out", gm.out, "Output directory");
  gen_maps->callback([&] { run_gen_maps(gm); });

  GenScenariosOpts gs;
  CLI::App* gen_scen = app.add_subcommand("gen-scenarios", "Sample solvable start/goal pairs");
  gen_scen->add_option("--map", gs.maps, "Map file (repeatable)");
  gen_scen->add_option("--random", gs.random, "W H PCT SEED recipe")->type_size(4);
  gen_scen->add_option("--domain", gs.domain, "grid or car");
  gen_scen->add_option("--queries", gs.queries, "Pairs to sample");
  gen_scen->add_option("--seed", gs.seed, "Sampling seed");
  gen_scen->add_option("--min-sep", gs.min_sep, "Minimum start/goal separation");
  gen_scen->add_option("--out", gs.out, "Output file (default stdout)");
  gen_scen->callback([&] { run_gen_scenarios(gs); });

  CollectOpts co;
  CLI::App* collect = app.add_subcommand("collect", "Collect local-value training examples");
  collect->add_option("--map", co.maps, "Map file (repeatable)");
  collect->add_option("--random", co.random, "W H PCT SEED recipe (repeatable)")->type_size(4);
  collect->add_option("--domain", co.domain, "grid or car");
  collect->add_option("--K", co.radius, "Window radius");
  collect->add_option("--queries", co.queries, "Queries per map");
  collect->add_option("--weight", co.weight, "Collection search weight");
  collect->add_option("--cap", co.cap, "Local expansion cap");
  collect->add_option("--seed", co.seed, "Collection seed");
  collect->add_option("--target", co.target, "Stop after this many examples");
  collect->add_option("--out", co.out, "Dataset file");
  collect->callback([&] { run_collect(co); });

  TrainOpts tr;
  CLI::App* train = app.add_subcommand("train", "Train the local-value regressor");
  train->add_option("--data", tr.data, "Dataset file")->required();
  train->add_option("--epochs", tr.epochs, "Training epochs");
  train->add_option("--batch", tr.batch, "Batch size");
  train->add_option("--lr", tr.lr, "Learning rate");
  train->add_option("--filters", tr.filters, "Conv filters");
  train->add_option("--seed", tr.seed, "Init and shuffle seed");
  train->add_option("--out", tr.out, "Model file");
  train->callback([&] { run_train(tr); });

  BenchOpts be;
  CLI::App* bench = app.add_subcommand("bench", "Run the method grid and report reductions");
  bench->add_option("--map", be.maps, "Train-split map file (repeatable)");
  bench->add_option("--random", be.random, "Train-split W H PCT SEED recipe (repeatable)")
      ->type_size(4);
  bench->add_option("--test-map", be.test_maps, "Test-split map file (repeatable)");
  bench->add_option("--test-random", be.test_random, "Test-split W H PCT SEED recipe (repeatable)")
      ->type_size(4);
  bench->add_option("--domain", be.domain, "grid or car");
  bench->add_option("--methods", be.methods, "Comma list of wastar,astar_tl,loha")
      ->delimiter(',');
  bench->add_option("--weights", be.weights, "Comma list of suboptimality weights")
      ->delimiter(',');
  bench->add_option("--K", be.radius, "Window radius for astar_tl");
  bench->add_option("--seeds", be.seeds, "Comma list of scenario seeds")->delimiter(',');
  bench->add_option("--queries", be.queries, "Queries per map and seed");
  bench->add_option("--limit", be.limit, "Per-query expansion limit");
  bench->add_option("--cap", be.cap, "Local expansion cap for astar_tl (0 = exact)");
  bench->add_option("--model", be.model, "Model file for the loha method");
  bench->add_option("--min-sep", be.min_sep, "Minimum start/goal separation");
  bench->add_option("--out", be.out, "Output directory for results.csv and report.md");
  bench->callback([&] { run_bench(be); });

  AblateOpts ab;
  CLI::App* ablate = app.add_subcommand("ablate-k", "Train per window radius, report losses");
  ablate->add_option("--map", ab.maps, "Train-split map file (repeatable)");
  ablate->add_option("--random", ab.random, "Train-split W H PCT SEED recipe (repeatable)")
      ->type_size(4);
  ablate->add_option("--test-map", ab.test_maps, "Test-split map file (repeatable)");
  ablate->add_option("--test-random", ab.test_random,
                     "Test-split W H PCT SEED recipe (repeatable)")
      ->type_size(4);
  ablate->add_option("--domain", ab.domain, "grid or car");
  ablate->add_option("--K", ab.radii, "Window radii (repeatable or comma list)")->delimiter(',');
  ablate->add_option("--queries", ab.queries, "Collection queries per map");
  ablate->add_option("--weight", ab.weight, "Collection search weight");
  ablate->add_option("--cap", ab.cap, "Local expansion cap during collection");
  ablate->add_option("--seed", ab.seed, "Base seed");
  ablate->add_option("--target", ab.target, "Train examples per radius");
  ablate->add_option("--test-target", ab.test_target, "Test examples per radius");
  ablate->add_option("--holdout", ab.holdout, "Held-out fraction of the train dataset");
  ablate->add_option("--epochs", ab.epochs, "Training epochs");
  ablate->add_option("--batch", ab.batch, "Batch size");
  ablate->add_option("--lr", ab.lr, "Learning rate");
  ablate->add_option("--filters", ab.filters, "Conv filters");
  ablate->add_option("--out", ab.out, "Output csv file");
  ablate->callback([&] { run_ablate(ab); });

  ReportOpts re;
  CLI::App* report = app.add_subcommand("report", "Aggregate a results csv into markdown");
  report->add_option("--csv", re.csv, "Results csv file")->required();
  report->add_option("--out", re.out, "Output markdown file");
  report->callback([&] { run_report(re); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const loha::MapParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
