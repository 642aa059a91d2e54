// shotlocker: few-shot example retrieval and in-context evaluation CLI.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shotlocker/corpus.hpp"
#include "shotlocker/error.hpp"
#include "shotlocker/harness.hpp"
#include "shotlocker/keyvalue.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shotlocker;

namespace {

struct MeasureFlags {
  std::optional<std::string> kind;
  bool normalize = false;
  bool standardize = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--measure", kind, "cosine | euclidean")->check(CLI::IsMember({"cosine", "euclidean"}));
    cmd->add_flag("--normalize", normalize, "L2-normalize embeddings before measuring");
    cmd->add_flag("--standardize", standardize, "standardize dimensions with train statistics");
  }

  void apply(ExperimentConfig& cfg) const {
    if (kind) cfg.measure.kind = parse_measure_kind(*kind);
    if (normalize) cfg.measure.normalize_first = true;
    if (standardize) cfg.measure.standardize_first = true;
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : kv::split_list(text)) seeds.push_back(std::stoull(s));
  return seeds;
}

template <typename T>
std::vector<T> parse_grid(const std::string& text) {
  std::vector<T> out;
  for (const auto& s : kv::split_list(text)) {
    if constexpr (std::is_floating_point_v<T>) {
      out.push_back(std::stod(s));
    } else {
      out.push_back(static_cast<T>(std::stoull(s)));
    }
  }
  return out;
}

void print_summary(const RunMetrics& m) {
  std::cout << m.dataset << " " << m.l1 << "->" << m.l2 << " " << to_string(m.strategy) << " k=" << m.k;
  if (m.strategy == Strategy::interval) std::cout << " p=" << format_double(m.p) << " width=" << format_double(m.width);
  std::cout << " mean=" << format_double(m.mean) << " std=" << format_double(m.std) << " n=" << m.n_queries
            << (m.dedup ? "" : " [no-dedup]") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shotlocker: semantic few-shot example retrieval and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kSoftwareVersion);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate train/test files and write normalized copies");
  std::string train_file, test_file, lang, test_lang, out_dir;
  ingest->add_option("--train", train_file, "train records (text<TAB>label)")->required();
  ingest->add_option("--test", test_file, "test records (text<TAB>label)")->required();
  ingest->add_option("--lang", lang, "language of the train file (and test unless --test-lang)")->required();
  ingest->add_option("--test-lang", test_lang, "language of the test file");
  ingest->add_option("--out", out_dir, "output directory")->required();

  // dedup
  auto* dedup = app.add_subcommand("dedup", "report train/test overlap");
  std::string report_path;
  bool exact = false;
  dedup->add_option("--train", train_file)->required();
  dedup->add_option("--test", test_file)->required();
  dedup->add_option("--lang", lang, "language tag recorded on the records");
  dedup->add_option("--report", report_path, "overlap report JSON path")->required();
  dedup->add_flag("--exact", exact, "byte-exact matching instead of canonicalized text");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "print the shot set selected for one test query");
  std::string config_path;
  RecordId query_id = 0;
  std::optional<std::string> strategy;
  std::optional<std::size_t> k;
  std::optional<double> p, width;
  std::uint64_t seed = 0;
  bool global = false;
  MeasureFlags measure_flags;
  retrieve->add_option("--config", config_path, "experiment config naming the data")->required();
  retrieve->add_option("--query-id", query_id, "test record id")->required();
  retrieve->add_option("--strategy", strategy)->check(CLI::IsMember({"nearest", "farthest", "random", "interval"}));
  retrieve->add_option("--k", k, "shots per label");
  retrieve->add_option("--p", p, "interval lower edge (rank fraction)");
  retrieve->add_option("--width", width, "interval width (rank fraction)");
  retrieve->add_option("--seed", seed);
  retrieve->add_flag("--global", global, "select k*|L| shots from the global ranking instead of per label");
  measure_flags.add_to(retrieve);

  // knn
  auto* knn = app.add_subcommand("knn", "kNN baseline predictions over the test split");
  std::size_t knn_k = 1;
  knn->add_option("--config", config_path)->required();
  knn->add_option("--k", knn_k)->required();
  measure_flags.add_to(knn);

  // run
  auto* run = app.add_subcommand("run", "run a full in-context experiment");
  std::string seeds_text;
  bool no_dedup = false;
  out_dir = ".";
  run->add_option("--config", config_path)->required();
  run->add_option("--seeds", seeds_text, "comma-separated seeds (overrides config)");
  run->add_option("--out", out_dir, "directory for results.csv / results.json");
  run->add_flag("--no-dedup", no_dedup, "skip overlap filtering (ablation; watermarked)");

  // sweep-interval
  auto* sweep = app.add_subcommand("sweep-interval", "run the interval strategy over a grid of p");
  std::string p_grid;
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--p-grid", p_grid, "comma-separated p values")->required();
  sweep->add_option("--width", width);
  sweep->add_option("--seeds", seeds_text);
  sweep->add_option("--out", out_dir);

  // knn-sweep
  auto* knn_sweep_cmd = app.add_subcommand("knn-sweep", "kNN accuracy over a grid of k");
  std::string k_grid;
  knn_sweep_cmd->add_option("--config", config_path)->required();
  knn_sweep_cmd->add_option("--k-grid", k_grid, "comma-separated k values")->required();
  measure_flags.add_to(knn_sweep_cmd);

  // delta
  auto* delta = app.add_subcommand("delta", "nearest minus farthest mean accuracy");
  std::string run_a, run_b;
  delta->add_option("--a", run_a, "results JSON of the nearest run")->required();
  delta->add_option("--b", run_b, "results JSON of the farthest run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto train = load_dataset(train_file, lang, Split::train);
      auto test = load_dataset(test_file, test_lang.empty() ? lang : test_lang, Split::test);
      fs::create_directories(out_dir);
      store_dataset(train, fs::path(out_dir) / "train.tsv");
      store_dataset(test, fs::path(out_dir) / "test.tsv");
      const auto [filtered, report] = filter_overlap(train, test);
      std::ofstream(fs::path(out_dir) / "overlap.json") << to_json(report) << "\n";
      std::cout << "train " << train.size() << " records, test " << test.size() << " records, "
                << report.removed_ids.size() << " train records overlap test (rate "
                << format_double(report.overlap_rate) << ")\n";
    } else if (*dedup) {
      const auto mode = exact ? OverlapMode::exact : OverlapMode::canonical;
      auto train = load_dataset(train_file, lang, Split::train);
      auto test = load_dataset(test_file, lang, Split::test);
      const auto [filtered, report] = filter_overlap(train, test, mode);
      std::ofstream out(report_path);
      if (!out) throw Error(ErrorCode::io, "cannot write " + report_path);
      out << to_json(report) << "\n";
      std::cout << "removed " << report.removed_ids.size() << " of " << report.train_size_before
                << " train records, overlap rate " << format_double(report.overlap_rate) << "\n";
    } else if (*retrieve) {
      auto cfg = ExperimentConfig::load(config_path);
      measure_flags.apply(cfg);
      if (strategy) cfg.selection.strategy = parse_strategy(*strategy);
      if (k) cfg.selection.k = *k;
      if (p) cfg.selection.interval.p = *p;
      if (width) cfg.selection.interval.width = *width;
      if (global) cfg.selection.stratified = false;
      cfg.selection.seed = seed;
      auto data = prepare_data(cfg);
      const DatasetRecord* query = data.test.find(query_id);
      if (query == nullptr) throw Error(ErrorCode::unresolved_id, "no test record " + std::to_string(query_id));
      const PreparedIndex index(data.train_embeddings, LabelIndex::from(data.train), cfg.measure, data.standardizer);
      const auto row = data.test_embeddings.position_of(query_id);
      auto shots = select_shots(index.rank(data.test_embeddings.row(row), query_id), cfg.selection);

      json groups = json::array();
      for (const auto& g : shots.groups) {
        json items = json::array();
        for (const auto& s : g.shots) {
          const auto* r = data.train.find(s.id);
          items.push_back({{"id", s.id}, {"text", r->text}, {"label", r->label}, {"distance", s.distance}});
        }
        groups.push_back({{"label", g.label}, {"shots", items}});
      }
      json out{{"query", {{"id", query->id}, {"text", query->text}, {"label", query->label}}},
               {"strategy", to_string(shots.strategy)},
               {"k", shots.k},
               {"stratified", shots.stratified},
               {"measure", {{"kind", to_string(cfg.measure.kind)},
                            {"normalize", cfg.measure.normalize_first},
                            {"standardize", cfg.measure.standardize_first}}},
               {"groups", groups}};
      if (shots.strategy == Strategy::interval) {
        out["p"] = cfg.selection.interval.p;
        out["width"] = cfg.selection.interval.width;
      }
      if (shots.strategy == Strategy::random || shots.strategy == Strategy::interval) out["seed"] = seed;
      std::cout << out.dump(2) << "\n";
    } else if (*knn) {
      auto cfg = ExperimentConfig::load(config_path);
      measure_flags.apply(cfg);
      auto data = prepare_data(cfg);
      const PreparedIndex index(data.train_embeddings, LabelIndex::from(data.train), cfg.measure, data.standardizer);
      auto predicted = knn_classify_batch(data.test_embeddings, index, knn_k);
      json rows = json::array();
      std::size_t correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto& q = data.test.records()[i];
        correct += predicted[i] == q.label ? 1 : 0;
        rows.push_back({{"id", q.id}, {"gold", q.label}, {"predicted", predicted[i]}});
      }
      const double accuracy = predicted.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted.size());
      std::cout << json{{"k", knn_k}, {"predictions", rows}, {"accuracy", accuracy}}.dump(2) << "\n";
    } else if (*run) {
      auto cfg = ExperimentConfig::load(config_path);
      if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
      if (no_dedup) cfg.dedup = false;
      auto metrics = run_experiment(cfg);
      fs::create_directories(out_dir);
      std::vector<RunMetrics> all{metrics};
      export_results(all, fs::path(out_dir) / "results.csv");
      print_summary(metrics);
    } else if (*sweep) {
      auto cfg = ExperimentConfig::load(config_path);
      if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
      if (width) cfg.selection.interval.width = *width;
      auto grid = parse_grid<double>(p_grid);
      auto metrics = interval_sweep(cfg, grid);
      fs::create_directories(out_dir);
      export_results(metrics, fs::path(out_dir) / "interval.csv");
      std::cout << "p,width,mean,std\n";
      for (const auto& m : metrics) {
        std::cout << format_double(m.p) << "," << format_double(m.width) << "," << format_double(m.mean) << ","
                  << format_double(m.std) << "\n";
      }
    } else if (*knn_sweep_cmd) {
      auto cfg = ExperimentConfig::load(config_path);
      measure_flags.apply(cfg);
      auto grid = parse_grid<std::size_t>(k_grid);
      std::cout << "k,accuracy\n";
      for (const auto& point : knn_sweep(cfg, grid)) std::cout << point.k << "," << format_double(point.accuracy) << "\n";
    } else if (*delta) {
      auto a = load_results_json(run_a);
      auto b = load_results_json(run_b);
      if (a.empty() || b.empty()) throw Error(ErrorCode::parse, "results file holds no runs");
      std::cout << format_double(delta_accuracy(a.front(), b.front())) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
