#include "shotlocker/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "first_error.hpp"
#include "json.hpp"
#include "shotlocker/error.hpp"
#include "shotlocker/hash.hpp"
#include "shotlocker/keyvalue.hpp"

namespace shotlocker {
namespace {

using nlohmann::json;

const char* kCsvHeader = "dataset,L1,L2,strategy,k,p,width,measure,normalize,standardize,seed,accuracy";

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::string flag(bool value) { return value ? "true" : "false"; }

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse, what + " is not a number: " + s);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse, what + " is not a non-negative integer: " + s);
  }
  return v;
}

bool parse_flag(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::parse, "expected true/false, got " + s);
}

std::string stage_error(RecordId query, const char* stage, const std::string& what) {
  return "query " + std::to_string(query) + ", stage " + stage + ": " + what;
}

RunMetrics describe_run(const ExperimentConfig& cfg, Scorer& scorer) {
  RunMetrics m;
  m.dataset = cfg.dataset_name;
  m.l1 = cfg.train.language;
  m.l2 = cfg.test.language;
  m.strategy = cfg.selection.strategy;
  m.k = cfg.selection.k;
  if (cfg.selection.strategy == Strategy::interval) {
    m.p = cfg.selection.interval.p;
    m.width = cfg.selection.interval.width;
  }
  m.measure = cfg.measure;
  m.stratified = cfg.selection.stratified;
  m.dedup = cfg.dedup;
  m.seeds = cfg.seeds;
  m.fingerprint = cfg.fingerprint();
  m.comparison_key = cfg.comparison_key();
  m.template_id = cfg.prompt_template.id;
  m.verbalizer_id = cfg.verbalizer.id();
  m.model_id = scorer.model_id();
  m.per_token_mean = cfg.per_token_mean;
  return m;
}

json run_to_json(const RunMetrics& m) {
  json j;
  j["dataset"] = m.dataset;
  j["l1"] = m.l1;
  j["l2"] = m.l2;
  j["cross_lingual"] = m.l1 != m.l2;
  j["strategy"] = to_string(m.strategy);
  j["k"] = m.k;
  j["p"] = m.p;
  j["width"] = m.width;
  j["measure"] = {{"kind", to_string(m.measure.kind)},
                  {"normalize", m.measure.normalize_first},
                  {"standardize", m.measure.standardize_first}};
  j["stratified"] = m.stratified;
  j["dedup"] = m.dedup;
  if (!m.dedup) j["watermark"] = "no-dedup ablation: train/test overlap was not filtered";
  j["seeds"] = m.seeds;
  j["per_run_accuracy"] = m.per_run_accuracy;
  j["n_queries"] = m.n_queries;
  j["mean"] = m.mean;
  j["std"] = m.std;
  j["fingerprint"] = m.fingerprint;
  j["comparison_key"] = m.comparison_key;
  j["template_id"] = m.template_id;
  j["verbalizer_id"] = m.verbalizer_id;
  j["model_id"] = m.model_id;
  j["length_normalization"] = m.per_token_mean ? "per_token_mean" : "none";
  return j;
}

RunMetrics run_from_json(const json& j) {
  RunMetrics m;
  m.dataset = j.at("dataset").get<std::string>();
  m.l1 = j.at("l1").get<std::string>();
  m.l2 = j.at("l2").get<std::string>();
  m.strategy = parse_strategy(j.at("strategy").get<std::string>());
  m.k = j.at("k").get<std::size_t>();
  m.p = j.at("p").get<double>();
  m.width = j.at("width").get<double>();
  m.measure.kind = parse_measure_kind(j.at("measure").at("kind").get<std::string>());
  m.measure.normalize_first = j.at("measure").at("normalize").get<bool>();
  m.measure.standardize_first = j.at("measure").at("standardize").get<bool>();
  m.stratified = j.at("stratified").get<bool>();
  m.dedup = j.at("dedup").get<bool>();
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.per_run_accuracy = j.at("per_run_accuracy").get<std::vector<double>>();
  m.n_queries = j.at("n_queries").get<std::size_t>();
  m.mean = j.at("mean").get<double>();
  m.std = j.at("std").get<double>();
  m.fingerprint = j.at("fingerprint").get<std::string>();
  m.comparison_key = j.at("comparison_key").get<std::string>();
  m.template_id = j.at("template_id").get<std::string>();
  m.verbalizer_id = j.at("verbalizer_id").get<std::string>();
  m.model_id = j.at("model_id").get<std::string>();
  m.per_token_mean = j.at("length_normalization").get<std::string>() == "per_token_mean";
  return m;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw Error(ErrorCode::invalid_argument, "config needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw Error(ErrorCode::invalid_argument, "config seeds must be distinct");
  }
  if (selection.strategy == Strategy::interval) selection.interval.validate();
  if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
  prompt_template.validate();
  scorer.validate();
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const auto doc = kv::Document::load(path);
  const auto base = path.parent_path();
  ExperimentConfig cfg;

  cfg.train.dataset = resolve(base, doc.require("train"));
  cfg.train.language = doc.require("train_lang");
  cfg.train.embeddings = resolve(base, doc.require("train_embeddings"));
  cfg.test.dataset = resolve(base, doc.require("test"));
  cfg.test.language = doc.require("test_lang");
  cfg.test.embeddings = resolve(base, doc.require("test_embeddings"));
  cfg.dataset_name = doc.get_or("dataset", cfg.train.dataset.stem().string());

  cfg.selection.strategy = parse_strategy(doc.get_or("strategy", "nearest"));
  const auto k = doc.get_int("k", 1);
  if (k < 0) throw Error(ErrorCode::parse, path.string() + ": k must be non-negative");
  cfg.selection.k = static_cast<std::size_t>(k);
  cfg.selection.interval.p = doc.get_double("p", 0.0);
  cfg.selection.interval.width = doc.get_double("width", 0.1);
  cfg.selection.stratified = doc.get_bool("stratified", true);

  cfg.measure.kind = parse_measure_kind(doc.get_or("measure", "cosine"));
  cfg.measure.normalize_first = doc.get_bool("normalize", false);
  cfg.measure.standardize_first = doc.get_bool("standardize", false);
  cfg.epsilon = doc.get_double("epsilon", Standardizer::kDefaultEpsilon);

  if (auto t = doc.get("template"); t && *t != "default") cfg.prompt_template = PromptTemplate::load(resolve(base, *t));
  if (auto i = doc.get("instruction")) cfg.instruction = *i;
  if (auto v = doc.get("verbalizer"); v && *v != "identity") cfg.verbalizer = Verbalizer::load(resolve(base, *v));

  const auto scorer = doc.get_or("scorer", "mock");
  if (scorer == "mock") {
    cfg.scorer.kind = ScorerKind::mock;
  } else if (scorer == "remote") {
    cfg.scorer.kind = ScorerKind::remote;
  } else {
    throw Error(ErrorCode::parse, path.string() + ": scorer must be mock or remote");
  }
  const auto mode = doc.get_or("mock_mode", "label-echo");
  if (mode == "label-echo") {
    cfg.scorer.mock_mode = MockMode::label_echo;
  } else if (mode == "hash") {
    cfg.scorer.mock_mode = MockMode::hash;
  } else {
    throw Error(ErrorCode::parse, path.string() + ": mock_mode must be label-echo or hash");
  }
  cfg.scorer.salt = static_cast<std::uint64_t>(doc.get_int("salt", 0));
  cfg.scorer.endpoint = doc.get_or("endpoint", "");
  cfg.scorer.model_id = doc.get_or("model", cfg.scorer.kind == ScorerKind::mock ? "mock" : "");
  cfg.scorer.timeout = std::chrono::milliseconds(doc.get_int("timeout_ms", 30000));
  cfg.scorer.max_concurrent = static_cast<std::size_t>(doc.get_int("max_concurrent", 1));
  cfg.scorer.max_attempts = static_cast<int>(doc.get_int("max_attempts", 4));
  cfg.scorer.backoff = std::chrono::milliseconds(doc.get_int("backoff_ms", 200));
  if (auto c = doc.get("cassette")) cfg.scorer.cassette = resolve(base, *c);
  const auto cassette_mode = doc.get_or("cassette_mode", "off");
  if (cassette_mode == "off") {
    cfg.scorer.cassette_mode = CassetteMode::off;
  } else if (cassette_mode == "record") {
    cfg.scorer.cassette_mode = CassetteMode::record;
  } else if (cassette_mode == "replay") {
    cfg.scorer.cassette_mode = CassetteMode::replay;
  } else {
    throw Error(ErrorCode::parse, path.string() + ": cassette_mode must be off, record or replay");
  }

  if (doc.has("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : doc.get_list("seeds")) cfg.seeds.push_back(parse_u64(s, "seed"));
  }
  cfg.dedup = doc.get_bool("dedup", true);
  const auto overlap = doc.get_or("overlap", "canonical");
  if (overlap == "canonical") {
    cfg.overlap_mode = OverlapMode::canonical;
  } else if (overlap == "exact") {
    cfg.overlap_mode = OverlapMode::exact;
  } else {
    throw Error(ErrorCode::parse, path.string() + ": overlap must be canonical or exact");
  }
  cfg.per_token_mean = doc.get_bool("per_token_mean", false);
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::canonical(bool include_strategy) const {
  std::ostringstream out;
  out << "dataset=" << dataset_name << '\n'
      << "train=" << train.dataset.filename().string() << '|' << train.language << '|'
      << train.embeddings.filename().string() << '\n'
      << "test=" << test.dataset.filename().string() << '|' << test.language << '|'
      << test.embeddings.filename().string() << '\n';
  if (include_strategy) {
    out << "strategy=" << to_string(selection.strategy) << '\n';
    if (selection.strategy == Strategy::interval) {
      out << "p=" << format_double(selection.interval.p) << '\n'
          << "width=" << format_double(selection.interval.width) << '\n';
    }
  }
  out << "k=" << selection.k << '\n'
      << "stratified=" << flag(selection.stratified) << '\n'
      << "measure=" << to_string(measure.kind) << '|' << flag(measure.normalize_first) << '|'
      << flag(measure.standardize_first) << '\n'
      << "epsilon=" << format_double(epsilon) << '\n'
      << "template=" << prompt_template.serialize()
      << "instruction=" << (instruction ? kv::quote(*instruction) : std::string("<manifest>")) << '\n'
      << "verbalizer=" << verbalizer.id() << '\n'
      << "scorer=" << (scorer.kind == ScorerKind::mock ? "mock" : "remote") << '|' << scorer.model_id;
  if (scorer.kind == ScorerKind::mock) {
    out << '|' << (scorer.mock_mode == MockMode::label_echo ? "label-echo" : "hash") << '|' << scorer.salt;
  }
  out << '\n' << "seeds=";
  for (auto s : seeds) out << s << ',';
  out << '\n'
      << "dedup=" << flag(dedup) << '|' << (overlap_mode == OverlapMode::canonical ? "canonical" : "exact") << '\n'
      << "per_token_mean=" << flag(per_token_mean) << '\n';
  return out.str();
}

std::string ExperimentConfig::fingerprint() const { return hex64(fnv1a64(canonical(true))); }
std::string ExperimentConfig::comparison_key() const { return hex64(fnv1a64(canonical(false))); }

PreparedData prepare_data(const ExperimentConfig& cfg) {
  auto train = load_dataset(cfg.train.dataset, cfg.train.language, Split::train);
  auto test = load_dataset(cfg.test.dataset, cfg.test.language, Split::test);
  auto train_emb = read_embeddings(cfg.train.embeddings);
  auto test_emb = read_embeddings(cfg.test.embeddings);
  if (train_emb.rows() != train.size() || test_emb.rows() != test.size()) {
    throw Error(ErrorCode::dimension_mismatch, "embedding row count does not match record count");
  }
  return prepare_data(cfg, train, test, train_emb, test_emb);
}

PreparedData prepare_data(const ExperimentConfig& cfg, const DatasetCollection& train,
                          const DatasetCollection& test, const EmbeddingMatrix& train_embeddings,
                          const EmbeddingMatrix& test_embeddings) {
  if (train_embeddings.dim() != test_embeddings.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "train and test embeddings differ in dimension");
  }
  OverlapReport report;
  std::optional<DatasetCollection> kept;
  if (cfg.dedup) {
    auto [filtered, r] = filter_overlap(train, test, cfg.overlap_mode);
    kept.emplace(std::move(filtered));
    report = std::move(r);
  } else {
    kept.emplace(train);
    report.train_size_before = train.size();
    report.normalization = "overlap filtering disabled";
  }

  std::vector<RecordId> train_ids, test_ids;
  for (const auto& r : kept->records()) train_ids.push_back(r.id);
  for (const auto& r : test.records()) test_ids.push_back(r.id);
  PreparedData data{std::move(*kept), test, std::move(report), train_embeddings.select(train_ids),
                    test_embeddings.select(test_ids), std::nullopt};
  if (cfg.measure.standardize_first) data.standardizer = fit_standardizer(data.train_embeddings, cfg.epsilon);
  return data;
}

std::pair<double, double> mean_and_population_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

RunMetrics run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto data = prepare_data(cfg);
  auto scorer = make_scorer(cfg.scorer, cfg.prompt_template);
  return run_experiment(cfg, data, *scorer);
}

RunMetrics run_experiment(const ExperimentConfig& cfg, const PreparedData& data, Scorer& scorer) {
  cfg.validate();
  const std::string instruction = cfg.instruction.value_or(data.train.task_instruction());
  const PreparedIndex index(data.train_embeddings, LabelIndex::from(data.train), cfg.measure,
                            data.standardizer);
  const auto& label_order = data.train.label_set();
  std::vector<std::string> continuations;
  for (const auto& label : label_order) continuations.push_back(verbalize_label(label, cfg.verbalizer));

  RunMetrics metrics = describe_run(cfg, scorer);
  const auto& queries = data.test.records();
  metrics.n_queries = queries.size();
  if (queries.empty()) throw Error(ErrorCode::empty_collection, "test split is empty");

  for (auto seed : cfg.seeds) {
    SelectionSpec selection = cfg.selection;
    selection.seed = seed;

    std::vector<ScoreRequest> requests(queries.size());
    const auto n = static_cast<std::ptrdiff_t>(queries.size());
    detail::FirstError error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto& query = queries[static_cast<std::size_t>(i)];
      const char* stage = "rank";
      try {
        auto ranked = index.rank(data.test_embeddings.row(static_cast<std::size_t>(i)), query.id);
        stage = "select";
        auto shots = select_shots(ranked, selection);
        stage = "prompt";
        auto prompt = build_prompt(instruction, shots, query, cfg.prompt_template, data.train, cfg.verbalizer);
        requests[static_cast<std::size_t>(i)] = {std::move(prompt.text), continuations, label_order};
      } catch (const std::exception& e) {
        try {
          throw Error(ErrorCode::run_aborted, "seed " + std::to_string(seed) + ", " +
                                                   stage_error(query.id, stage, e.what()));
        } catch (...) {
          error.capture(static_cast<std::size_t>(i));
        }
      }
    }
    error.rethrow();

    std::vector<std::vector<ScoredLabel>> scored;
    std::size_t failed = 0;
    try {
      scored = score_all(scorer, requests, cfg.scorer.max_concurrent, &failed);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::run_aborted, "seed " + std::to_string(seed) + ", " +
                                               stage_error(queries[failed].id, "score", e.what()));
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto scores = cfg.per_token_mean ? per_token_mean(std::move(scored[i])) : std::move(scored[i]);
      if (predict_label(scores, label_order) == queries[i].label) ++correct;
    }
    metrics.per_run_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(queries.size()));
  }
  std::tie(metrics.mean, metrics.std) = mean_and_population_std(metrics.per_run_accuracy);
  return metrics;
}

double delta_accuracy(const RunMetrics& nearest, const RunMetrics& farthest) {
  if (nearest.comparison_key != farthest.comparison_key) {
    throw Error(ErrorCode::fingerprint_mismatch,
                "runs differ in more than strategy (" + nearest.comparison_key + " vs " +
                    farthest.comparison_key + ")");
  }
  return nearest.mean - farthest.mean;
}

std::vector<KnnPoint> knn_sweep(const ExperimentConfig& cfg, std::span<const std::size_t> k_values) {
  auto data = prepare_data(cfg);
  return knn_sweep(data, cfg.measure, k_values);
}

std::vector<KnnPoint> knn_sweep(const PreparedData& data, const Measure& measure,
                                std::span<const std::size_t> k_values) {
  for (auto k : k_values) {
    if (k == 0 || k > data.train.size()) {
      throw Error(ErrorCode::invalid_argument,
                  "kNN k=" + std::to_string(k) + " outside [1, " + std::to_string(data.train.size()) + "]");
    }
  }
  const PreparedIndex index(data.train_embeddings, LabelIndex::from(data.train), measure, data.standardizer);
  const auto& queries = data.test.records();
  std::vector<std::size_t> correct(k_values.size(), 0);
  std::vector<std::vector<char>> hit(queries.size(), std::vector<char>(k_values.size(), 0));
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  detail::FirstError error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto q = static_cast<std::size_t>(i);
      auto ranked = index.rank(data.test_embeddings.row(q), queries[q].id);
      for (std::size_t j = 0; j < k_values.size(); ++j) hit[q][j] = knn_vote(ranked, k_values[j]) == queries[q].label;
    } catch (...) {
      error.capture(static_cast<std::size_t>(i));
    }
  }
  error.rethrow();
  std::vector<KnnPoint> out;
  for (std::size_t j = 0; j < k_values.size(); ++j) {
    std::size_t c = 0;
    for (const auto& h : hit) c += h[j] ? 1 : 0;
    out.push_back({k_values[j], queries.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(queries.size())});
  }
  return out;
}

std::vector<RunMetrics> interval_sweep(const ExperimentConfig& cfg, std::span<const double> p_grid) {
  auto data = prepare_data(cfg);
  auto scorer = make_scorer(cfg.scorer, cfg.prompt_template);
  return interval_sweep(cfg, data, *scorer, p_grid);
}

std::vector<RunMetrics> interval_sweep(const ExperimentConfig& cfg, const PreparedData& data, Scorer& scorer,
                                       std::span<const double> p_grid) {
  std::vector<RunMetrics> out;
  for (double p : p_grid) {
    auto point = cfg;
    point.selection.strategy = Strategy::interval;
    point.selection.interval.p = p;
    out.push_back(run_experiment(point, data, scorer));
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void export_results(std::span<const RunMetrics> metrics, const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  json runs = json::array();
  for (const auto& m : metrics) {
    if (m.per_run_accuracy.size() != m.seeds.size()) {
      throw Error(ErrorCode::invalid_argument, "run has " + std::to_string(m.seeds.size()) + " seeds but " +
                                                   std::to_string(m.per_run_accuracy.size()) + " accuracies");
    }
    for (std::size_t i = 0; i < m.seeds.size(); ++i) {
      csv << csv_field(m.dataset) << ',' << csv_field(m.l1) << ',' << csv_field(m.l2) << ','
          << to_string(m.strategy) << ',' << m.k << ',' << format_double(m.p) << ','
          << format_double(m.width) << ',' << to_string(m.measure.kind) << ','
          << flag(m.measure.normalize_first) << ',' << flag(m.measure.standardize_first) << ','
          << m.seeds[i] << ',' << format_double(m.per_run_accuracy[i]) << '\n';
    }
    runs.push_back(run_to_json(m));
  }
  json sidecar{{"software_version", kSoftwareVersion},
               {"std_over_runs", "population"},
               {"label_renormalization", false},
               {"runs", runs}};

  const auto write = [](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::io, "failed writing " + path.string());
  };
  write(csv_path, csv.str());
  write(sidecar_path(csv_path), sidecar.dump(2) + "\n");
}

std::vector<RunMetrics> import_results_csv(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::parse, csv_path.string() + ": unexpected header");
  }
  std::vector<RunMetrics> out;
  std::string previous_key;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 12) {
      throw Error(ErrorCode::parse, csv_path.string() + ":" + std::to_string(number) + ": expected 12 fields");
    }
    std::string key;
    for (std::size_t i = 0; i < 10; ++i) key += f[i] + '\x1f';
    if (out.empty() || key != previous_key) {
      RunMetrics m;
      m.dataset = f[0];
      m.l1 = f[1];
      m.l2 = f[2];
      m.strategy = parse_strategy(f[3]);
      m.k = parse_u64(f[4], "k");
      m.p = parse_double(f[5], "p");
      m.width = parse_double(f[6], "width");
      m.measure.kind = parse_measure_kind(f[7]);
      m.measure.normalize_first = parse_flag(f[8]);
      m.measure.standardize_first = parse_flag(f[9]);
      out.push_back(std::move(m));
      previous_key = key;
    }
    out.back().seeds.push_back(parse_u64(f[10], "seed"));
    out.back().per_run_accuracy.push_back(parse_double(f[11], "accuracy"));
  }
  for (auto& m : out) std::tie(m.mean, m.std) = mean_and_population_std(m.per_run_accuracy);
  return out;
}

std::vector<RunMetrics> load_results_json(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + json_path.string());
  try {
    auto doc = json::parse(in);
    std::vector<RunMetrics> out;
    for (const auto& run : doc.at("runs")) out.push_back(run_from_json(run));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, json_path.string() + ": " + e.what());
  }
}

}  // namespace shotlocker
