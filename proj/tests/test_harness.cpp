#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "shotlocker/error.hpp"
#include "shotlocker/harness.hpp"
#include "support/fixtures.hpp"

using namespace shotlocker;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

PreparedData prepared(const ExperimentConfig& cfg, const fixtures::ClusteredCorpus& c) {
  return prepare_data(cfg, c.train, c.test, c.train_embeddings, c.test_embeddings);
}

RunMetrics run_mock(const ExperimentConfig& cfg, const fixtures::ClusteredCorpus& c) {
  auto data = prepared(cfg, c);
  MockScorer scorer(cfg.scorer.mock_mode, cfg.scorer.salt, cfg.prompt_template, cfg.scorer.model_id);
  return run_experiment(cfg, data, scorer);
}

RunMetrics metrics_with(std::vector<double> accs, std::string key = "k") {
  RunMetrics m;
  m.dataset = "d";
  m.l1 = m.l2 = "en";
  m.k = 2;
  m.per_run_accuracy = std::move(accs);
  for (std::size_t i = 0; i < m.per_run_accuracy.size(); ++i) m.seeds.push_back(i + 1);
  std::tie(m.mean, m.std) = mean_and_population_std(m.per_run_accuracy);
  m.comparison_key = std::move(key);
  return m;
}

}  // namespace

TEST(RunExperiment, ClusteredFixtureNearestBeatsFarthest) {
  auto corpus = fixtures::clustered_corpus(4, 50, 10, 8, 10.0, 21);
  auto nearest_cfg = fixtures::mock_config(Strategy::nearest, 2, false);
  auto nearest = run_mock(nearest_cfg, corpus);
  EXPECT_EQ(nearest.mean, 1.0);
  EXPECT_EQ(nearest.std, 0.0);
  EXPECT_EQ(nearest.per_run_accuracy.size(), 5u);
  EXPECT_EQ(nearest.n_queries, 40u);

  auto farthest_cfg = fixtures::mock_config(Strategy::farthest, 2, false);
  auto farthest = run_mock(farthest_cfg, corpus);
  EXPECT_LE(farthest.mean, 0.5);
  EXPECT_GT(delta_accuracy(nearest, farthest), 0.0);

  auto random = run_mock(fixtures::mock_config(Strategy::random, 2, false), corpus);
  EXPECT_GE(nearest.mean, random.mean);
  EXPECT_EQ(random.per_run_accuracy.size(), 5u);
}

TEST(RunExperiment, StratifiedLabelEchoTiesEveryLabel) {
  // Each label contributes k shots, so every continuation scores the same and
  // the tie goes to the first label.
  auto corpus = fixtures::clustered_corpus(4, 20, 5, 8, 10.0, 3);
  auto m = run_mock(fixtures::mock_config(Strategy::nearest, 2, true), corpus);
  EXPECT_DOUBLE_EQ(m.mean, 0.25);
}

TEST(RunExperiment, MetadataAndFingerprints) {
  auto corpus = fixtures::clustered_corpus(3, 10, 4, 4, 10.0, 5);
  auto cfg = fixtures::mock_config(Strategy::nearest, 1, false);
  cfg.seeds = {7, 8};
  auto m = run_mock(cfg, corpus);
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{7, 8}));
  EXPECT_EQ(m.fingerprint, cfg.fingerprint());
  EXPECT_EQ(m.comparison_key, cfg.comparison_key());
  EXPECT_EQ(m.template_id, "default");
  EXPECT_EQ(m.verbalizer_id, "identity");
  EXPECT_EQ(m.model_id, "mock");
  auto other = cfg;
  other.selection.strategy = Strategy::farthest;
  EXPECT_NE(other.fingerprint(), cfg.fingerprint());
  EXPECT_EQ(other.comparison_key(), cfg.comparison_key());
  other.selection.k = 3;
  EXPECT_NE(other.comparison_key(), cfg.comparison_key());
  // Cassette plumbing does not change what is measured.
  auto cassette = cfg;
  cassette.scorer.cassette = "x.jsonl";
  cassette.scorer.cassette_mode = CassetteMode::record;
  EXPECT_EQ(cassette.fingerprint(), cfg.fingerprint());
}

TEST(RunExperiment, AbortsWithQueryAndStage) {
  auto corpus = fixtures::clustered_corpus(2, 3, 2, 4, 10.0, 5);
  auto cfg = fixtures::mock_config(Strategy::nearest, 5, true);
  try {
    run_mock(cfg, corpus);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::run_aborted);
    const std::string what = e.what();
    EXPECT_NE(what.find("select"), std::string::npos) << what;
    EXPECT_NE(what.find("query 0"), std::string::npos) << what;
  }
  cfg.seeds = {1, 1};
  EXPECT_THROW(run_mock(cfg, corpus), Error);
}

TEST(RunExperiment, OverlapFilteredBeforeRetrieval) {
  auto corpus = fixtures::clustered_corpus(2, 10, 3, 4, 10.0, 9);
  // Give a train record the same text as a test query.
  auto records = corpus.train.records();
  records[4].text = "  " + corpus.test.records()[1].text + "  ";
  fixtures::ClusteredCorpus dup{DatasetCollection(records, corpus.train.label_set(), corpus.train.task_instruction()),
                               corpus.test, corpus.train_embeddings, corpus.test_embeddings};
  auto cfg = fixtures::mock_config(Strategy::nearest, 1, false);
  auto data = prepared(cfg, dup);
  EXPECT_EQ(data.train.size(), 19u);
  EXPECT_EQ(data.overlap.removed_ids, std::vector<RecordId>{4});
  EXPECT_EQ(data.train_embeddings.rows(), 19u);
  EXPECT_EQ(data.train.find(4), nullptr);
  cfg.dedup = false;
  EXPECT_EQ(prepared(cfg, dup).train.size(), 20u);
}

TEST(Delta, ExamplesAndProperties) {
  auto a = metrics_with({0.8, 0.8});
  auto b = metrics_with({0.6, 0.6});
  EXPECT_EQ(delta_accuracy(a, a), 0.0);
  EXPECT_NEAR(delta_accuracy(a, b), 0.2, 1e-15);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    auto x = metrics_with({u(rng), u(rng), u(rng)});
    auto y = metrics_with({u(rng), u(rng), u(rng)});
    EXPECT_EQ(delta_accuracy(x, y), -delta_accuracy(y, x));
  }
  try {
    delta_accuracy(a, metrics_with({0.5}, "other"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::fingerprint_mismatch);
  }
}

TEST(MeanStd, Population) {
  const std::vector<double> v = {0.5, 0.7, 0.9};
  auto [m, s] = mean_and_population_std(v);
  EXPECT_NEAR(m, 0.7, 1e-15);
  EXPECT_NEAR(s, std::sqrt(0.08 / 3.0), 1e-15);
}

TEST(KnnSweep, SelfMatchGaussianAndOracle) {
  auto corpus = fixtures::clustered_corpus(3, 20, 5, 6, 2.0, 13);
  // Train doubles as test: k=1 recovers every label when dedup is off.
  fixtures::ClusteredCorpus self{corpus.train,
                                DatasetCollection(corpus.train.records(), corpus.train.label_set(),
                                                  corpus.train.task_instruction()),
                                corpus.train_embeddings, corpus.train_embeddings};
  auto cfg = fixtures::mock_config(Strategy::nearest, 1, true);
  cfg.dedup = false;
  const std::vector<std::size_t> one = {1};
  EXPECT_EQ(knn_sweep(prepared(cfg, self), cfg.measure, one)[0].accuracy, 1.0);

  auto pair = fixtures::gaussian_pair(500, 100, 8, 6.0, 17);
  const std::vector<std::size_t> ks = {1, 5, 15};
  auto points = knn_sweep(prepared(cfg, pair), cfg.measure, ks);
  EXPECT_EQ(points[1].k, 5u);
  EXPECT_GE(points[1].accuracy, 0.95);

  const std::vector<std::size_t> grid = {1, 2, 3, 7, 20};
  for (auto m : {Measure{MeasureKind::euclidean, false, false}, Measure{MeasureKind::cosine, false, false}}) {
    auto data = prepared(cfg, corpus);
    auto sweep = knn_sweep(data, m, grid);
    LabelIndex labels = LabelIndex::from(data.train);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::size_t correct = 0;
      for (std::size_t q = 0; q < data.test.size(); ++q) {
        std::vector<double> query(data.test_embeddings.row(q).begin(), data.test_embeddings.row(q).end());
        auto ranked = fixtures::oracle::rank(query, data.train_embeddings, labels, m.kind, false);
        if (fixtures::oracle::majority_vote(ranked, labels, grid[j]) == data.test.records()[q].label) ++correct;
      }
      EXPECT_EQ(sweep[j].accuracy, static_cast<double>(correct) / static_cast<double>(data.test.size()));
    }
  }
  const std::vector<std::size_t> too_big = {61};
  EXPECT_THROW(knn_sweep(prepared(cfg, corpus), cfg.measure, too_big), Error);
}

TEST(IntervalSweep, EmitsOneRunPerP) {
  auto corpus = fixtures::clustered_corpus(4, 20, 5, 8, 10.0, 2);
  auto cfg = fixtures::mock_config(Strategy::interval, 1, false);
  cfg.selection.interval.width = 0.25;
  cfg.seeds = {1, 2};
  auto data = prepared(cfg, corpus);
  MockScorer scorer(MockMode::label_echo, 0);
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75};
  auto runs = interval_sweep(cfg, data, scorer, grid);
  ASSERT_EQ(runs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(runs[i].p, grid[i]);
    EXPECT_EQ(runs[i].width, 0.25);
    EXPECT_EQ(runs[i].strategy, Strategy::interval);
  }
  EXPECT_EQ(runs[0].mean, 1.0);
  EXPECT_GE(runs[0].mean, runs[3].mean);
}

TEST(Export, HeaderOnlyRowsAndRoundTrip) {
  auto dir = fixtures::scratch_dir("export");
  export_results({}, dir / "empty.csv");
  EXPECT_EQ(slurp(dir / "empty.csv"), "dataset,L1,L2,strategy,k,p,width,measure,normalize,standardize,seed,accuracy\n");

  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> correct(0, 97);
  std::vector<RunMetrics> runs;
  for (int r = 0; r < 3; ++r) {
    std::vector<double> accs;
    for (int s = 0; s < 5; ++s) accs.push_back(correct(rng) / 97.0);
    auto m = metrics_with(accs);
    m.dataset = "snips, \"v2\"";
    m.strategy = r == 0 ? Strategy::nearest : Strategy::interval;
    m.p = 0.1 * r;
    m.width = 1.0 / 3.0;
    m.measure = {MeasureKind::cosine, r == 1, r == 2};
    runs.push_back(m);
  }
  export_results({runs.data(), 1}, dir / "one.csv");
  std::ifstream one(dir / "one.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(one, line);) ++lines;
  EXPECT_EQ(lines, 6u);

  export_results(runs, dir / "all.csv");
  auto back = import_results_csv(dir / "all.csv");
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(back[i].dataset, runs[i].dataset);
    EXPECT_EQ(back[i].strategy, runs[i].strategy);
    EXPECT_EQ(back[i].p, runs[i].p);
    EXPECT_EQ(back[i].width, runs[i].width);
    EXPECT_EQ(back[i].measure.normalize_first, runs[i].measure.normalize_first);
    EXPECT_EQ(back[i].seeds, runs[i].seeds);
    EXPECT_NEAR(back[i].mean, runs[i].mean, 1e-12);
    EXPECT_NEAR(back[i].std, runs[i].std, 1e-12);
  }
  auto from_json = load_results_json(sidecar_path(dir / "all.csv"));
  ASSERT_EQ(from_json.size(), 3u);
  EXPECT_EQ(from_json[2].per_run_accuracy, runs[2].per_run_accuracy);

  auto sidecar = nlohmann::json::parse(slurp(dir / "all.json"));
  EXPECT_EQ(sidecar["software_version"], kSoftwareVersion);
  EXPECT_EQ(sidecar["std_over_runs"], "population");

  const auto first_csv = slurp(dir / "all.csv"), first_json = slurp(dir / "all.json");
  export_results(runs, dir / "all.csv");
  EXPECT_EQ(slurp(dir / "all.csv"), first_csv);
  EXPECT_EQ(slurp(dir / "all.json"), first_json);

  auto bad = runs[0];
  bad.seeds.pop_back();
  EXPECT_THROW(export_results({&bad, 1}, dir / "bad.csv"), Error);
  EXPECT_THROW(export_results(runs, dir / "missing" / "x.csv"), Error);
}

TEST(Config, LoadFromFile) {
  auto corpus = fixtures::clustered_corpus(2, 4, 2, 3, 10.0, 1);
  auto dir = fixtures::scratch_dir("config");
  auto path = fixtures::write_corpus(corpus, dir,
                                    "strategy = interval\nk = 1\np = 0.25\nwidth = 0.5\nstratified = false\n"
                                    "measure = cosine\nnormalize = true\nstandardize = true\nepsilon = 1e-6\n"
                                    "seeds = 4, 5\ndedup = false\noverlap = exact\nper_token_mean = true\n"
                                    "instruction = \"pick one\\nlabel\"\nmock_mode = hash\nsalt = 9\n");
  auto cfg = ExperimentConfig::load(path);
  EXPECT_EQ(cfg.dataset_name, "synthetic");
  EXPECT_EQ(cfg.train.dataset, dir / "train.tsv");
  EXPECT_EQ(cfg.test.embeddings, dir / "test.slem");
  EXPECT_EQ(cfg.selection.strategy, Strategy::interval);
  EXPECT_EQ(cfg.selection.k, 1u);
  EXPECT_EQ(cfg.selection.interval.p, 0.25);
  EXPECT_EQ(cfg.selection.interval.width, 0.5);
  EXPECT_FALSE(cfg.selection.stratified);
  EXPECT_EQ(cfg.measure.kind, MeasureKind::cosine);
  EXPECT_TRUE(cfg.measure.normalize_first);
  EXPECT_TRUE(cfg.measure.standardize_first);
  EXPECT_EQ(cfg.epsilon, 1e-6);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_FALSE(cfg.dedup);
  EXPECT_EQ(cfg.overlap_mode, OverlapMode::exact);
  EXPECT_TRUE(cfg.per_token_mean);
  EXPECT_EQ(cfg.instruction, std::optional<std::string>("pick one\nlabel"));
  EXPECT_EQ(cfg.scorer.mock_mode, MockMode::hash);
  EXPECT_EQ(cfg.scorer.salt, 9u);
  EXPECT_FALSE(cfg.cross_lingual());

  auto data = prepare_data(cfg);
  EXPECT_EQ(data.train.size(), 8u);
  EXPECT_TRUE(data.standardizer.has_value());
  auto m = run_experiment(cfg);
  EXPECT_EQ(m.per_run_accuracy.size(), 2u);

  std::ofstream(dir / "bad.cfg") << "dataset = x\nscorer = telepathy\n";
  EXPECT_THROW(ExperimentConfig::load(dir / "bad.cfg"), Error);
}
