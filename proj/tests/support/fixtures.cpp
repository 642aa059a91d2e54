#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unistd.h>

namespace shotlocker::fixtures {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t dim, double scale) {
  std::vector<double> values;
  for (std::size_t i = 0; i < rows; ++i) {
    auto v = random_vector(rng, dim, scale);
    values.insert(values.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix::with_sequential_ids(dim, std::move(values));
}

LabelIndex random_labels(std::mt19937_64& rng, const EmbeddingMatrix& m, std::size_t n_labels) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < n_labels; ++l) names.push_back("label" + std::to_string(l));
  std::unordered_map<RecordId, std::size_t> of;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    // First n_labels rows cover every label once.
    of[m.ids()[i]] = i < n_labels ? i : static_cast<std::size_t>(rng() % n_labels);
  }
  return LabelIndex(names, of);
}

namespace oracle {

double euclidean(const std::vector<double>& u, const std::vector<double>& v) {
  long double sum = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    long double d = static_cast<long double>(u[i]) - v[i];
    sum += d * d;
  }
  return static_cast<double>(std::sqrt(sum));
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) uv += static_cast<long double>(u[i]) * v[i];
  for (double x : u) uu += static_cast<long double>(x) * x;
  for (double x : v) vv += static_cast<long double>(x) * x;
  return static_cast<double>(1.0L - uv / (std::sqrt(uu) * std::sqrt(vv)));
}

std::vector<double> mean_pool(const std::vector<std::vector<double>>& rows) {
  std::vector<double> out;
  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    long double sum = 0;
    for (const auto& r : rows) sum += r[j];
    out.push_back(static_cast<double>(sum / rows.size()));
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& v) {
  long double ss = 0;
  for (double x : v) ss += static_cast<long double>(x) * x;
  const long double norm = std::sqrt(ss);
  std::vector<double> out;
  for (double x : v) out.push_back(static_cast<double>(x / norm));
  return out;
}

void moments(const EmbeddingMatrix& m, std::vector<double>& mean, std::vector<double>& std) {
  mean.assign(m.dim(), 0.0);
  std.assign(m.dim(), 0.0);
  for (std::size_t j = 0; j < m.dim(); ++j) {
    long double sum = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) sum += m.values()[i * m.dim() + j];
    const long double mu = sum / m.rows();
    long double ss = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      long double d = m.values()[i * m.dim() + j] - mu;
      ss += d * d;
    }
    mean[j] = static_cast<double>(mu);
    std[j] = static_cast<double>(std::sqrt(ss / (m.rows() - 1)));
  }
}

std::vector<Ranked> rank(const std::vector<double>& query, const EmbeddingMatrix& m,
                         const LabelIndex& labels, MeasureKind kind, bool normalize_first) {
  std::vector<Ranked> out;
  auto q = normalize_first ? normalize(query) : query;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.row(i).begin(), m.row(i).end());
    if (normalize_first) row = normalize(row);
    const double d = kind == MeasureKind::euclidean ? euclidean(q, row) : cosine(q, row);
    out.push_back({m.ids()[i], d, labels.label_of(m.ids()[i])});
  }
  std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    return std::tie(a.distance, a.id) < std::tie(b.distance, b.id);
  });
  return out;
}

std::vector<std::vector<Ranked>> per_label(const std::vector<Ranked>& ranked, std::size_t n_labels) {
  std::vector<std::vector<Ranked>> out(n_labels);
  for (std::size_t l = 0; l < n_labels; ++l) {
    for (const auto& r : ranked) {
      if (r.label == l) out[l].push_back(r);
    }
  }
  return out;
}

std::string majority_vote(const std::vector<Ranked>& ranked, const LabelIndex& labels, std::size_t k) {
  std::map<std::size_t, std::pair<int, long double>> tally;
  for (std::size_t i = 0; i < k; ++i) {
    tally[ranked[i].label].first += 1;
    tally[ranked[i].label].second += ranked[i].distance;
  }
  std::size_t best = tally.begin()->first;
  for (const auto& [label, t] : tally) {
    const auto& b = tally[best];
    if (t.first > b.first || (t.first == b.first && t.second < b.second)) best = label;
  }
  return labels.name(best);
}

}  // namespace oracle

namespace {

std::vector<std::string> label_names(std::size_t n) {
  static const std::vector<std::string> kNames{"alarm", "music", "timer", "weather", "reminder", "news"};
  std::vector<std::string> out;
  for (std::size_t l = 0; l < n; ++l) out.push_back(l < kNames.size() ? kNames[l] : "intent" + std::to_string(l));
  return out;
}

}  // namespace

ClusteredCorpus clustered_corpus(std::size_t n_labels, std::size_t train_per_label,
                                 std::size_t test_per_label, std::size_t dim, double separation,
                                 std::uint64_t seed, const std::string& language) {
  std::mt19937_64 rng(seed);
  const auto names = label_names(n_labels);
  auto make = [&](std::size_t per_label, Split split, std::vector<DatasetRecord>& records,
                  std::vector<double>& values) {
    for (std::size_t i = 0; i < per_label; ++i) {
      for (std::size_t l = 0; l < n_labels; ++l) {
        auto v = random_vector(rng, dim);
        v[l % dim] += separation;
        values.insert(values.end(), v.begin(), v.end());
        const std::string kind = split == Split::train ? "train" : "query";
        records.push_back({records.size(), kind + " utterance " + names[l] + " " + std::to_string(i),
                           names[l], language, split});
      }
    }
  };
  std::vector<DatasetRecord> train, test;
  std::vector<double> train_values, test_values;
  make(train_per_label, Split::train, train, train_values);
  make(test_per_label, Split::test, test, test_values);
  const std::string instruction = "classify an intent from an utterance";
  return {DatasetCollection(std::move(train), names, instruction),
          DatasetCollection(std::move(test), names, instruction),
          EmbeddingMatrix::with_sequential_ids(dim, std::move(train_values)),
          EmbeddingMatrix::with_sequential_ids(dim, std::move(test_values))};
}

ClusteredCorpus gaussian_pair(std::size_t train_total, std::size_t test_total, std::size_t dim,
                              double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> names{"negative", "positive"};
  auto make = [&](std::size_t total, Split split, std::vector<DatasetRecord>& records,
                  std::vector<double>& values) {
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t l = i % 2;
      auto v = random_vector(rng, dim);
      v[0] += l == 0 ? -separation / 2 : separation / 2;
      values.insert(values.end(), v.begin(), v.end());
      records.push_back({i, (split == Split::train ? "train " : "test ") + std::to_string(i), names[l], "en", split});
    }
  };
  std::vector<DatasetRecord> train, test;
  std::vector<double> train_values, test_values;
  make(train_total, Split::train, train, train_values);
  make(test_total, Split::test, test, test_values);
  const std::string instruction = "classify a sentiment from an utterance";
  return {DatasetCollection(std::move(train), names, instruction),
          DatasetCollection(std::move(test), names, instruction),
          EmbeddingMatrix::with_sequential_ids(dim, std::move(train_values)),
          EmbeddingMatrix::with_sequential_ids(dim, std::move(test_values))};
}

std::filesystem::path write_corpus(const ClusteredCorpus& corpus, const std::filesystem::path& dir,
                                   const std::string& extra_config) {
  std::filesystem::create_directories(dir);
  store_dataset(corpus.train, dir / "train.tsv");
  store_dataset(corpus.test, dir / "test.tsv");
  write_embeddings(corpus.train_embeddings, dir / "train.slem");
  write_embeddings(corpus.test_embeddings, dir / "test.slem");
  const auto config = dir / "exp.cfg";
  std::ofstream out(config);
  out << "dataset = synthetic\n"
      << "train = train.tsv\n"
      << "train_lang = " << corpus.train.records().front().language << "\n"
      << "train_embeddings = train.slem\n"
      << "test = test.tsv\n"
      << "test_lang = " << corpus.test.records().front().language << "\n"
      << "test_embeddings = test.slem\n"
      << extra_config;
  return config;
}

ExperimentConfig mock_config(Strategy strategy, std::size_t k, bool stratified) {
  ExperimentConfig cfg;
  cfg.dataset_name = "synthetic";
  cfg.train = {"train.tsv", "en", "train.slem"};
  cfg.test = {"test.tsv", "en", "test.slem"};
  cfg.selection.strategy = strategy;
  cfg.selection.k = k;
  cfg.selection.stratified = stratified;
  cfg.scorer.kind = ScorerKind::mock;
  cfg.scorer.mock_mode = MockMode::label_echo;
  cfg.seeds = {1, 2, 3, 4, 5};
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("shotlocker_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace shotlocker::fixtures
