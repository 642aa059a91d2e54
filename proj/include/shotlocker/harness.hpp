#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shotlocker/corpus.hpp"
#include "shotlocker/embedding.hpp"
#include "shotlocker/geometry.hpp"
#include "shotlocker/prompting.hpp"
#include "shotlocker/retrieval.hpp"
#include "shotlocker/scoring.hpp"

namespace shotlocker {

inline constexpr const char* kSoftwareVersion = "0.1.0";

struct DataSource {
  std::filesystem::path dataset;
  std::string language;
  std::filesystem::path embeddings;
};

struct ExperimentConfig {
  std::string dataset_name;
  DataSource train;  // L1: the only corpus shots are drawn from
  DataSource test;   // L2: queries
  SelectionSpec selection;  // seed is overwritten per run
  Measure measure;
  double epsilon = Standardizer::kDefaultEpsilon;
  PromptTemplate prompt_template;
  std::optional<std::string> instruction;  // overrides the train manifest's
  Verbalizer verbalizer = Verbalizer::identity();
  ScorerDescriptor scorer;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool dedup = true;
  OverlapMode overlap_mode = OverlapMode::canonical;
  bool per_token_mean = false;

  bool cross_lingual() const { return train.language != test.language; }
  void validate() const;

  /// Reads a key-value config; relative paths resolve against its directory.
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Stable text form of everything that affects results.
  std::string canonical(bool include_strategy = true) const;
  std::string fingerprint() const;
  /// Fingerprint with strategy, p and width left out; equal for runs that
  /// differ only in how shots are chosen.
  std::string comparison_key() const;
};

/// Loaded, overlap-filtered data with embeddings aligned to surviving ids.
struct PreparedData {
  DatasetCollection train;
  DatasetCollection test;
  OverlapReport overlap;
  EmbeddingMatrix train_embeddings;
  EmbeddingMatrix test_embeddings;
  std::optional<Standardizer> standardizer;
};

PreparedData prepare_data(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg, const DatasetCollection& train,
                          const DatasetCollection& test, const EmbeddingMatrix& train_embeddings,
                          const EmbeddingMatrix& test_embeddings);

struct RunMetrics {
  std::string dataset;
  std::string l1;
  std::string l2;
  Strategy strategy = Strategy::nearest;
  std::size_t k = 0;
  double p = 0.0;
  double width = 0.0;
  Measure measure;
  bool stratified = true;
  bool dedup = true;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_run_accuracy;
  std::size_t n_queries = 0;
  double mean = 0.0;
  double std = 0.0;  // population std over runs
  std::string fingerprint;
  std::string comparison_key;
  std::string template_id;
  std::string verbalizer_id;
  std::string model_id;
  bool per_token_mean = false;
};

std::pair<double, double> mean_and_population_std(std::span<const double> values);

/// Every test query, every seed: rank, select, build prompt, score, argmax.
RunMetrics run_experiment(const ExperimentConfig& cfg);
RunMetrics run_experiment(const ExperimentConfig& cfg, const PreparedData& data, Scorer& scorer);

/// nearest.mean - farthest.mean; throws when the runs differ in more than strategy.
double delta_accuracy(const RunMetrics& nearest, const RunMetrics& farthest);

struct KnnPoint {
  std::size_t k = 0;
  double accuracy = 0.0;
};

std::vector<KnnPoint> knn_sweep(const ExperimentConfig& cfg, std::span<const std::size_t> k_values);
std::vector<KnnPoint> knn_sweep(const PreparedData& data, const Measure& measure,
                                std::span<const std::size_t> k_values);

/// One interval-strategy run per p, all with the configured width.
std::vector<RunMetrics> interval_sweep(const ExperimentConfig& cfg, std::span<const double> p_grid);
std::vector<RunMetrics> interval_sweep(const ExperimentConfig& cfg, const PreparedData& data,
                                       Scorer& scorer, std::span<const double> p_grid);

/// Writes `csv_path` (one row per seed) and a JSON sidecar next to it with
/// the same stem. Both are byte-stable for identical inputs.
void export_results(std::span<const RunMetrics> metrics, const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

std::vector<RunMetrics> import_results_csv(const std::filesystem::path& csv_path);
std::vector<RunMetrics> load_results_json(const std::filesystem::path& json_path);

std::string format_double(double value);

}  // namespace shotlocker
