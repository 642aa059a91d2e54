#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "shotlocker/corpus.hpp"
#include "shotlocker/embedding.hpp"
#include "shotlocker/geometry.hpp"
#include "shotlocker/harness.hpp"
#include "shotlocker/retrieval.hpp"

// Generators and brute-force oracles shared by the unit and acceptance
// suites. Oracles use long double accumulation and their own loop structure;
// none of them call into the code paths they check.
namespace shotlocker::fixtures {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0);
EmbeddingMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t dim, double scale = 1.0);
LabelIndex random_labels(std::mt19937_64& rng, const EmbeddingMatrix& m, std::size_t n_labels);

namespace oracle {

double euclidean(const std::vector<double>& u, const std::vector<double>& v);
double cosine(const std::vector<double>& u, const std::vector<double>& v);
std::vector<double> mean_pool(const std::vector<std::vector<double>>& rows);
std::vector<double> normalize(const std::vector<double>& v);
void moments(const EmbeddingMatrix& m, std::vector<double>& mean, std::vector<double>& std);

/// (id, distance, label) for every row, distances via the oracle measure,
/// sorted by (distance, id).
struct Ranked {
  RecordId id;
  double distance;
  std::size_t label;
};
std::vector<Ranked> rank(const std::vector<double>& query, const EmbeddingMatrix& m,
                         const LabelIndex& labels, MeasureKind kind, bool normalize);

/// Per-label candidate lists in ascending order.
std::vector<std::vector<Ranked>> per_label(const std::vector<Ranked>& ranked, std::size_t n_labels);

std::string majority_vote(const std::vector<Ranked>& ranked, const LabelIndex& labels, std::size_t k);

}  // namespace oracle

/// Well-separated clusters: label l centered at `separation` * e_l, unit
/// Gaussian noise. Train/test texts are distinct so overlap filtering keeps
/// everything.
struct ClusteredCorpus {
  DatasetCollection train;
  DatasetCollection test;
  EmbeddingMatrix train_embeddings;
  EmbeddingMatrix test_embeddings;
};

ClusteredCorpus clustered_corpus(std::size_t n_labels, std::size_t train_per_label,
                                 std::size_t test_per_label, std::size_t dim, double separation,
                                 std::uint64_t seed, const std::string& language = "en");

/// Two labels at +/- separation/2 along the first axis, unit variance.
ClusteredCorpus gaussian_pair(std::size_t train_total, std::size_t test_total, std::size_t dim,
                              double separation, std::uint64_t seed);

/// Writes the corpus (records, manifests, embeddings) and an experiment
/// config into `dir`; returns the config path.
std::filesystem::path write_corpus(const ClusteredCorpus& corpus, const std::filesystem::path& dir,
                                   const std::string& extra_config = "");

ExperimentConfig mock_config(Strategy strategy, std::size_t k, bool stratified);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace shotlocker::fixtures
