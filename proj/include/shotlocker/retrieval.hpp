#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shotlocker/corpus.hpp"
#include "shotlocker/embedding.hpp"
#include "shotlocker/geometry.hpp"

namespace shotlocker {

/// Ordered label set L plus the label of every indexed record.
class LabelIndex {
 public:
  LabelIndex() = default;
  LabelIndex(std::vector<std::string> labels, std::unordered_map<RecordId, std::size_t> label_of);

  static LabelIndex from(const DatasetCollection& collection);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t label_of(RecordId id) const;
  const std::string& name(std::size_t label) const { return labels_.at(label); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<RecordId, std::size_t> label_of_;
};

struct RankedEntry {
  RecordId id = 0;
  double distance = 0.0;
  std::size_t label = 0;  // index into RankedList::labels
};

/// Every indexed record sorted by ascending distance, ties by ascending id.
struct RankedList {
  RecordId query_id = 0;
  Measure measure;
  std::vector<std::string> labels;
  std::vector<RankedEntry> entries;
};

/// Transformed copy of the train rows for one Measure, reusable across queries.
class PreparedIndex {
 public:
  PreparedIndex(const EmbeddingMatrix& index, LabelIndex labels, Measure measure,
                std::optional<Standardizer> standardizer = std::nullopt);

  RankedList rank(std::span<const double> query, RecordId query_id = 0) const;

  const EmbeddingMatrix& rows() const { return rows_; }
  const LabelIndex& labels() const { return labels_; }
  const Measure& measure() const { return measure_; }

 private:
  EmbeddingMatrix rows_;
  std::vector<std::size_t> row_labels_;
  LabelIndex labels_;
  Measure measure_;
  std::optional<Standardizer> standardizer_;
};

RankedList rank(std::span<const double> query, const EmbeddingMatrix& index,
                const LabelIndex& labels, const Measure& m, const Standardizer* s,
                RecordId query_id = 0);

enum class Strategy { random, nearest, farthest, interval };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& name);

struct Shot {
  RecordId id = 0;
  double distance = 0.0;

  bool operator==(const Shot&) const = default;
};

struct ShotGroup {
  std::string label;
  std::vector<Shot> shots;  // ascending distance, ties by id

  bool operator==(const ShotGroup&) const = default;
};

/// Groups follow the label order of the ranked list. Stratified sets hold
/// exactly k shots per label; global sets hold k*|L| shots in total,
/// distributed over labels however the ranking falls.
struct ShotSet {
  std::vector<ShotGroup> groups;
  std::size_t k = 0;
  Strategy strategy = Strategy::nearest;
  bool stratified = true;

  std::size_t total() const;
  std::vector<Shot> all_by_distance() const;

  bool operator==(const ShotSet&) const = default;
};

struct IntervalSpec {
  double p = 0.0;
  double width = 0.1;

  void validate() const;
};

/// Half-open rank window [floor(p*n), ceil((p+width)*n)) clamped to n.
std::pair<std::size_t, std::size_t> interval_window(const IntervalSpec& spec, std::size_t n);

ShotSet nearest_per_label(const RankedList& r, std::size_t k);
ShotSet farthest_per_label(const RankedList& r, std::size_t k);
ShotSet random_per_label(const RankedList& r, std::size_t k, std::uint64_t seed);
ShotSet interval_sample(const RankedList& r, const IntervalSpec& spec, std::size_t k,
                        std::uint64_t seed);

struct SelectionSpec {
  Strategy strategy = Strategy::nearest;
  std::size_t k = 1;
  IntervalSpec interval;
  std::uint64_t seed = 0;
  bool stratified = true;
};

/// Dispatches to the per-label operations, or to global selection of
/// k*|L| shots over the whole ranking when !stratified.
ShotSet select_shots(const RankedList& r, const SelectionSpec& spec);

/// Majority label among the k nearest entries; ties go to the smaller summed
/// distance, then to the earlier label in L.
std::string knn_vote(const RankedList& r, std::size_t k);

std::string knn_classify(std::span<const double> query, const PreparedIndex& index, std::size_t k);
std::string knn_classify(std::span<const double> query, const EmbeddingMatrix& index,
                         const LabelIndex& labels, const Measure& m, std::size_t k,
                         const Standardizer* s = nullptr);

/// Classifies each row of `queries`; parallel across queries.
std::vector<std::string> knn_classify_batch(const EmbeddingMatrix& queries,
                                            const PreparedIndex& index, std::size_t k);

}  // namespace shotlocker
