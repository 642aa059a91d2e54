#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "shotlocker/types.hpp"

namespace shotlocker {

struct DatasetRecord {
  RecordId id = 0;
  std::string text;
  std::string label;
  std::string language;
  Split split = Split::train;

  bool operator==(const DatasetRecord&) const = default;
};

/// Labeled records plus the declared label set and task instruction.
/// Immutable once constructed; the constructor enforces the invariants
/// (unique ids, non-blank text, labels drawn from a duplicate-free label set).
class DatasetCollection {
 public:
  DatasetCollection(std::vector<DatasetRecord> records, std::vector<std::string> label_set,
                    std::string task_instruction);

  const std::vector<DatasetRecord>& records() const { return records_; }
  const std::vector<std::string>& label_set() const { return label_set_; }
  const std::string& task_instruction() const { return task_instruction_; }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Returns nullptr when the id is not present.
  const DatasetRecord* find(RecordId id) const;
  std::size_t label_index(const std::string& label) const;

 private:
  std::vector<DatasetRecord> records_;
  std::vector<std::string> label_set_;
  std::string task_instruction_;
  std::vector<std::size_t> order_by_id_;
};

enum class OverlapMode {
  canonical,  // ASCII lowercase, whitespace runs collapsed, ends trimmed
  exact,      // byte-exact comparison
};

struct OverlapReport {
  std::vector<RecordId> removed_ids;
  double overlap_rate = 0.0;
  std::size_t train_size_before = 0;
  std::string normalization;
};

std::string canonicalize(std::string_view text, OverlapMode mode = OverlapMode::canonical);
std::string describe(OverlapMode mode);

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path);

/// Reads `text<TAB>label` lines. A sidecar `<path>.manifest` may declare
/// language, instruction and an ordered labels list; without it the label
/// set is the sorted set of distinct labels. A non-empty `language`
/// argument takes precedence over the manifest.
DatasetCollection load_dataset(const std::filesystem::path& path, const std::string& language,
                               Split split);

/// Writes the records (in id order) and a manifest carrying language,
/// instruction and label order. Rejects texts or labels containing tabs or
/// line breaks, which the line format cannot carry.
void store_dataset(const DatasetCollection& collection, const std::filesystem::path& path);

std::pair<DatasetCollection, OverlapReport> filter_overlap(
    const DatasetCollection& train, const DatasetCollection& test,
    OverlapMode mode = OverlapMode::canonical);

double overlap_rate(const DatasetCollection& train, const DatasetCollection& test,
                    OverlapMode mode = OverlapMode::canonical);

std::string to_json(const OverlapReport& report, int indent = 2);

}  // namespace shotlocker
