#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shotlocker/corpus.hpp"
#include "shotlocker/retrieval.hpp"

namespace shotlocker {

enum class ShotOrder { by_label_then_distance_asc, by_distance_asc_global, shuffled };

struct PromptTemplate {
  std::string id = "default";
  std::string shot_format = "{text}\n{label}";
  std::string query_format = "{text}\n";
  std::string separator = "\n\n";
  ShotOrder shot_order = ShotOrder::by_label_then_distance_asc;
  std::uint64_t shuffle_seed = 0;

  /// Throws unless shot_format holds {text} and {label} exactly once each
  /// and query_format holds {text} exactly once.
  void validate() const;

  /// Keys: id, shot_format, query_format, separator, shot_order
  /// (by_label_then_distance_asc | by_distance_asc_global | shuffled:SEED).
  static PromptTemplate load(const std::filesystem::path& path);
  std::string serialize() const;
};

std::string to_string(ShotOrder order, std::uint64_t seed = 0);

/// Maps label names to the surface strings the scorer continues with.
/// An identity verbalizer passes names through unchanged.
class Verbalizer {
 public:
  static Verbalizer identity() { return Verbalizer{}; }
  explicit Verbalizer(std::map<std::string, std::string> mapping)
      : mapping_(std::move(mapping)), identity_(false) {}

  /// Key-value file: one `label = surface` entry per line.
  static Verbalizer load(const std::filesystem::path& path);

  bool is_identity() const { return identity_; }
  const std::map<std::string, std::string>& mapping() const { return mapping_; }
  std::string id() const;

 private:
  Verbalizer() = default;
  std::map<std::string, std::string> mapping_;
  bool identity_ = true;
};

std::string verbalize_label(const std::string& label, const Verbalizer& verbalizer);

struct Prompt {
  std::string text;
  std::vector<RecordId> shot_ids;
  std::string template_id;
  std::string instruction;
  RecordId query_id = 0;
};

/// Renders instruction, shot blocks and the query joined by the template
/// separator. `records` resolves shot ids (the train collection).
Prompt build_prompt(const std::string& instruction, const ShotSet& shots,
                    const DatasetRecord& query, const PromptTemplate& t,
                    const DatasetCollection& records,
                    const Verbalizer& verbalizer = Verbalizer::identity());

/// Fills {text} and {label} in one pass over the format; substituted values
/// are never re-scanned for placeholders.
std::string render_format(const std::string& format, const std::string& text,
                          const std::optional<std::string>& label);

/// Inverse of render_format for a shot_format: extracts the label from a
/// rendered shot block, or nullopt when the block does not match or the
/// label would be empty.
std::optional<std::string> match_shot_label(const std::string& shot_format,
                                            const std::string& block);

}  // namespace shotlocker
