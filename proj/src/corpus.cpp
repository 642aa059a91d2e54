#include "shotlocker/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "shotlocker/error.hpp"
#include "shotlocker/keyvalue.hpp"

namespace shotlocker {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(static_cast<unsigned char>(c)); });
}

}  // namespace

DatasetCollection::DatasetCollection(std::vector<DatasetRecord> records,
                                     std::vector<std::string> label_set,
                                     std::string task_instruction)
    : records_(std::move(records)),
      label_set_(std::move(label_set)),
      task_instruction_(std::move(task_instruction)) {
  if (label_set_.empty()) throw Error(ErrorCode::invalid_argument, "label set is empty");
  std::unordered_set<std::string> labels;
  for (const auto& label : label_set_) {
    if (!labels.insert(label).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate label in label set: " + label);
    }
  }
  std::unordered_set<RecordId> ids;
  for (const auto& record : records_) {
    if (!ids.insert(record.id).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate record id " + std::to_string(record.id));
    }
    if (blank(record.text)) {
      throw Error(ErrorCode::invalid_argument,
                  "record " + std::to_string(record.id) + " has blank text");
    }
    if (!labels.count(record.label)) {
      throw Error(ErrorCode::invalid_argument, "record " + std::to_string(record.id) +
                                                   " has undeclared label '" + record.label + "'");
    }
  }
  order_by_id_.resize(records_.size());
  std::iota(order_by_id_.begin(), order_by_id_.end(), std::size_t{0});
  std::sort(order_by_id_.begin(), order_by_id_.end(),
            [&](std::size_t a, std::size_t b) { return records_[a].id < records_[b].id; });
}

const DatasetRecord* DatasetCollection::find(RecordId id) const {
  auto it = std::lower_bound(order_by_id_.begin(), order_by_id_.end(), id,
                             [&](std::size_t pos, RecordId value) { return records_[pos].id < value; });
  if (it == order_by_id_.end() || records_[*it].id != id) return nullptr;
  return &records_[*it];
}

std::size_t DatasetCollection::label_index(const std::string& label) const {
  auto it = std::find(label_set_.begin(), label_set_.end(), label);
  if (it == label_set_.end()) {
    throw Error(ErrorCode::invalid_argument, "label not in label set: " + label);
  }
  return static_cast<std::size_t>(it - label_set_.begin());
}

std::string canonicalize(std::string_view text, OverlapMode mode) {
  if (mode == OverlapMode::exact) return std::string(text);
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::string describe(OverlapMode mode) {
  if (mode == OverlapMode::exact) {
    return "byte-exact text match; rate denominator = train size before filtering";
  }
  return "ascii lowercase, whitespace runs collapsed to one space, ends trimmed; "
         "rate denominator = train size before filtering";
}

std::filesystem::path manifest_path_for(const std::filesystem::path& dataset_path) {
  auto path = dataset_path;
  path += ".manifest";
  return path;
}

DatasetCollection load_dataset(const std::filesystem::path& path, const std::string& language,
                               Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open dataset " + path.string());

  std::optional<kv::Document> manifest;
  if (std::filesystem::exists(manifest_path_for(path))) {
    manifest = kv::Document::load(manifest_path_for(path));
  }
  std::string lang = language;
  if (lang.empty() && manifest) lang = manifest->get_or("language", "");
  std::vector<std::string> declared_labels;
  std::string instruction;
  if (manifest) {
    declared_labels = manifest->get_list("labels");
    instruction = manifest->get_or("instruction", "");
  }
  const std::set<std::string> declared(declared_labels.begin(), declared_labels.end());

  std::vector<DatasetRecord> records;
  std::set<std::string> seen_labels;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto where = path.string() + ":" + std::to_string(number) + ": ";
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::parse, where + "expected exactly two tab-separated fields");
    }
    std::string text = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (blank(text)) throw Error(ErrorCode::parse, where + "blank text field");
    if (blank(label)) throw Error(ErrorCode::parse, where + "blank label field");
    if (!declared.empty() && !declared.count(label)) {
      throw Error(ErrorCode::parse, where + "label '" + label + "' not declared in manifest");
    }
    seen_labels.insert(label);
    records.push_back({records.size(), std::move(text), std::move(label), lang, split});
  }
  if (records.empty()) throw Error(ErrorCode::empty_collection, "dataset is empty: " + path.string());

  std::vector<std::string> label_set =
      declared_labels.empty() ? std::vector<std::string>(seen_labels.begin(), seen_labels.end())
                              : declared_labels;
  return DatasetCollection(std::move(records), std::move(label_set), std::move(instruction));
}

void store_dataset(const DatasetCollection& collection, const std::filesystem::path& path) {
  std::vector<const DatasetRecord*> ordered;
  for (const auto& r : collection.records()) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write dataset " + path.string());
  for (const auto* r : ordered) {
    for (const auto* field : {&r->text, &r->label}) {
      if (field->find_first_of("\t\n\r") != std::string::npos) {
        throw Error(ErrorCode::invalid_argument,
                    "record " + std::to_string(r->id) + " contains a tab or line break");
      }
    }
    out << r->text << '\t' << r->label << '\n';
  }

  kv::Document manifest;
  if (!collection.empty()) manifest.set("language", collection.records().front().language);
  manifest.set("instruction", collection.task_instruction());
  std::string labels;
  for (const auto& label : collection.label_set()) {
    if (label.find(',') != std::string::npos) {
      throw Error(ErrorCode::invalid_argument, "label contains a comma: " + label);
    }
    if (!labels.empty()) labels += ",";
    labels += label;
  }
  manifest.set("labels", labels);
  std::ofstream mout(manifest_path_for(path), std::ios::binary | std::ios::trunc);
  if (!mout) throw Error(ErrorCode::io, "cannot write manifest for " + path.string());
  mout << manifest.serialize();
}

std::pair<DatasetCollection, OverlapReport> filter_overlap(const DatasetCollection& train,
                                                           const DatasetCollection& test,
                                                           OverlapMode mode) {
  std::unordered_set<std::string> test_texts;
  for (const auto& r : test.records()) test_texts.insert(canonicalize(r.text, mode));

  OverlapReport report;
  report.train_size_before = train.size();
  report.normalization = describe(mode);
  std::vector<DatasetRecord> kept;
  for (const auto& r : train.records()) {
    if (test_texts.count(canonicalize(r.text, mode))) {
      report.removed_ids.push_back(r.id);
    } else {
      kept.push_back(r);
    }
  }
  report.overlap_rate = train.empty() ? 0.0
                                      : static_cast<double>(report.removed_ids.size()) /
                                            static_cast<double>(train.size());
  return {DatasetCollection(std::move(kept), train.label_set(), train.task_instruction()),
          std::move(report)};
}

double overlap_rate(const DatasetCollection& train, const DatasetCollection& test,
                    OverlapMode mode) {
  if (train.empty()) return 0.0;
  std::unordered_set<std::string> test_texts;
  for (const auto& r : test.records()) test_texts.insert(canonicalize(r.text, mode));
  std::size_t hits = 0;
  for (const auto& r : train.records()) hits += test_texts.count(canonicalize(r.text, mode));
  return static_cast<double>(hits) / static_cast<double>(train.size());
}

std::string to_json(const OverlapReport& report, int indent) {
  nlohmann::json j;
  j["removed_ids"] = report.removed_ids;
  j["removed_count"] = report.removed_ids.size();
  j["train_size_before"] = report.train_size_before;
  j["overlap_rate"] = report.overlap_rate;
  j["normalization"] = report.normalization;
  return j.dump(indent);
}

}  // namespace shotlocker
