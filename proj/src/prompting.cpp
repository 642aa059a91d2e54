#include "shotlocker/prompting.hpp"

#include <charconv>

#include "shotlocker/error.hpp"
#include "shotlocker/hash.hpp"
#include "shotlocker/keyvalue.hpp"
#include "shotlocker/random.hpp"

namespace shotlocker {
namespace {

constexpr std::string_view kText = "{text}";
constexpr std::string_view kLabel = "{label}";

std::size_t count_of(const std::string& s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::pair<ShotOrder, std::uint64_t> parse_order(const std::string& value) {
  if (value == "by_label_then_distance_asc") return {ShotOrder::by_label_then_distance_asc, 0};
  if (value == "by_distance_asc_global") return {ShotOrder::by_distance_asc_global, 0};
  if (starts_with(value, "shuffled")) {
    std::uint64_t seed = 0;
    if (value.size() > 8) {
      if (value[8] != ':') throw Error(ErrorCode::parse, "shot_order must be shuffled:SEED");
      auto [ptr, ec] = std::from_chars(value.data() + 9, value.data() + value.size(), seed);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorCode::parse, "bad shuffle seed in shot_order: " + value);
      }
    }
    return {ShotOrder::shuffled, seed};
  }
  throw Error(ErrorCode::parse, "unknown shot_order '" + value + "'");
}

}  // namespace

std::string to_string(ShotOrder order, std::uint64_t seed) {
  switch (order) {
    case ShotOrder::by_label_then_distance_asc: return "by_label_then_distance_asc";
    case ShotOrder::by_distance_asc_global: return "by_distance_asc_global";
    case ShotOrder::shuffled: return "shuffled:" + std::to_string(seed);
  }
  return "unknown";
}

void PromptTemplate::validate() const {
  if (count_of(shot_format, kText) != 1 || count_of(shot_format, kLabel) != 1) {
    throw Error(ErrorCode::invalid_argument,
                "template '" + id + "': shot_format needs {text} and {label} exactly once");
  }
  if (count_of(query_format, kText) != 1 || count_of(query_format, kLabel) != 0) {
    throw Error(ErrorCode::invalid_argument,
                "template '" + id + "': query_format needs {text} exactly once and no {label}");
  }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  const auto doc = kv::Document::load(path);
  PromptTemplate t;
  t.id = doc.get_or("id", path.stem().string());
  t.shot_format = doc.get_or("shot_format", t.shot_format);
  t.query_format = doc.get_or("query_format", t.query_format);
  t.separator = doc.get_or("separator", t.separator);
  std::tie(t.shot_order, t.shuffle_seed) = parse_order(doc.get_or("shot_order", "by_label_then_distance_asc"));
  t.validate();
  return t;
}

std::string PromptTemplate::serialize() const {
  kv::Document doc;
  doc.set("id", id);
  doc.set("shot_format", shot_format);
  doc.set("query_format", query_format);
  doc.set("separator", separator);
  doc.set("shot_order", to_string(shot_order, shuffle_seed));
  return doc.serialize();
}

Verbalizer Verbalizer::load(const std::filesystem::path& path) {
  const auto doc = kv::Document::load(path);
  return Verbalizer(doc.values());
}

std::string Verbalizer::id() const {
  if (identity_) return "identity";
  std::uint64_t h = kFnvOffset;
  for (const auto& [label, surface] : mapping_) {
    h = fnv1a64(label, h);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(surface, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return "map:" + hex64(h);
}

std::string verbalize_label(const std::string& label, const Verbalizer& verbalizer) {
  if (verbalizer.is_identity()) return label;
  auto it = verbalizer.mapping().find(label);
  if (it == verbalizer.mapping().end()) {
    throw Error(ErrorCode::missing_mapping, "no verbalization for label '" + label + "'");
  }
  return it->second;
}

std::string render_format(const std::string& format, const std::string& text,
                          const std::optional<std::string>& label) {
  std::string out;
  out.reserve(format.size() + text.size() + (label ? label->size() : 0));
  std::string_view rest(format);
  while (!rest.empty()) {
    if (starts_with(rest, kText)) {
      out += text;
      rest.remove_prefix(kText.size());
    } else if (label && starts_with(rest, kLabel)) {
      out += *label;
      rest.remove_prefix(kLabel.size());
    } else {
      out.push_back(rest.front());
      rest.remove_prefix(1);
    }
  }
  return out;
}

std::optional<std::string> match_shot_label(const std::string& shot_format, const std::string& block) {
  const auto t = shot_format.find(kText);
  const auto l = shot_format.find(kLabel);
  if (t == std::string::npos || l == std::string::npos) return std::nullopt;
  const bool text_first = t < l;
  const auto first = std::min(t, l);
  const auto first_len = text_first ? kText.size() : kLabel.size();
  const auto second = std::max(t, l);
  const auto second_len = text_first ? kLabel.size() : kText.size();

  const std::string_view prefix = std::string_view(shot_format).substr(0, first);
  const std::string_view middle = std::string_view(shot_format).substr(first + first_len, second - first - first_len);
  const std::string_view suffix = std::string_view(shot_format).substr(second + second_len);
  if (middle.empty()) return std::nullopt;
  if (block.size() < prefix.size() + middle.size() + suffix.size()) return std::nullopt;
  if (!starts_with(block, prefix) || !ends_with(block, suffix)) return std::nullopt;

  const std::string_view body =
      std::string_view(block).substr(prefix.size(), block.size() - prefix.size() - suffix.size());
  // Labels never contain the delimiter; the text side may.
  const auto cut = text_first ? body.rfind(middle) : body.find(middle);
  if (cut == std::string_view::npos) return std::nullopt;
  const std::string_view text_part = text_first ? body.substr(0, cut) : body.substr(cut + middle.size());
  const std::string_view label_part = text_first ? body.substr(cut + middle.size()) : body.substr(0, cut);
  if (label_part.empty() || text_part.empty()) return std::nullopt;
  return std::string(label_part);
}

Prompt build_prompt(const std::string& instruction, const ShotSet& shots, const DatasetRecord& query,
                    const PromptTemplate& t, const DatasetCollection& records,
                    const Verbalizer& verbalizer) {
  t.validate();

  std::vector<Shot> ordered;
  if (t.shot_order == ShotOrder::by_distance_asc_global) {
    ordered = shots.all_by_distance();
  } else {
    for (const auto& group : shots.groups) ordered.insert(ordered.end(), group.shots.begin(), group.shots.end());
    if (t.shot_order == ShotOrder::shuffled) SeededDraw(t.shuffle_seed, 0).shuffle(ordered);
  }

  Prompt prompt;
  prompt.template_id = t.id;
  prompt.instruction = instruction;
  prompt.query_id = query.id;

  std::vector<std::string> blocks;
  if (!instruction.empty()) blocks.push_back(instruction);
  for (const auto& shot : ordered) {
    const DatasetRecord* record = records.find(shot.id);
    if (record == nullptr) {
      throw Error(ErrorCode::unresolved_id, "shot id " + std::to_string(shot.id) + " not in collection");
    }
    if (record->id == query.id && record->split == query.split) {
      throw Error(ErrorCode::leakage, "query " + std::to_string(query.id) + " appears among its own shots");
    }
    blocks.push_back(render_format(t.shot_format, record->text, verbalize_label(record->label, verbalizer)));
    prompt.shot_ids.push_back(shot.id);
  }
  blocks.push_back(render_format(t.query_format, query.text, std::nullopt));

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) prompt.text += t.separator;
    prompt.text += blocks[i];
  }
  return prompt;
}

}  // namespace shotlocker
