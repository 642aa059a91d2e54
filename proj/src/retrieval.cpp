#include "shotlocker/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "first_error.hpp"
#include "shotlocker/error.hpp"
#include "shotlocker/kernels.hpp"
#include "shotlocker/random.hpp"

namespace shotlocker {
namespace {

constexpr double kWindowSlack = 1e-9;
constexpr std::uint64_t kGlobalStream = std::numeric_limits<std::uint64_t>::max();

bool ranked_before(const RankedEntry& a, const RankedEntry& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

bool shot_before(const Shot& a, const Shot& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

std::vector<std::vector<RankedEntry>> by_label(const RankedList& r) {
  std::vector<std::vector<RankedEntry>> buckets(r.labels.size());
  for (const auto& e : r.entries) buckets.at(e.label).push_back(e);
  return buckets;
}

void require_candidates(const RankedList& r, std::size_t label, std::size_t have, std::size_t k) {
  if (have < k) {
    throw Error(ErrorCode::insufficient_candidates,
                "label '" + r.labels[label] + "' has " + std::to_string(have) +
                    " candidates, need " + std::to_string(k));
  }
}

Shot to_shot(const RankedEntry& e) { return {e.id, e.distance}; }

ShotSet empty_set(const RankedList& r, std::size_t k, Strategy strategy, bool stratified) {
  ShotSet set;
  set.k = k;
  set.strategy = strategy;
  set.stratified = stratified;
  for (const auto& label : r.labels) set.groups.push_back({label, {}});
  return set;
}

template <typename Pick>
ShotSet per_label(const RankedList& r, std::size_t k, Strategy strategy, Pick pick) {
  auto set = empty_set(r, k, strategy, true);
  auto buckets = by_label(r);
  for (std::size_t l = 0; l < buckets.size(); ++l) {
    require_candidates(r, l, buckets[l].size(), k);
    auto& shots = set.groups[l].shots;
    for (const auto& e : pick(l, buckets[l])) shots.push_back(to_shot(e));
    std::sort(shots.begin(), shots.end(), shot_before);
  }
  return set;
}

std::vector<RankedEntry> draw(std::span<const RankedEntry> pool, std::size_t k,
                              std::uint64_t seed, std::uint64_t stream) {
  SeededDraw rng(seed, stream);
  std::vector<RankedEntry> out;
  for (auto pos : rng.sample_without_replacement(pool.size(), k)) out.push_back(pool[pos]);
  return out;
}

std::span<const RankedEntry> window_of(std::span<const RankedEntry> pool, const IntervalSpec& spec,
                                       std::size_t k, const std::string& what) {
  const auto [lo, hi] = interval_window(spec, pool.size());
  if (hi - lo < k) {
    throw Error(ErrorCode::insufficient_window,
                what + ": interval window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    ") holds " + std::to_string(hi - lo) + " entries, need " + std::to_string(k));
  }
  return pool.subspan(lo, hi - lo);
}

ShotSet global_selection(const RankedList& r, const SelectionSpec& spec) {
  const std::size_t total = spec.k * r.labels.size();
  if (r.entries.size() < total) {
    throw Error(ErrorCode::insufficient_candidates,
                "global selection needs " + std::to_string(total) + " candidates, have " +
                    std::to_string(r.entries.size()));
  }
  std::span<const RankedEntry> all(r.entries);
  std::vector<RankedEntry> picked;
  switch (spec.strategy) {
    case Strategy::nearest:
      picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(total));
      break;
    case Strategy::farthest:
      picked.assign(all.end() - static_cast<std::ptrdiff_t>(total), all.end());
      break;
    case Strategy::random:
      picked = draw(all, total, spec.seed, kGlobalStream);
      break;
    case Strategy::interval:
      picked = draw(window_of(all, spec.interval, total, "global ranking"), total, spec.seed,
                    kGlobalStream);
      break;
  }
  auto set = empty_set(r, spec.k, spec.strategy, false);
  for (const auto& e : picked) set.groups.at(e.label).shots.push_back(to_shot(e));
  for (auto& g : set.groups) std::sort(g.shots.begin(), g.shots.end(), shot_before);
  return set;
}

}  // namespace

LabelIndex::LabelIndex(std::vector<std::string> labels,
                       std::unordered_map<RecordId, std::size_t> label_of)
    : labels_(std::move(labels)), label_of_(std::move(label_of)) {
  for (const auto& [id, label] : label_of_) {
    if (label >= labels_.size()) {
      throw Error(ErrorCode::invalid_argument, "label index out of range for id " + std::to_string(id));
    }
  }
}

LabelIndex LabelIndex::from(const DatasetCollection& collection) {
  std::unordered_map<RecordId, std::size_t> label_of;
  for (const auto& r : collection.records()) label_of[r.id] = collection.label_index(r.label);
  return LabelIndex(collection.label_set(), std::move(label_of));
}

std::size_t LabelIndex::label_of(RecordId id) const {
  auto it = label_of_.find(id);
  if (it == label_of_.end()) {
    throw Error(ErrorCode::unresolved_id, "no label for record " + std::to_string(id));
  }
  return it->second;
}

PreparedIndex::PreparedIndex(const EmbeddingMatrix& index, LabelIndex labels, Measure measure,
                             std::optional<Standardizer> standardizer)
    : labels_(std::move(labels)), measure_(measure), standardizer_(std::move(standardizer)) {
  if (index.empty()) throw Error(ErrorCode::empty_input, "retrieval index is empty");
  if (standardizer_ && standardizer_->dim() != index.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "standardizer and index dims differ");
  }
  rows_ = kernels::omp::prepare_rows(measure_, standardizer_ ? &*standardizer_ : nullptr, index);
  row_labels_.reserve(index.rows());
  for (RecordId id : index.ids()) row_labels_.push_back(labels_.label_of(id));
}

RankedList PreparedIndex::rank(std::span<const double> query, RecordId query_id) const {
  if (query.size() != rows_.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "query dim " + std::to_string(query.size()) +
                                                   " vs index dim " + std::to_string(rows_.dim()));
  }
  const auto prepared = prepare_vector(measure_, standardizer_ ? &*standardizer_ : nullptr, query);
  std::vector<double> distances(rows_.rows());
  kernels::omp::distances(measure_.kind, prepared, rows_, distances);

  RankedList out;
  out.query_id = query_id;
  out.measure = measure_;
  out.labels = labels_.labels();
  out.entries.reserve(rows_.rows());
  for (std::size_t i = 0; i < rows_.rows(); ++i) {
    out.entries.push_back({rows_.ids()[i], distances[i], row_labels_[i]});
  }
  std::sort(out.entries.begin(), out.entries.end(), ranked_before);
  return out;
}

RankedList rank(std::span<const double> query, const EmbeddingMatrix& index,
                const LabelIndex& labels, const Measure& m, const Standardizer* s,
                RecordId query_id) {
  std::optional<Standardizer> owned;
  if (s != nullptr) owned = *s;
  return PreparedIndex(index, labels, m, std::move(owned)).rank(query, query_id);
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::random: return "random";
    case Strategy::nearest: return "nearest";
    case Strategy::farthest: return "farthest";
    case Strategy::interval: return "interval";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "random") return Strategy::random;
  if (name == "nearest") return Strategy::nearest;
  if (name == "farthest") return Strategy::farthest;
  if (name == "interval") return Strategy::interval;
  throw Error(ErrorCode::invalid_argument, "unknown strategy '" + name + "'");
}

std::size_t ShotSet::total() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.shots.size();
  return n;
}

std::vector<Shot> ShotSet::all_by_distance() const {
  std::vector<Shot> all;
  for (const auto& g : groups) all.insert(all.end(), g.shots.begin(), g.shots.end());
  std::sort(all.begin(), all.end(), shot_before);
  return all;
}

void IntervalSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_argument, "interval p must lie in [0, 1]");
  if (!(width > 0.0 && width <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "interval width must lie in (0, 1]");
  }
  if (p + width > 1.0 + kWindowSlack) {
    throw Error(ErrorCode::invalid_argument, "interval p + width exceeds 1");
  }
}

std::pair<std::size_t, std::size_t> interval_window(const IntervalSpec& spec, std::size_t n) {
  spec.validate();
  const double size = static_cast<double>(n);
  auto lo = static_cast<std::size_t>(std::floor(spec.p * size + kWindowSlack));
  auto hi = static_cast<std::size_t>(std::max(0.0, std::ceil((spec.p + spec.width) * size - kWindowSlack)));
  hi = std::min(hi, n);
  lo = std::min(lo, hi);
  return {lo, hi};
}

ShotSet nearest_per_label(const RankedList& r, std::size_t k) {
  return per_label(r, k, Strategy::nearest, [k](std::size_t, const std::vector<RankedEntry>& c) {
    return std::vector<RankedEntry>(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k));
  });
}

ShotSet farthest_per_label(const RankedList& r, std::size_t k) {
  return per_label(r, k, Strategy::farthest, [k](std::size_t, const std::vector<RankedEntry>& c) {
    return std::vector<RankedEntry>(c.end() - static_cast<std::ptrdiff_t>(k), c.end());
  });
}

ShotSet random_per_label(const RankedList& r, std::size_t k, std::uint64_t seed) {
  return per_label(r, k, Strategy::random, [k, seed](std::size_t l, const std::vector<RankedEntry>& c) {
    return draw(c, k, seed, l);
  });
}

ShotSet interval_sample(const RankedList& r, const IntervalSpec& spec, std::size_t k,
                        std::uint64_t seed) {
  spec.validate();
  auto set = empty_set(r, k, Strategy::interval, true);
  auto buckets = by_label(r);
  for (std::size_t l = 0; l < buckets.size(); ++l) {
    require_candidates(r, l, buckets[l].size(), k);
    auto window = window_of(buckets[l], spec, k, "label '" + r.labels[l] + "'");
    auto& shots = set.groups[l].shots;
    for (const auto& e : draw(window, k, seed, l)) shots.push_back(to_shot(e));
    std::sort(shots.begin(), shots.end(), shot_before);
  }
  return set;
}

ShotSet select_shots(const RankedList& r, const SelectionSpec& spec) {
  if (!spec.stratified) {
    if (spec.strategy == Strategy::interval) spec.interval.validate();
    return global_selection(r, spec);
  }
  switch (spec.strategy) {
    case Strategy::nearest: return nearest_per_label(r, spec.k);
    case Strategy::farthest: return farthest_per_label(r, spec.k);
    case Strategy::random: return random_per_label(r, spec.k, spec.seed);
    case Strategy::interval: return interval_sample(r, spec.interval, spec.k, spec.seed);
  }
  throw Error(ErrorCode::invalid_argument, "unknown strategy");
}

std::string knn_vote(const RankedList& r, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "kNN needs k >= 1");
  if (k > r.entries.size()) {
    throw Error(ErrorCode::insufficient_candidates,
                "kNN k=" + std::to_string(k) + " exceeds index size " + std::to_string(r.entries.size()));
  }
  std::vector<std::size_t> votes(r.labels.size(), 0);
  std::vector<double> summed(r.labels.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    votes[r.entries[i].label] += 1;
    summed[r.entries[i].label] += r.entries[i].distance;
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < votes.size(); ++l) {
    if (votes[l] > votes[best] || (votes[l] == votes[best] && votes[l] > 0 && summed[l] < summed[best])) {
      best = l;
    }
  }
  return r.labels[best];
}

std::string knn_classify(std::span<const double> query, const PreparedIndex& index, std::size_t k) {
  return knn_vote(index.rank(query), k);
}

std::string knn_classify(std::span<const double> query, const EmbeddingMatrix& index,
                         const LabelIndex& labels, const Measure& m, std::size_t k,
                         const Standardizer* s) {
  return knn_vote(rank(query, index, labels, m, s), k);
}

std::vector<std::string> knn_classify_batch(const EmbeddingMatrix& queries,
                                            const PreparedIndex& index, std::size_t k) {
  std::vector<std::string> out(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
  detail::FirstError error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = knn_classify(queries.row(static_cast<std::size_t>(i)), index, k);
    } catch (...) {
      error.capture(static_cast<std::size_t>(i));
    }
  }
  error.rethrow();
  return out;
}

}  // namespace shotlocker
