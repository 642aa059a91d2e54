#include "shotlocker/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "shotlocker/hash.hpp"

namespace shotlocker {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_blocks(const std::string& prompt, const std::string& separator) {
  std::vector<std::string> blocks;
  if (separator.empty()) return {prompt};
  std::size_t start = 0;
  while (true) {
    const auto pos = prompt.find(separator, start);
    if (pos == std::string::npos) {
      blocks.push_back(prompt.substr(start));
      return blocks;
    }
    blocks.push_back(prompt.substr(start, pos - start));
    start = pos + separator.size();
  }
}

std::vector<ScoredLabel> parse_scores(const json& body, const ScoreRequest& request) {
  const auto& scores = body.at("scores");
  if (!scores.is_array() || scores.size() != request.continuations.size()) {
    throw std::runtime_error("expected one score per continuation");
  }
  std::vector<ScoredLabel> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ScoredLabel s;
    s.label = request.labels.empty() ? request.continuations[i] : request.labels[i];
    s.logprob = scores[i].at("logprob").get<double>();
    s.token_count = scores[i].at("token_count").get<int>();
    if (s.token_count < 1) throw std::runtime_error("token_count must be >= 1");
    out.push_back(std::move(s));
  }
  return out;
}

json scores_json(const std::vector<ScoredLabel>& scored) {
  json scores = json::array();
  for (const auto& s : scored) scores.push_back({{"logprob", s.logprob}, {"token_count", s.token_count}});
  return {{"scores", scores}};
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

void ScoreRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::invalid_argument, "score request has an empty prompt");
  if (continuations.empty()) throw Error(ErrorCode::invalid_argument, "score request has no continuations");
  std::unordered_set<std::string> seen;
  for (const auto& c : continuations) {
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate continuation '" + c + "'");
    }
  }
  if (!labels.empty() && labels.size() != continuations.size()) {
    throw Error(ErrorCode::invalid_argument, "labels and continuations differ in length");
  }
}

void ScorerDescriptor::validate() const {
  if (kind == ScorerKind::remote && endpoint.empty() && std::getenv("SHOTLOCKER_SCORER_URL") == nullptr) {
    throw Error(ErrorCode::invalid_argument, "remote scorer requires an endpoint");
  }
  if (max_concurrent == 0) throw Error(ErrorCode::invalid_argument, "max_concurrent must be >= 1");
  if (max_attempts < 1) throw Error(ErrorCode::invalid_argument, "max_attempts must be >= 1");
  if (cassette_mode != CassetteMode::off && cassette.empty()) {
    throw Error(ErrorCode::invalid_argument, "cassette mode set without a cassette path");
  }
}

double mock_score(const std::string& prompt, const std::string& continuation, std::uint64_t salt,
                  MockMode mode, const PromptTemplate& layout) {
  if (mode == MockMode::label_echo) {
    const std::string wanted = trim(continuation);
    std::size_t differing = 0;
    for (const auto& block : split_blocks(prompt, layout.separator)) {
      auto label = match_shot_label(layout.shot_format, block);
      if (label && trim(*label) != wanted) ++differing;
    }
    return differing == 0 ? 0.0 : -static_cast<double>(differing) / 10.0;
  }
  std::uint64_t h = fnv1a64(prompt);
  h = fnv1a64(std::string_view("\0", 1), h);
  h = fnv1a64(continuation, h);
  h = fnv1a64(std::string_view("\0", 1), h);
  char salt_bytes[8];
  for (int i = 0; i < 8; ++i) salt_bytes[i] = static_cast<char>((salt >> (8 * i)) & 0xFF);
  h = fnv1a64(std::string_view(salt_bytes, 8), h);
  return -10.0 * static_cast<double>(h >> 11) * 0x1.0p-53;
}

MockScorer::MockScorer(MockMode mode, std::uint64_t salt, PromptTemplate layout, std::string model_id)
    : mode_(mode), salt_(salt), layout_(std::move(layout)), model_id_(std::move(model_id)) {}

std::vector<ScoredLabel> MockScorer::score(const ScoreRequest& request) {
  request.validate();
  std::vector<ScoredLabel> out;
  for (std::size_t i = 0; i < request.continuations.size(); ++i) {
    out.push_back({request.labels.empty() ? request.continuations[i] : request.labels[i],
                   mock_score(request.prompt, request.continuations[i], salt_, mode_, layout_), 1});
  }
  return out;
}

std::string MockScorer::model_id() const { return model_id_; }

std::string request_body(const std::string& model, const ScoreRequest& request) {
  return json{{"model", model}, {"prompt", request.prompt}, {"continuations", request.continuations}}.dump();
}

RemoteScorer::RemoteScorer(ScorerDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
}

std::vector<ScoredLabel> RemoteScorer::score(const ScoreRequest& request) {
  request.validate();
  // Split "http://host:port/prefix" into the client base and a path prefix.
  std::string base = descriptor_.endpoint;
  std::string prefix;
  const auto scheme = base.find("://");
  const auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    prefix = base.substr(slash);
    base = base.substr(0, slash);
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const std::string path = prefix + "/v1/score";
  const std::string body = request_body(descriptor_.model_id, request);

  httplib::Client client(base);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(descriptor_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(descriptor_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  std::string last_error;
  int last_status = 0;
  auto backoff = descriptor_.backoff;
  for (int attempt = 1; attempt <= descriptor_.max_attempts; ++attempt) {
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return parse_scores(json::parse(res->body), request);
      } catch (const std::exception& e) {
        throw TransportError("malformed scorer response: " + std::string(e.what()), attempt, res->status);
      }
    } else {
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status);
      auto parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_object() && parsed.contains("error") && parsed["error"].is_string()) {
        last_error += ": " + parsed["error"].get<std::string>();
      }
      if (!retryable(res->status)) {
        throw TransportError("scorer rejected request: " + last_error, attempt, last_status);
      }
    }
    if (attempt < descriptor_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("scorer failed after " + std::to_string(descriptor_.max_attempts) +
                           " attempts: " + last_error,
                       descriptor_.max_attempts, last_status);
}

RecordingScorer::RecordingScorer(std::unique_ptr<Scorer> inner, std::filesystem::path cassette)
    : inner_(std::move(inner)), cassette_(std::move(cassette)) {
  std::ofstream truncate(cassette_, std::ios::binary | std::ios::trunc);
  if (!truncate) throw Error(ErrorCode::io, "cannot write cassette " + cassette_.string());
}

std::vector<ScoredLabel> RecordingScorer::score(const ScoreRequest& request) {
  auto scored = inner_->score(request);
  json line{{"request", json::parse(request_body(inner_->model_id(), request))},
            {"response", scores_json(scored)}};
  std::lock_guard lock(mutex_);
  std::ofstream out(cassette_, std::ios::binary | std::ios::app);
  out << line.dump() << '\n';
  if (!out) throw Error(ErrorCode::io, "failed appending to cassette " + cassette_.string());
  return scored;
}

ReplayScorer::ReplayScorer(const std::filesystem::path& cassette, std::string model_id)
    : model_id_(std::move(model_id)) {
  std::ifstream in(cassette, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open cassette " + cassette.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      auto entry = json::parse(line);
      ScoreRequest request;
      request.continuations = entry.at("request").at("continuations").get<std::vector<std::string>>();
      responses_[entry.at("request").dump()] = parse_scores(entry.at("response"), request);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::parse, cassette.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::vector<ScoredLabel> ReplayScorer::score(const ScoreRequest& request) {
  request.validate();
  auto it = responses_.find(json::parse(request_body(model_id_, request)).dump());
  if (it == responses_.end()) {
    throw Error(ErrorCode::cassette_miss, "request not found in cassette");
  }
  auto out = it->second;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].label = request.labels.empty() ? request.continuations[i] : request.labels[i];
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(const ScorerDescriptor& descriptor, const PromptTemplate& layout) {
  descriptor.validate();
  if (descriptor.cassette_mode == CassetteMode::replay) {
    return std::make_unique<ReplayScorer>(descriptor.cassette, descriptor.model_id);
  }
  std::unique_ptr<Scorer> scorer;
  if (descriptor.kind == ScorerKind::mock) {
    scorer = std::make_unique<MockScorer>(descriptor.mock_mode, descriptor.salt, layout, descriptor.model_id);
  } else {
    auto remote = descriptor;
    if (const char* url = std::getenv("SHOTLOCKER_SCORER_URL"); url != nullptr && *url != '\0') {
      remote.endpoint = url;
    }
    scorer = std::make_unique<RemoteScorer>(std::move(remote));
  }
  if (descriptor.cassette_mode == CassetteMode::record) {
    scorer = std::make_unique<RecordingScorer>(std::move(scorer), descriptor.cassette);
  }
  return scorer;
}

std::vector<ScoredLabel> score_labels(Scorer& scorer, const ScoreRequest& request) {
  return scorer.score(request);
}

std::vector<ScoredLabel> score_labels(const ScorerDescriptor& descriptor, const ScoreRequest& request) {
  return make_scorer(descriptor)->score(request);
}

std::vector<std::vector<ScoredLabel>> score_all(Scorer& scorer, std::span<const ScoreRequest> requests,
                                                std::size_t max_concurrent, std::size_t* failed_index) {
  std::vector<std::vector<ScoredLabel>> results(requests.size());
  const std::size_t workers = std::min(std::max<std::size_t>(max_concurrent, 1), requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      try {
        results[i] = scorer.score(requests[i]);
      } catch (...) {
        if (failed_index != nullptr) *failed_index = i;
        throw;
      }
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(requests.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
          try {
            results[i] = scorer.score(requests[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    if (failed_index != nullptr) *failed_index = i;
    std::rethrow_exception(errors[i]);
  }
  return results;
}

std::string predict_label(std::span<const ScoredLabel> scored, std::span<const std::string> label_order) {
  if (scored.empty()) throw Error(ErrorCode::empty_input, "cannot predict from an empty score list");
  auto order_of = [&](std::size_t i) {
    auto it = std::find(label_order.begin(), label_order.end(), scored[i].label);
    return it == label_order.end() ? label_order.size() + i : static_cast<std::size_t>(it - label_order.begin());
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].logprob > scored[best].logprob ||
        (scored[i].logprob == scored[best].logprob && order_of(i) < order_of(best))) {
      best = i;
    }
  }
  return scored[best].label;
}

std::vector<ScoredLabel> per_token_mean(std::vector<ScoredLabel> scored) {
  for (auto& s : scored) s.logprob /= static_cast<double>(std::max(s.token_count, 1));
  return scored;
}

}  // namespace shotlocker
