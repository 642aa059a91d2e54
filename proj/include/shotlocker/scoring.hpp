#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shotlocker/error.hpp"
#include "shotlocker/prompting.hpp"

namespace shotlocker {

struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> continuations;
  /// Label names aligned with continuations; empty means the continuation
  /// strings are the label names. Never sent over the wire.
  std::vector<std::string> labels;

  void validate() const;
};

struct ScoredLabel {
  std::string label;
  double logprob = 0.0;  // sum of per-token log-probabilities
  int token_count = 1;

  bool operator==(const ScoredLabel&) const = default;
};

enum class ScorerKind { remote, mock };
enum class MockMode { hash, label_echo };
enum class CassetteMode { off, record, replay };

struct ScorerDescriptor {
  ScorerKind kind = ScorerKind::mock;
  std::string endpoint;  // remote: base URL, e.g. http://127.0.0.1:8080
  std::string model_id = "mock";
  std::chrono::milliseconds timeout{30000};
  std::size_t max_concurrent = 1;
  int max_attempts = 4;
  std::chrono::milliseconds backoff{200};

  MockMode mock_mode = MockMode::label_echo;
  std::uint64_t salt = 0;

  std::filesystem::path cassette;
  CassetteMode cassette_mode = CassetteMode::off;

  void validate() const;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts, int status)
      : Error(ErrorCode::transport, message), attempts_(attempts), status_(status) {}

  int attempts() const noexcept { return attempts_; }
  /// Last HTTP status, or 0 when no response was received.
  int status() const noexcept { return status_; }

 private:
  int attempts_;
  int status_;
};

/// Returns one ScoredLabel per continuation, in request order. Implementations
/// are safe to call from several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<ScoredLabel> score(const ScoreRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

/// Pure test double. Hash mode maps a stable 64-bit hash of
/// (prompt, continuation, salt) into [-10, 0]. Label-echo mode returns
/// -0.1 * r, r = number of shot blocks whose label differs from the
/// (trimmed) continuation, so the majority shot label wins.
double mock_score(const std::string& prompt, const std::string& continuation, std::uint64_t salt,
                  MockMode mode = MockMode::hash, const PromptTemplate& layout = {});

class MockScorer final : public Scorer {
 public:
  MockScorer(MockMode mode, std::uint64_t salt, PromptTemplate layout = {},
             std::string model_id = "mock");
  std::vector<ScoredLabel> score(const ScoreRequest& request) override;
  std::string model_id() const override;

 private:
  MockMode mode_;
  std::uint64_t salt_;
  PromptTemplate layout_;
  std::string model_id_;
};

/// Client for POST {endpoint}/v1/score with exponential-backoff retries.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(ScorerDescriptor descriptor);
  std::vector<ScoredLabel> score(const ScoreRequest& request) override;
  std::string model_id() const override { return descriptor_.model_id; }

 private:
  ScorerDescriptor descriptor_;
};

/// Wraps another scorer and appends every request/response pair to a
/// JSON-lines cassette.
class RecordingScorer final : public Scorer {
 public:
  RecordingScorer(std::unique_ptr<Scorer> inner, std::filesystem::path cassette);
  std::vector<ScoredLabel> score(const ScoreRequest& request) override;
  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::unique_ptr<Scorer> inner_;
  std::filesystem::path cassette_;
  std::mutex mutex_;
};

/// Answers only from a recorded cassette; unknown requests throw cassette_miss.
class ReplayScorer final : public Scorer {
 public:
  ReplayScorer(const std::filesystem::path& cassette, std::string model_id);
  std::vector<ScoredLabel> score(const ScoreRequest& request) override;
  std::string model_id() const override { return model_id_; }
  std::size_t size() const { return responses_.size(); }

 private:
  std::string model_id_;
  std::unordered_map<std::string, std::vector<ScoredLabel>> responses_;
};

/// Wire body for a request: {"model", "prompt", "continuations"}.
std::string request_body(const std::string& model, const ScoreRequest& request);

/// Builds the scorer for a descriptor. SHOTLOCKER_SCORER_URL overrides the
/// endpoint of remote scorers; cassette settings wrap the result.
std::unique_ptr<Scorer> make_scorer(const ScorerDescriptor& descriptor,
                                    const PromptTemplate& layout = {});

std::vector<ScoredLabel> score_labels(Scorer& scorer, const ScoreRequest& request);
std::vector<ScoredLabel> score_labels(const ScorerDescriptor& descriptor,
                                      const ScoreRequest& request);

/// Scores every request with at most max_concurrent in flight. Results are
/// aligned with the input regardless of completion order. On failure the
/// error of the lowest failing request is rethrown and its position is
/// stored in `failed_index` when given.
std::vector<std::vector<ScoredLabel>> score_all(Scorer& scorer,
                                                std::span<const ScoreRequest> requests,
                                                std::size_t max_concurrent,
                                                std::size_t* failed_index = nullptr);

/// Argmax over logprob. Ties go to the label appearing first in label_order
/// (or first in the list when label_order is empty).
std::string predict_label(std::span<const ScoredLabel> scored,
                          std::span<const std::string> label_order = {});

/// Divides each logprob by its token count.
std::vector<ScoredLabel> per_token_mean(std::vector<ScoredLabel> scored);

}  // namespace shotlocker
