#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace parc {

// Per-candidate probability mass for one prompt, aligned with its candidate list.
struct ScoreVector {
  std::vector<double> probs;

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

// Scales probs to sum to 1. Throws DataError when the sum is zero.
ScoreVector renormalize(const ScoreVector& s);

// Boundary check for anything a backend hands back: finite, >= 0, sum <= 1 + 1e-6,
// and one entry per candidate. Throws BackendError describing the violation.
void validate_scores(const ScoreVector& s, std::size_t expected_size, std::string_view origin);

struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> candidates;
};

// A masked-LM and sentence-encoder backend.
class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;

  virtual std::string backend_id() const = 0;
  virtual bool deterministic() const = 0;

  // One ScoreVector per request, in request order.
  virtual std::vector<ScoreVector> score(std::span<const ScoreRequest> batch) = 0;
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

// Deterministic table-lookup backend. The fixture file holds JSON lines of
//   {"prompt_sha256": "...", "scores": {"word": prob, ...}}
//   {"text_sha256": "...", "vector": [...]}
// keyed by the SHA-256 of the UTF-8 prompt / text.
class FixtureScorer : public ScorerBackend {
 public:
  explicit FixtureScorer(const std::filesystem::path& path);
  static FixtureScorer from_string(std::string_view jsonl, std::string id = "fixture:inline");

  std::string backend_id() const override { return id_; }
  bool deterministic() const override { return true; }
  std::vector<ScoreVector> score(std::span<const ScoreRequest> batch) override;
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

  ScoreVector fixture_score(std::string_view prompt, std::span<const std::string> candidates) const;
  std::size_t num_prompts() const { return scores_.size(); }

 private:
  FixtureScorer(std::string id, std::string_view jsonl);

  std::string id_;
  std::unordered_map<std::string, std::unordered_map<std::string, double>> scores_;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

struct HttpScorerOptions {
  std::string host = "127.0.0.1";
  int port = 8000;
  std::size_t max_batch = 32;
  std::size_t max_inflight = 4;
  int retries = 2;
  int timeout_seconds = 60;
};

// Client for the model sidecar:
//   POST /score {"prompts": [...], "candidates": [[...], ...]} -> {"probs": [[...], ...]}
//   POST /embed {"texts": [...]} -> {"vectors": [[...], ...], "dim": D}
//   GET  /info  -> {"model": ..., "deterministic": bool}
class HttpScorer : public ScorerBackend {
 public:
  explicit HttpScorer(HttpScorerOptions options);

  std::string backend_id() const override;
  bool deterministic() const override;
  std::vector<ScoreVector> score(std::span<const ScoreRequest> batch) override;
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

  // Number of HTTP requests that reached the transport layer (including retries).
  std::size_t request_count() const { return requests_.load(); }

 private:
  void fetch_info() const;
  std::string post(const std::string& path, const std::string& body) const;

  HttpScorerOptions options_;
  mutable std::once_flag info_once_;
  mutable std::string model_;
  mutable bool deterministic_ = false;
  mutable std::atomic<std::size_t> requests_{0};
};

// Memoizing decorator keyed by SHA-256 of (backend id, prompt, candidates).
// With a file path, entries persist as append-only JSON lines
// {"key": ..., "probs": [...]} and are reloaded on construction.
class CachingScorer : public ScorerBackend {
 public:
  explicit CachingScorer(std::shared_ptr<ScorerBackend> inner, std::filesystem::path cache_file = {});

  std::string backend_id() const override { return inner_->backend_id(); }
  bool deterministic() const override { return inner_->deterministic(); }
  std::vector<ScoreVector> score(std::span<const ScoreRequest> batch) override;
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override {
    return inner_->embed(texts);
  }

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t size() const;

  static std::string cache_key(std::string_view backend_id, const ScoreRequest& request);

 private:
  std::shared_ptr<ScorerBackend> inner_;
  std::filesystem::path cache_file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, ScoreVector> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// "fixture:<path>" or "http://host:port".
std::shared_ptr<ScorerBackend> make_backend(std::string_view spec);

}  // namespace parc
