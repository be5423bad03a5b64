#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "parc/scorer.hpp"

namespace parc::testing {

inline std::filesystem::path source_dir() { return PARC_SOURCE_DIR; }

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("parc-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

// Backend driven by a callback; counts score() calls.
class FunctionScorer : public ScorerBackend {
 public:
  using Fn = std::function<std::vector<double>(const ScoreRequest&)>;
  explicit FunctionScorer(Fn fn, std::string id = "fn") : fn_(std::move(fn)), id_(std::move(id)) {}

  std::string backend_id() const override { return id_; }
  bool deterministic() const override { return true; }
  std::vector<ScoreVector> score(std::span<const ScoreRequest> batch) override {
    ++calls_;
    std::vector<ScoreVector> out;
    for (const auto& r : batch) {
      ++prompts_;
      out.push_back(ScoreVector{fn_(r)});
    }
    return out;
  }
  std::vector<std::vector<float>> embed(std::span<const std::string>) override { return {}; }

  std::size_t calls() const { return calls_; }
  std::size_t prompts() const { return prompts_; }

 private:
  Fn fn_;
  std::string id_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> prompts_{0};
};

// Uniform scores in (0, 1) that sum below 1, seeded by the prompt bytes.
inline std::vector<double> hashed_scores(const ScoreRequest& r) {
  std::seed_seq seq(r.prompt.begin(), r.prompt.end());
  std::mt19937 rng(seq);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> raw(r.candidates.size());
  double sum = 0.0;
  for (auto& x : raw) sum += (x = u(rng));
  for (auto& x : raw) x = 0.9 * x / sum;
  return raw;
}

inline std::vector<float> random_vector(std::mt19937& rng, std::size_t dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline std::string random_word(std::mt19937& rng, std::size_t max_len = 8) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string w;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) w += alphabet[pick(rng)];
  return w;
}

}  // namespace parc::testing
