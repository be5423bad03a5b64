#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parc/corpus.hpp"
#include "parc/prompt.hpp"
#include "parc/retriever.hpp"
#include "parc/scorer.hpp"

namespace parc {

// Where context labels come from: gold labels, or self-prediction.
enum class Mode { kLabeled, kUnlabeled };
enum class Strategy { kSingle, kBoR, kConc };

std::string_view to_string(Mode mode);
std::string_view to_string(Strategy strategy);
Mode parse_mode(std::string_view text);
Strategy parse_strategy(std::string_view text);

struct Prediction {
  std::string input_id;
  Label label;
  std::vector<double> per_label_score;
  Mode mode = Mode::kLabeled;
  Strategy strategy = Strategy::kSingle;
  std::size_t k = 0;
  std::vector<std::string> context_ids;
  std::vector<std::string> prompts;  // exactly what was sent to the scorer
};

// Highest-probability label; ties go to the lowest label index. Throws
// DataError for a size mismatch or an all-zero vector.
Label predict_label(const ScoreVector& scores, const TaskSpec& spec);

struct PredictorOptions {
  PromptOptions prompt;
  // Renormalize each per-context score vector before Bag-of-Retrieval summation.
  bool bor_renormalize = true;
};

// Classification over one task, one pattern and one HRL retrieval pool.
// Safe to call concurrently when the scorer is.
class Predictor {
 public:
  Predictor(const TaskSpec& spec, std::size_t pattern_index, ScorerBackend& scorer, const Corpus& hrl,
            PredictorOptions options = {});

  const TaskSpec& spec() const { return spec_; }
  const PatternTemplate& pattern() const { return pattern_; }

  // Context-free prompt; also the Direct baseline.
  Prediction direct(const Sample& input) const;

  // Label of an HRL sample from its context-free prompt. Memoized per sample id.
  Label self_predict(const Sample& hrl_sample) const;

  // Label used to verbalize a retrieved sample in the given mode.
  Label context_label(const Sample& hrl_sample, Mode mode) const;

  // One retrieved context.
  Prediction single(const Sample& input, const RetrievalHit& hit, Mode mode) const;

  // Bag-of-Retrieval: one prompt per hit, component-wise sum, argmax.
  Prediction bor(const Sample& input, std::span<const RetrievalHit> hits, Mode mode) const;

  // All contexts in rank order in one prompt.
  Prediction conc(const Sample& input, std::span<const RetrievalHit> hits, Mode mode) const;

  std::size_t self_prediction_cache_size() const;

 private:
  const Sample& hrl_sample(const RetrievalHit& hit) const;
  Context make_context(const RetrievalHit& hit, Mode mode) const;
  ScoreVector score_one(const AssembledPrompt& prompt) const;

  const TaskSpec& spec_;
  const PatternTemplate& pattern_;
  ScorerBackend& scorer_;
  const Corpus& hrl_;
  PredictorOptions options_;

  mutable std::mutex self_mutex_;
  mutable std::unordered_map<std::string, Label> self_cache_;
};

}  // namespace parc
