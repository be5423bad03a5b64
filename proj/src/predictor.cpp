#include "parc/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "parc/error.hpp"

namespace parc {

std::string_view to_string(Mode mode) { return mode == Mode::kLabeled ? "labeled" : "unlabeled"; }

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kSingle:
      return "single";
    case Strategy::kBoR:
      return "bor";
    case Strategy::kConc:
      return "conc";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "labeled") return Mode::kLabeled;
  if (text == "unlabeled") return Mode::kUnlabeled;
  throw ConfigError("unknown mode \"" + std::string(text) + "\" (labeled|unlabeled)");
}

Strategy parse_strategy(std::string_view text) {
  if (text == "bor") return Strategy::kBoR;
  if (text == "conc") return Strategy::kConc;
  if (text == "single") return Strategy::kSingle;
  throw ConfigError("unknown strategy \"" + std::string(text) + "\" (bor|conc|single)");
}

Label predict_label(const ScoreVector& scores, const TaskSpec& spec) {
  if (scores.probs.size() != spec.num_labels()) {
    throw DataError("score vector has " + std::to_string(scores.probs.size()) + " entries for " +
                    std::to_string(spec.num_labels()) + " labels");
  }
  std::size_t best = 0;
  bool any_positive = false;
  for (std::size_t i = 0; i < scores.probs.size(); ++i) {
    const double p = scores.probs[i];
    if (!std::isfinite(p) || p < 0.0) throw DataError("invalid probability in score vector");
    if (p > 0.0) any_positive = true;
    if (p > scores.probs[best]) best = i;
  }
  if (!any_positive) throw DataError("degenerate score vector: all probabilities are zero");
  return spec.label(best);
}

Predictor::Predictor(const TaskSpec& spec, std::size_t pattern_index, ScorerBackend& scorer,
                     const Corpus& hrl, PredictorOptions options)
    : spec_(spec),
      pattern_(spec.pattern(pattern_index)),
      scorer_(scorer),
      hrl_(hrl),
      options_(std::move(options)) {}

ScoreVector Predictor::score_one(const AssembledPrompt& prompt) const {
  const ScoreRequest req{prompt.text, prompt.candidates};
  auto out = scorer_.score(std::span(&req, 1));
  if (out.size() != 1) throw BackendError("backend returned a misaligned batch");
  return std::move(out.front());
}

Prediction Predictor::direct(const Sample& input) const {
  const auto prompt = assemble_prompt({}, input, pattern_, spec_, options_.prompt);
  const auto scores = score_one(prompt);
  Prediction p;
  p.input_id = input.id;
  p.label = predict_label(scores, spec_);
  p.per_label_score = renormalize(scores).probs;
  p.strategy = Strategy::kSingle;
  p.k = 0;
  p.prompts.push_back(prompt.text);
  return p;
}

Label Predictor::self_predict(const Sample& hrl_sample) const {
  {
    std::lock_guard lock(self_mutex_);
    if (auto it = self_cache_.find(hrl_sample.id); it != self_cache_.end()) return it->second;
  }
  // Computed outside the lock; concurrent first calls agree for deterministic scorers.
  Label label = direct(hrl_sample).label;
  std::lock_guard lock(self_mutex_);
  return self_cache_.emplace(hrl_sample.id, std::move(label)).first->second;
}

std::size_t Predictor::self_prediction_cache_size() const {
  std::lock_guard lock(self_mutex_);
  return self_cache_.size();
}

Label Predictor::context_label(const Sample& hrl_sample, Mode mode) const {
  if (mode == Mode::kUnlabeled) return self_predict(hrl_sample);
  if (!hrl_sample.gold_label) {
    throw DataError("labeled mode needs a gold label on retrieved sample \"" + hrl_sample.id + "\"");
  }
  return *hrl_sample.gold_label;
}

const Sample& Predictor::hrl_sample(const RetrievalHit& hit) const {
  const Sample* s = hrl_.find(hit.sample_id);
  if (s == nullptr) throw DataError("retrieved id \"" + hit.sample_id + "\" is not in the HRL corpus");
  return *s;
}

Context Predictor::make_context(const RetrievalHit& hit, Mode mode) const {
  const Sample& s = hrl_sample(hit);
  return Context{build_context(pattern_, s, context_label(s, mode), spec_), s.id};
}

Prediction Predictor::single(const Sample& input, const RetrievalHit& hit, Mode mode) const {
  const Context ctx = make_context(hit, mode);
  const auto prompt = assemble_prompt(std::span(&ctx, 1), input, pattern_, spec_, options_.prompt);
  const auto raw = score_one(prompt);
  const auto scores = options_.bor_renormalize ? renormalize(raw) : raw;
  Prediction p;
  p.input_id = input.id;
  p.label = predict_label(scores, spec_);
  p.per_label_score = scores.probs;
  p.mode = mode;
  p.strategy = Strategy::kSingle;
  p.k = 1;
  p.context_ids = prompt.provenance;
  p.prompts.push_back(prompt.text);
  return p;
}

Prediction Predictor::bor(const Sample& input, std::span<const RetrievalHit> hits, Mode mode) const {
  if (hits.empty()) throw DataError("bag-of-retrieval needs at least one hit for \"" + input.id + "\"");
  Prediction p;
  p.input_id = input.id;
  p.mode = mode;
  p.strategy = Strategy::kBoR;
  p.k = hits.size();

  std::vector<ScoreRequest> requests;
  requests.reserve(hits.size());
  for (const auto& hit : hits) {
    const Context ctx = make_context(hit, mode);
    auto prompt = assemble_prompt(std::span(&ctx, 1), input, pattern_, spec_, options_.prompt);
    p.context_ids.push_back(ctx.source_id);
    p.prompts.push_back(prompt.text);
    requests.push_back(ScoreRequest{std::move(prompt.text), std::move(prompt.candidates)});
  }
  const auto scored = scorer_.score(requests);
  if (scored.size() != requests.size()) throw BackendError("backend returned a misaligned batch");

  std::vector<double> sums(spec_.num_labels(), 0.0);
  for (const auto& raw : scored) {
    const auto s = options_.bor_renormalize ? renormalize(raw) : raw;
    if (s.probs.size() != sums.size()) throw DataError("score vector size does not match label count");
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += s.probs[i];
  }
  p.per_label_score = sums;
  p.label = predict_label(ScoreVector{std::move(sums)}, spec_);
  return p;
}

Prediction Predictor::conc(const Sample& input, std::span<const RetrievalHit> hits, Mode mode) const {
  if (hits.empty()) throw DataError("concatenation needs at least one hit for \"" + input.id + "\"");
  std::vector<const RetrievalHit*> ordered;
  ordered.reserve(hits.size());
  for (const auto& h : hits) ordered.push_back(&h);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RetrievalHit* a, const RetrievalHit* b) { return a->rank < b->rank; });

  std::vector<Context> contexts;
  contexts.reserve(ordered.size());
  for (const auto* h : ordered) contexts.push_back(make_context(*h, mode));
  const auto prompt = assemble_prompt(contexts, input, pattern_, spec_, options_.prompt);
  const auto scores = renormalize(score_one(prompt));

  Prediction p;
  p.input_id = input.id;
  p.label = predict_label(scores, spec_);
  p.per_label_score = scores.probs;
  p.mode = mode;
  p.strategy = Strategy::kConc;
  p.k = hits.size();
  p.context_ids = prompt.provenance;
  p.prompts.push_back(prompt.text);
  return p;
}

}  // namespace parc
