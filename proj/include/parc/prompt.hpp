#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "parc/corpus.hpp"

namespace parc {

struct PromptOptions {
  // Joins contexts and the masked input.
  std::string separator = " ";
  // Hard limit in code points; exceeding it is an error, never a truncation.
  std::size_t max_prompt_chars = 4000;
};

// A filled cross-lingual context plus the corpus id it came from.
struct Context {
  std::string text;
  std::string source_id;
};

struct AssembledPrompt {
  std::string text;
  std::size_t mask_position = 0;  // code-point offset of "[MASK]" in text
  std::vector<std::string> candidates;  // verbalizer words, label-index order
  std::vector<std::string> provenance;  // context sample ids, in prompt order
};

// Substitutes the sample's segments for [X] (or [X1]/[X2]) verbatim; [MASK]
// stays. Segments containing a literal "[MASK]" are rejected.
std::string apply_pattern(const PatternTemplate& pattern, const Sample& sample);

// The pattern applied to a retrieved sample, with [MASK] filled by the
// verbalizer word of `label`.
std::string build_context(const PatternTemplate& pattern, const Sample& retrieved, const Label& label,
                          const TaskSpec& spec);

// Contexts (in the given order) followed by the masked input, joined by
// options.separator.
AssembledPrompt assemble_prompt(std::span<const Context> contexts, const Sample& input,
                                const PatternTemplate& pattern, const TaskSpec& spec,
                                const PromptOptions& options = {});

}  // namespace parc
