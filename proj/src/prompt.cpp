#include "parc/prompt.hpp"

#include "parc/error.hpp"
#include "parc/util.hpp"

namespace parc {

namespace {

// Finds the next placeholder at or after `from`; returns npos when none.
std::size_t next_placeholder(std::string_view text, std::size_t from, std::string_view& which) {
  static constexpr std::string_view kTokens[] = {kFirstInputToken, kSecondInputToken, kInputToken};
  std::size_t best = std::string_view::npos;
  for (auto token : kTokens) {
    const auto pos = text.find(token, from);
    if (pos < best) {
      best = pos;
      which = token;
    }
  }
  return best;
}

}  // namespace

std::string apply_pattern(const PatternTemplate& pattern, const Sample& sample) {
  const auto& tmpl = pattern.text();
  const int arity = static_cast<int>(sample.segments.size());
  try {
    pattern.validate(arity);
  } catch (const ConfigError& e) {
    throw DataError("sample \"" + sample.id + "\": arity mismatch: " + e.what());
  }
  for (const auto& seg : sample.segments) {
    if (seg.find(kMaskToken) != std::string::npos) {
      throw DataError("sample \"" + sample.id + "\" contains a literal [MASK]");
    }
  }

  std::string out;
  out.reserve(tmpl.size() + sample.segments[0].size() + (arity == 2 ? sample.segments[1].size() : 0));
  std::size_t cursor = 0;
  std::string_view which;
  for (auto pos = next_placeholder(tmpl, cursor, which); pos != std::string_view::npos;
       pos = next_placeholder(tmpl, cursor, which)) {
    out.append(tmpl, cursor, pos - cursor);
    if (which == kSecondInputToken) {
      out += sample.segments[1];
    } else {
      out += sample.segments[0];
    }
    cursor = pos + which.size();
  }
  out.append(tmpl, cursor, std::string::npos);
  return out;
}

std::string build_context(const PatternTemplate& pattern, const Sample& retrieved, const Label& label,
                          const TaskSpec& spec) {
  if (label.index >= spec.num_labels() || spec.labels()[label.index].name != label.name) {
    throw DataError("unknown label \"" + label.name + "\" (index " + std::to_string(label.index) +
                    ") for task " + spec.task_id());
  }
  auto text = apply_pattern(pattern, retrieved);
  const auto mask = text.find(kMaskToken);
  text.replace(mask, kMaskToken.size(), spec.word(label.index));
  return text;
}

AssembledPrompt assemble_prompt(std::span<const Context> contexts, const Sample& input,
                                const PatternTemplate& pattern, const TaskSpec& spec,
                                const PromptOptions& options) {
  if (static_cast<int>(input.segments.size()) != spec.arity()) {
    throw DataError("input \"" + input.id + "\" has " + std::to_string(input.segments.size()) +
                    " segment(s); task expects " + std::to_string(spec.arity()));
  }
  if (options.separator.find(kMaskToken) != std::string::npos) {
    throw ConfigError("prompt separator contains [MASK]");
  }
  AssembledPrompt prompt;
  prompt.candidates = spec.words();
  for (const auto& ctx : contexts) {
    if (ctx.text.find(kMaskToken) != std::string::npos) {
      throw DataError("context from \"" + ctx.source_id + "\" contains [MASK]");
    }
    prompt.text += ctx.text;
    prompt.text += options.separator;
    prompt.provenance.push_back(ctx.source_id);
  }
  const auto prefix_bytes = prompt.text.size();
  const auto masked_input = apply_pattern(pattern, input);
  prompt.text += masked_input;
  // A segment ending in "[MAS" next to template text "K]" could forge a second mask.
  if (count_occurrences(prompt.text, kMaskToken) != 1) {
    throw DataError("prompt for \"" + input.id + "\" does not contain exactly one [MASK]");
  }

  const auto mask_byte = prefix_bytes + masked_input.find(kMaskToken);
  prompt.mask_position = utf8_length(std::string_view(prompt.text).substr(0, mask_byte));

  const auto length = utf8_length(prompt.text);
  if (length > options.max_prompt_chars) {
    throw DataError("prompt for \"" + input.id + "\" has " + std::to_string(length) +
                    " characters, over the limit of " + std::to_string(options.max_prompt_chars));
  }
  return prompt;
}

}  // namespace parc
