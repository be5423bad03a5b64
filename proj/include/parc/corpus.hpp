#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace parc {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kInputToken = "[X]";
inline constexpr std::string_view kFirstInputToken = "[X1]";
inline constexpr std::string_view kSecondInputToken = "[X2]";

struct Label {
  std::size_t index = 0;
  std::string name;

  friend bool operator==(const Label&, const Label&) = default;
};

// A cloze template such as "[X] All in all, it was [MASK]."
class PatternTemplate {
 public:
  PatternTemplate() = default;
  explicit PatternTemplate(std::string text) : text_(std::move(text)) {}

  const std::string& text() const { return text_; }

  // Throws ConfigError unless the template has exactly one [MASK] and the
  // input placeholders required by `arity` (1: [X]; 2: [X1] and [X2]).
  void validate(int arity) const;

 private:
  std::string text_;
};

// Cloze patterns plus a bijective label -> verbalizer word mapping.
// Label indices follow the order of the verbalizer entries.
class TaskSpec {
 public:
  TaskSpec(std::string task_id, int arity, std::vector<PatternTemplate> patterns,
           std::vector<std::pair<std::string, std::string>> verbalizer);

  const std::string& task_id() const { return task_id_; }
  int arity() const { return arity_; }
  const std::vector<PatternTemplate>& patterns() const { return patterns_; }
  const PatternTemplate& pattern(std::size_t i) const;

  std::size_t num_labels() const { return labels_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  const Label& label(std::size_t index) const;
  const Label& label_by_name(std::string_view name) const;
  std::optional<Label> find_label(std::string_view name) const;

  const std::string& word(std::size_t label_index) const;
  // Verbalizer words in label-index order.
  const std::vector<std::string>& words() const { return words_; }
  // Inverse verbalizer.
  const Label& label_for_word(std::string_view word) const;

 private:
  std::string task_id_;
  int arity_;
  std::vector<PatternTemplate> patterns_;
  std::vector<Label> labels_;
  std::vector<std::string> words_;
};

// Throws ConfigError if any TaskSpec invariant is violated.
void validate_task(const TaskSpec& spec);

TaskSpec load_task(const std::filesystem::path& path);
TaskSpec parse_task(std::string_view json_text);

struct Sample {
  std::string id;
  std::vector<std::string> segments;
  std::string language;
  std::optional<Label> gold_label;
};

class Corpus {
 public:
  Corpus(std::string task_id, std::vector<Sample> samples);

  const std::string& task_id() const { return task_id_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  // True iff every sample carries a gold label.
  bool labeled() const { return labeled_; }

  const Sample& at(std::size_t position) const { return samples_.at(position); }
  const Sample* find(std::string_view id) const;
  std::optional<std::size_t> position(std::string_view id) const;

 private:
  std::string task_id_;
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
  bool labeled_ = false;
};

// JSON lines: {"id", "segments": [...], "language", "label"?}. Errors carry
// the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task);
Corpus parse_corpus(std::string_view jsonl, const TaskSpec& task);

// Canonical JSON-lines rendering of a corpus.
std::string serialize_corpus(const Corpus& corpus);

// Segments joined with a single space; the text sent to embedding backends.
std::string joined_text(const Sample& sample);

}  // namespace parc
