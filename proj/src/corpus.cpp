#include "parc/corpus.hpp"

#include <json.hpp>
#include <set>
#include <sstream>

#include "parc/error.hpp"
#include "parc/util.hpp"

namespace parc {

using nlohmann::ordered_json;

void PatternTemplate::validate(int arity) const {
  const auto masks = count_occurrences(text_, kMaskToken);
  if (masks != 1) {
    throw ConfigError("pattern \"" + text_ + "\" must contain exactly one [MASK], found " +
                      std::to_string(masks));
  }
  const auto x = count_occurrences(text_, kInputToken);
  const auto x1 = count_occurrences(text_, kFirstInputToken);
  const auto x2 = count_occurrences(text_, kSecondInputToken);
  const bool ok = arity == 1 ? (x == 1 && x1 == 0 && x2 == 0) : (x == 0 && x1 == 1 && x2 == 1);
  if (!ok) {
    throw ConfigError("pattern \"" + text_ + "\" does not match arity " + std::to_string(arity));
  }
}

TaskSpec::TaskSpec(std::string task_id, int arity, std::vector<PatternTemplate> patterns,
                   std::vector<std::pair<std::string, std::string>> verbalizer)
    : task_id_(std::move(task_id)), arity_(arity), patterns_(std::move(patterns)) {
  labels_.reserve(verbalizer.size());
  words_.reserve(verbalizer.size());
  for (auto& [name, word] : verbalizer) {
    labels_.push_back(Label{labels_.size(), std::move(name)});
    words_.push_back(std::move(word));
  }
}

const PatternTemplate& TaskSpec::pattern(std::size_t i) const {
  if (i >= patterns_.size()) {
    throw ConfigError("pattern index " + std::to_string(i) + " out of range for task " + task_id_);
  }
  return patterns_[i];
}

const Label& TaskSpec::label(std::size_t index) const {
  if (index >= labels_.size()) {
    throw DataError("unknown label index " + std::to_string(index) + " for task " + task_id_);
  }
  return labels_[index];
}

std::optional<Label> TaskSpec::find_label(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l;
  }
  return std::nullopt;
}

const Label& TaskSpec::label_by_name(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l;
  }
  throw DataError("unknown label \"" + std::string(name) + "\" for task " + task_id_);
}

const std::string& TaskSpec::word(std::size_t label_index) const {
  return words_.at(label(label_index).index);
}

const Label& TaskSpec::label_for_word(std::string_view word) const {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] == word) return labels_[i];
  }
  throw DataError("no label verbalized as \"" + std::string(word) + "\"");
}

void validate_task(const TaskSpec& spec) {
  if (spec.arity() != 1 && spec.arity() != 2) {
    throw ConfigError("task " + spec.task_id() + ": arity must be 1 or 2");
  }
  if (spec.patterns().empty()) throw ConfigError("task " + spec.task_id() + ": no patterns");
  if (spec.num_labels() < 2) throw ConfigError("task " + spec.task_id() + ": fewer than two labels");
  for (const auto& p : spec.patterns()) p.validate(spec.arity());

  std::set<std::string_view> names;
  std::set<std::string_view> words;
  for (std::size_t i = 0; i < spec.num_labels(); ++i) {
    const auto& name = spec.labels()[i].name;
    const auto& word = spec.words()[i];
    if (name.empty()) throw ConfigError("task " + spec.task_id() + ": empty label name");
    if (word.empty()) throw ConfigError("task " + spec.task_id() + ": empty verbalizer for " + name);
    if (!names.insert(name).second) {
      throw ConfigError("task " + spec.task_id() + ": duplicate label \"" + name + "\"");
    }
    if (!words.insert(word).second) {
      throw ConfigError("task " + spec.task_id() + ": duplicate verbalizer word \"" + word + "\"");
    }
    if (word.find(kMaskToken) != std::string::npos) {
      throw ConfigError("task " + spec.task_id() + ": verbalizer contains [MASK]");
    }
  }
}

TaskSpec parse_task(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("task file is not valid JSON: ") + e.what());
  }
  try {
    std::vector<PatternTemplate> patterns;
    for (const auto& p : j.at("patterns")) patterns.emplace_back(p.get<std::string>());
    std::vector<std::pair<std::string, std::string>> verbalizer;
    for (const auto& [name, word] : j.at("verbalizer").items()) {
      verbalizer.emplace_back(name, word.get<std::string>());
    }
    TaskSpec spec(j.at("task_id").get<std::string>(), j.at("arity").get<int>(), std::move(patterns),
                  std::move(verbalizer));
    validate_task(spec);
    return spec;
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("task file schema error: ") + e.what());
  }
}

TaskSpec load_task(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_task(text);
}

Corpus::Corpus(std::string task_id, std::vector<Sample> samples)
    : task_id_(std::move(task_id)), samples_(std::move(samples)) {
  by_id_.reserve(samples_.size());
  labeled_ = !samples_.empty();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!by_id_.emplace(samples_[i].id, i).second) {
      throw DataError("duplicate sample id \"" + samples_[i].id + "\"");
    }
    if (!samples_[i].gold_label) labeled_ = false;
  }
}

const Sample* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &samples_[it->second];
}

std::optional<std::size_t> Corpus::position(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

namespace {

Sample parse_record(const ordered_json& j, const TaskSpec& task) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.language = j.at("language").get<std::string>();
  for (const auto& seg : j.at("segments")) s.segments.push_back(seg.get<std::string>());
  if (s.id.empty()) throw DataError("empty id");
  if (static_cast<int>(s.segments.size()) != task.arity()) {
    throw DataError("sample \"" + s.id + "\" has " + std::to_string(s.segments.size()) +
                    " segment(s); task " + task.task_id() + " expects " +
                    std::to_string(task.arity()));
  }
  for (const auto& seg : s.segments) {
    if (!is_valid_utf8(seg)) throw DataError("sample \"" + s.id + "\" is not valid UTF-8");
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    s.gold_label = task.label_by_name(it->get<std::string>());
  }
  return s;
}

}  // namespace

Corpus parse_corpus(std::string_view jsonl, const TaskSpec& task) {
  if (!is_valid_utf8(jsonl)) throw DataError("corpus is not valid UTF-8");
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      samples.push_back(parse_record(ordered_json::parse(line), task));
    } catch (const ordered_json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const Error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Corpus(task.task_id(), std::move(samples));
}

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task) {
  try {
    return parse_corpus(read_file(path), task);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples()) {
    ordered_json j;
    j["id"] = s.id;
    j["segments"] = s.segments;
    j["language"] = s.language;
    if (s.gold_label) j["label"] = s.gold_label->name;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string joined_text(const Sample& sample) {
  std::string out;
  for (std::size_t i = 0; i < sample.segments.size(); ++i) {
    if (i > 0) out += ' ';
    out += sample.segments[i];
  }
  return out;
}

}  // namespace parc
