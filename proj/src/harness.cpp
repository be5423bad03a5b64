#include "parc/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>

#include "parc/error.hpp"
#include "parc/scorer.hpp"
#include "parc/util.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace parc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  static const std::set<std::string> kKeys = {
      "task",     "hrl_corpus", "index",    "hrl_language",    "test_sets", "scorer",           "mode",
      "strategy", "k",          "pattern",  "seed",            "output_dir", "baselines",       "bor_renormalize",
      "separator", "max_prompt_chars", "threads", "cache"};
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown config key \"" + key + "\"");
  }

  ExperimentConfig c;
  try {
    for (const char* key : {"task", "hrl_corpus", "index", "test_sets", "scorer", "output_dir"}) {
      if (!j.contains(key)) throw ConfigError(std::string("config is missing \"") + key + "\"");
    }
    c.task = resolve(base_dir, j["task"].get<std::string>());
    c.hrl_corpus = resolve(base_dir, j["hrl_corpus"].get<std::string>());
    c.index = resolve(base_dir, j["index"].get<std::string>());
    c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    c.hrl_language = j.value("hrl_language", c.hrl_language);

    c.scorer = j["scorer"].get<std::string>();
    if (c.scorer.starts_with("fixture:")) c.scorer = "fixture:" + resolve(base_dir, c.scorer.substr(8)).string();

    for (const auto& t : j["test_sets"]) {
      TestSet ts;
      ts.language = t.at("language").get<std::string>();
      ts.corpus = resolve(base_dir, t.at("corpus").get<std::string>());
      ts.queries = resolve(base_dir, t.value("queries", std::string()));
      c.test_sets.push_back(std::move(ts));
    }
    if (c.test_sets.empty()) throw ConfigError("config has no test sets");

    const std::string mode = j.value("mode", std::string("both"));
    if (mode == "both") {
      c.modes = {Mode::kUnlabeled, Mode::kLabeled};
    } else {
      c.modes = {parse_mode(mode)};
    }
    c.strategy = parse_strategy(j.value("strategy", std::string("bor")));

    if (j.contains("k")) {
      c.k_values.clear();
      if (j["k"].is_number()) {
        c.k_values.push_back(j["k"].get<std::size_t>());
      } else {
        for (const auto& k : j["k"]) c.k_values.push_back(k.get<std::size_t>());
      }
    }
    if (c.k_values.empty()) throw ConfigError("k list is empty");
    for (std::size_t i = 0; i < c.k_values.size(); ++i) {
      if (c.k_values[i] == 0) throw ConfigError("k must be at least 1");
      if (i > 0 && c.k_values[i] <= c.k_values[i - 1]) throw ConfigError("k list must be strictly ascending");
    }
    if (c.strategy == Strategy::kSingle && c.k_values != std::vector<std::size_t>{1}) {
      throw ConfigError("strategy single requires k = 1");
    }

    c.pattern = j.value("pattern", std::size_t{0});
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("baselines")) {
      c.baseline_majority = c.baseline_direct = c.baseline_random = false;
      for (const auto& b : j["baselines"]) {
        const auto name = b.get<std::string>();
        if (name == "maj") {
          c.baseline_majority = true;
        } else if (name == "direct") {
          c.baseline_direct = true;
        } else if (name == "random") {
          c.baseline_random = true;
        } else {
          throw ConfigError("unknown baseline \"" + name + "\" (maj|direct|random)");
        }
      }
    }
    c.bor_renormalize = j.value("bor_renormalize", true);
    c.prompt.separator = j.value("separator", c.prompt.separator);
    if (c.prompt.separator.find("[MASK]") != std::string::npos) throw ConfigError("separator contains [MASK]");
    c.prompt.max_prompt_chars = j.value("max_prompt_chars", c.prompt.max_prompt_chars);
    c.threads = j.value("threads", 0);
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    c.cache = j.value("cache", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.parent_path());
}

double accuracy(const std::vector<Prediction>& predictions, const Corpus& gold) {
  if (predictions.empty()) throw DataError("accuracy over zero predictions");
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    const Sample* s = gold.find(p.input_id);
    if (s == nullptr) throw DataError("prediction for unknown id \"" + p.input_id + "\"");
    if (!s->gold_label) throw DataError("gold sample \"" + p.input_id + "\" is unlabeled");
    if (s->gold_label->index == p.label.index) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Label majority_label(const Corpus& corpus, const TaskSpec& spec) {
  if (corpus.empty()) throw DataError("majority baseline over an empty corpus");
  std::vector<std::size_t> counts(spec.num_labels(), 0);
  for (const auto& s : corpus.samples()) {
    if (!s.gold_label) throw DataError("majority baseline needs gold labels; \"" + s.id + "\" has none");
    ++counts.at(s.gold_label->index);
  }
  const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
  return spec.label(static_cast<std::size_t>(best));
}

double majority_baseline(const Corpus& corpus, const TaskSpec& spec) {
  const Label maj = majority_label(corpus, spec);
  const auto n = std::count_if(corpus.samples().begin(), corpus.samples().end(),
                               [&maj](const Sample& s) { return s.gold_label->index == maj.index; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(corpus.size());
}

// --- ResultTable ---

ResultTable::ResultTable(std::vector<std::string> excluded_from_average) : excluded_(std::move(excluded_from_average)) {}

void ResultTable::set(const std::string& row, const std::string& column, double percent) {
  if (std::find(rows_.begin(), rows_.end(), row) == rows_.end()) rows_.push_back(row);
  if (std::find(columns_.begin(), columns_.end(), column) == columns_.end()) columns_.push_back(column);
  cells_[{row, column}] = percent;
}

std::optional<double> ResultTable::get(const std::string& row, const std::string& column) const {
  const auto it = cells_.find({row, column});
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

bool ResultTable::excluded(const std::string& column) const {
  return std::find(excluded_.begin(), excluded_.end(), column) != excluded_.end();
}

std::optional<double> ResultTable::average(const std::string& row) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& col : columns_) {
    if (excluded(col)) continue;
    if (const auto v = get(row, col)) {
      sum += std::stod(format_percent(*v));
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string ResultTable::render_tsv() const {
  std::string out = "method";
  for (const auto& c : columns_) out += "\t" + c;
  out += "\tAvg\n";
  for (const auto& r : rows_) {
    out += r;
    for (const auto& c : columns_) {
      const auto v = get(r, c);
      out += "\t" + (v ? format_percent(*v) : std::string("-"));
    }
    const auto avg = average(r);
    out += "\t" + (avg ? format_percent(*avg) : std::string("-"));
    out += '\n';
  }
  return out;
}

std::string ResultTable::render_json() const {
  ordered_json j;
  j["columns"] = columns_;
  j["excluded_from_average"] = excluded_;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows_) {
    ordered_json row;
    row["method"] = r;
    row["cells"] = ordered_json::object();
    for (const auto& c : columns_) {
      if (const auto v = get(r, c)) row["cells"][c] = std::stod(format_percent(*v));
    }
    const auto avg = average(r);
    row["avg"] = avg ? ordered_json(std::stod(format_percent(*avg))) : ordered_json(nullptr);
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::string method_row(std::string_view method, std::size_t k) {
  if (k == 0 || !method.starts_with("PARC")) return std::string(method);
  return std::string(method) + " k=" + std::to_string(k);
}

ResultTable table_from_records(const std::vector<PredictionRecord>& records,
                               const std::vector<std::string>& excluded_from_average) {
  struct Tally {
    std::size_t correct = 0;
    std::size_t total = 0;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Tally> tallies;
  for (const auto& r : records) {
    const std::pair key{method_row(r.method, r.k), r.language};
    auto [it, inserted] = tallies.try_emplace(key);
    if (inserted) order.push_back(key);
    ++it->second.total;
    if (r.prediction.label.name == r.gold) ++it->second.correct;
  }
  ResultTable table(excluded_from_average);
  for (const auto& key : order) {
    const auto& t = tallies[key];
    table.set(key.first, key.second, 100.0 * static_cast<double>(t.correct) / static_cast<double>(t.total));
  }
  return table;
}

std::string record_to_json(const PredictionRecord& r) {
  ordered_json j;
  j["language"] = r.language;
  j["method"] = r.method;
  j["k"] = r.k;
  j["input_id"] = r.prediction.input_id;
  j["gold"] = r.gold;
  j["label"] = r.prediction.label.name;
  j["scores"] = r.prediction.per_label_score;
  j["mode"] = to_string(r.prediction.mode);
  j["strategy"] = to_string(r.prediction.strategy);
  j["context_ids"] = r.prediction.context_ids;
  j["prompts"] = r.prediction.prompts;
  return j.dump();
}

PredictionRecord record_from_json(std::string_view line, const TaskSpec& spec) {
  try {
    const auto j = json::parse(line);
    PredictionRecord r;
    r.language = j.at("language").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.gold = j.at("gold").get<std::string>();
    spec.label_by_name(r.gold);
    r.prediction.input_id = j.at("input_id").get<std::string>();
    r.prediction.label = spec.label_by_name(j.at("label").get<std::string>());
    r.prediction.per_label_score = j.at("scores").get<std::vector<double>>();
    r.prediction.mode = parse_mode(j.at("mode").get<std::string>());
    r.prediction.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.prediction.k = r.k;
    r.prediction.context_ids = j.at("context_ids").get<std::vector<std::string>>();
    r.prediction.prompts = j.at("prompts").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad prediction record: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad prediction record: ") + e.what());
  }
}

namespace {

// Runs fn(i) for every i in [0, n) in parallel. The failure with the lowest i
// is rethrown with the sample id prefixed, keeping its category.
template <typename Fn>
void parallel_over(const Corpus& corpus, Fn&& fn) {
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "input \"" + corpus.at(i).id + "\": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    } catch (const BackendError& e) {
      throw BackendError(where + e.what());
    } catch (const std::exception& e) {
      throw DataError(where + e.what());
    }
  }
}

EmbeddingIndex query_index(const TestSet& ts, const Corpus& corpus, ScorerBackend& scorer) {
  if (!ts.queries.empty()) return load_any_index(ts.queries);
  std::vector<std::string> ids, texts;
  for (const auto& s : corpus.samples()) {
    ids.push_back(s.id);
    texts.push_back(joined_text(s));
  }
  auto vectors = scorer.embed(texts);
  if (vectors.size() != texts.size()) throw BackendError("embed returned a misaligned batch");
  return build_index(std::move(ids), vectors);
}

std::filesystem::path cache_file(const ExperimentConfig& config) {
  if (const char* env = std::getenv("PARC_CACHE_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / "scores.jsonl";
  }
  return config.output_dir / "cache" / "scores.jsonl";
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << body;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string mode_method(std::string_view prefix, Mode mode) {
  return std::string(prefix) + "-" + std::string(to_string(mode));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  const TaskSpec spec = load_task(config.task);
  spec.pattern(config.pattern);
  const Corpus hrl = load_corpus(config.hrl_corpus, spec);
  const EmbeddingIndex index = load_any_index(config.index);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (hrl.find(index.id(i)) == nullptr) {
      throw DataError("index id \"" + index.id(i) + "\" is not in the HRL corpus");
    }
  }
  const std::size_t k_max = config.k_values.back();
  if (k_max > index.size()) {
    throw ConfigError("k = " + std::to_string(k_max) + " exceeds the index size " + std::to_string(index.size()));
  }

  std::shared_ptr<ScorerBackend> scorer = make_backend(config.scorer);
  std::filesystem::create_directories(config.output_dir);
  if (config.cache) {
    const auto path = cache_file(config);
    std::filesystem::create_directories(path.parent_path());
    scorer = std::make_shared<CachingScorer>(scorer, path);
  }
  const Predictor predictor(spec, config.pattern, *scorer, hrl, {config.prompt, config.bor_renormalize});

  std::vector<PredictionRecord> records;
  std::string hits_log;
  for (std::size_t t = 0; t < config.test_sets.size(); ++t) {
    const TestSet& ts = config.test_sets[t];
    const Corpus corpus = load_corpus(ts.corpus, spec);
    if (corpus.empty()) throw DataError(ts.corpus.string() + ": empty test set");
    if (!corpus.labeled()) throw DataError(ts.corpus.string() + ": test set needs gold labels");
    const EmbeddingIndex queries = query_index(ts, corpus, *scorer);
    if (queries.dim() != index.dim()) {
      throw DataError(ts.language + ": query dimension " + std::to_string(queries.dim()) +
                      " differs from index dimension " + std::to_string(index.dim()));
    }
    std::vector<std::size_t> query_row(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto pos = queries.position(corpus.at(i).id);
      if (!pos) throw DataError(ts.language + ": no query embedding for \"" + corpus.at(i).id + "\"");
      query_row[i] = *pos;
    }

    std::vector<std::vector<RetrievalHit>> hits(corpus.size());
    parallel_over(corpus, [&](std::size_t i) { hits[i] = retrieve_top_k(queries.row(query_row[i]), index, k_max); });
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      ordered_json j;
      j["language"] = ts.language;
      j["input_id"] = corpus.at(i).id;
      j["hits"] = ordered_json::array();
      for (const auto& h : hits[i]) {
        j["hits"].push_back({{"id", h.sample_id}, {"sim", h.similarity}, {"rank", h.rank}});
      }
      hits_log += j.dump() + "\n";
    }

    auto emit = [&](const std::string& method, std::size_t k, std::vector<Prediction>& preds) {
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        records.push_back({ts.language, method, k, corpus.at(i).gold_label->name, std::move(preds[i])});
      }
    };
    std::vector<Prediction> preds(corpus.size());

    if (config.baseline_majority) {
      const Label maj = majority_label(corpus, spec);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        preds[i] = Prediction{};
        preds[i].input_id = corpus.at(i).id;
        preds[i].label = maj;
      }
      emit("MAJ", 0, preds);
    }
    if (config.baseline_direct) {
      parallel_over(corpus, [&](std::size_t i) { preds[i] = predictor.direct(corpus.at(i)); });
      emit("Direct", 0, preds);
    }
    if (config.baseline_random) {
      std::vector<RetrievalHit> drawn(corpus.size());
      parallel_over(corpus, [&](std::size_t i) {
        const std::uint64_t seed = splitmix64(splitmix64(config.seed ^ (t + 1)) ^ i);
        drawn[i] = random_retrieve(queries.row(query_row[i]), index, 1, seed).front();
      });
      for (Mode mode : config.modes) {
        parallel_over(corpus, [&](std::size_t i) { preds[i] = predictor.single(corpus.at(i), drawn[i], mode); });
        emit(mode_method("Random", mode), 1, preds);
      }
    }
    for (Mode mode : config.modes) {
      for (std::size_t k : config.k_values) {
        parallel_over(corpus, [&](std::size_t i) {
          const std::span<const RetrievalHit> top(hits[i].data(), k);
          switch (config.strategy) {
            case Strategy::kSingle:
              preds[i] = predictor.single(corpus.at(i), top.front(), mode);
              break;
            case Strategy::kBoR:
              preds[i] = predictor.bor(corpus.at(i), top, mode);
              break;
            case Strategy::kConc:
              preds[i] = predictor.conc(corpus.at(i), top, mode);
              break;
          }
        });
        emit(mode_method("PARC", mode), k, preds);
      }
    }
  }

  std::string predictions_log;
  for (const auto& r : records) predictions_log += record_to_json(r) + "\n";
  ResultTable table = table_from_records(records, {config.hrl_language});

  write_file(config.output_dir / "predictions.jsonl", predictions_log);
  write_file(config.output_dir / "hits.jsonl", hits_log);
  write_file(config.output_dir / "report.tsv", table.render_tsv());
  write_file(config.output_dir / "report.json", table.render_json());
  return {std::move(table), std::move(records)};
}

ResultTable report_from_run(const std::filesystem::path& run_dir, const TaskSpec& spec,
                            const std::vector<std::string>& excluded_from_average) {
  std::istringstream in(read_file(run_dir / "predictions.jsonl"));
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(line, spec));
    } catch (const DataError& e) {
      throw DataError("predictions.jsonl:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (records.empty()) throw DataError(run_dir.string() + ": no predictions");
  return table_from_records(records, excluded_from_average);
}

}  // namespace parc
