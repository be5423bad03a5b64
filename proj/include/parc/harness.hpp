#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parc/corpus.hpp"
#include "parc/embedding.hpp"
#include "parc/predictor.hpp"
#include "parc/prompt.hpp"
#include "parc/retriever.hpp"

namespace parc {

struct TestSet {
  std::string language;
  std::filesystem::path corpus;
  // Precomputed query embeddings (binary or TSV); empty = embed with the scorer.
  std::filesystem::path queries;
};

struct ExperimentConfig {
  std::filesystem::path task;
  std::filesystem::path hrl_corpus;
  std::filesystem::path index;
  std::string hrl_language = "en";
  std::vector<TestSet> test_sets;
  std::string scorer;  // backend spec, see make_backend
  std::vector<Mode> modes{Mode::kUnlabeled, Mode::kLabeled};
  Strategy strategy = Strategy::kBoR;
  std::vector<std::size_t> k_values{1};
  std::size_t pattern = 0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  bool baseline_majority = true;
  bool baseline_direct = true;
  bool baseline_random = true;
  bool bor_renormalize = true;
  PromptOptions prompt;
  int threads = 0;  // 0 = OpenMP default
  bool cache = true;
};

// Relative paths resolve against `base_dir`. Throws ConfigError on a bad field.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Percentage of predictions whose label matches the gold label of the same id.
// Throws DataError on empty input, unknown ids or unlabeled gold samples.
double accuracy(const std::vector<Prediction>& predictions, const Corpus& gold);

// Most frequent gold label, ties to the lowest index. Throws DataError on an
// unlabeled or empty corpus.
Label majority_label(const Corpus& corpus, const TaskSpec& spec);
// Accuracy in percent of always predicting the majority label.
double majority_baseline(const Corpus& corpus, const TaskSpec& spec);

// Accuracies in percent. Rows are methods, columns languages, both in
// insertion order. Avg is the mean over the rounded cells of the columns not
// excluded (the HRL).
class ResultTable {
 public:
  explicit ResultTable(std::vector<std::string> excluded_from_average = {});

  void set(const std::string& row, const std::string& column, double percent);
  std::optional<double> get(const std::string& row, const std::string& column) const;
  const std::vector<std::string>& rows() const { return rows_; }
  const std::vector<std::string>& columns() const { return columns_; }
  bool excluded(const std::string& column) const;

  // nullopt when the row has no averaged cell.
  std::optional<double> average(const std::string& row) const;

  // Tab-separated, one decimal, "-" for missing cells.
  std::string render_tsv() const;
  std::string render_json() const;

 private:
  std::vector<std::string> rows_;
  std::vector<std::string> columns_;
  std::vector<std::string> excluded_;
  std::map<std::pair<std::string, std::string>, double> cells_;
};

// Row label for a method at a given k ("PARC-labeled k=3", "Direct", ...).
std::string method_row(std::string_view method, std::size_t k);

// One classified test input, as logged to predictions.jsonl.
struct PredictionRecord {
  std::string language;
  std::string method;  // "MAJ", "Direct", "Random-labeled", "PARC-unlabeled", ...
  std::size_t k = 0;
  std::string gold;
  Prediction prediction;
};

// Rebuilds the result table from prediction records alone.
ResultTable table_from_records(const std::vector<PredictionRecord>& records,
                               const std::vector<std::string>& excluded_from_average);

std::string record_to_json(const PredictionRecord& record);
PredictionRecord record_from_json(std::string_view line, const TaskSpec& spec);

struct ExperimentResult {
  ResultTable table;
  std::vector<PredictionRecord> records;
};

// Runs every configured method over every test set and writes
// predictions.jsonl, hits.jsonl, report.tsv and report.json into output_dir.
// Scores are cached under $PARC_CACHE_DIR (default output_dir/cache).
ExperimentResult run_experiment(const ExperimentConfig& config);

// Re-derives report.tsv content from a run directory's predictions.jsonl.
ResultTable report_from_run(const std::filesystem::path& run_dir, const TaskSpec& spec,
                            const std::vector<std::string>& excluded_from_average);

}  // namespace parc
