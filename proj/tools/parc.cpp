// parc: command-line front end. Exit codes: 0 ok, 2 config, 3 data, 4 backend.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>

#include "parc/analysis.hpp"
#include "parc/corpus.hpp"
#include "parc/embedding.hpp"
#include "parc/error.hpp"
#include "parc/fixtures.hpp"
#include "parc/harness.hpp"
#include "parc/langsim.hpp"
#include "parc/predictor.hpp"
#include "parc/retriever.hpp"
#include "parc/scorer.hpp"
#include "parc/util.hpp"

namespace {

using nlohmann::ordered_json;
using namespace parc;

EmbeddingIndex embed_corpus(const Corpus& corpus, ScorerBackend& scorer) {
  std::vector<std::string> ids, texts;
  for (const auto& s : corpus.samples()) {
    ids.push_back(s.id);
    texts.push_back(joined_text(s));
  }
  auto vectors = scorer.embed(texts);
  if (vectors.size() != texts.size()) throw BackendError("embed returned a misaligned batch");
  return build_index(std::move(ids), vectors);
}

ordered_json hits_json(const std::vector<RetrievalHit>& hits) {
  auto arr = ordered_json::array();
  for (const auto& h : hits) arr.push_back({{"id", h.sample_id}, {"sim", h.similarity}, {"rank", h.rank}});
  return arr;
}

PerfColumn parse_column(const std::string& s) {
  if (s == "first") return PerfColumn::kFirst;
  if (s == "second") return PerfColumn::kSecond;
  throw ConfigError("column must be first|second, got \"" + s + "\"");
}

std::vector<LanguagePairRow> load_pair_table(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<LanguagePairRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    LanguagePairRow r;
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw DataError(path + ":" + std::to_string(line_no) + ": expected 11 columns");
    try {
      r.pair = cells[0];
      r.perf_first = std::stod(cells[1]);
      r.perf_second = std::stod(cells[2]);
      for (std::size_t f = 0; f < kNumFeatures; ++f) r.features[f] = std::stod(cells[3 + f]);
      r.sim = std::stod(cells[8]);
      r.source_size = std::stod(cells[9]);
      r.target_size = std::stod(cells[10]);
    } catch (const std::logic_error&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parc: prompts augmented by retrieval cross-lingually"};
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "Build a binary embedding index");
  std::string idx_vectors, idx_corpus, idx_task, idx_scorer, idx_out;
  index_cmd->add_option("--vectors", idx_vectors, "TSV of id<TAB>v1,v2,...");
  index_cmd->add_option("--corpus", idx_corpus, "Corpus to embed with --scorer");
  index_cmd->add_option("--task", idx_task, "Task file for --corpus");
  index_cmd->add_option("--scorer", idx_scorer, "Backend spec for --corpus");
  index_cmd->add_option("-o,--output", idx_out, "Output index file")->required();

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Top-k retrieval for each query");
  std::string ret_index, ret_queries;
  std::size_t ret_k = 1;
  bool ret_random = false;
  std::uint64_t ret_seed = 0;
  retrieve_cmd->add_option("--index", ret_index)->required();
  retrieve_cmd->add_option("--query-file,--queries", ret_queries, "Query embeddings (index or TSV)")->required();
  retrieve_cmd->add_option("-k,--k", ret_k);
  retrieve_cmd->add_flag("--random", ret_random, "Uniform random draw instead of top-k");
  retrieve_cmd->add_option("--seed", ret_seed);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Classify a corpus");
  std::string pr_task, pr_hrl, pr_index, pr_input, pr_queries, pr_scorer, pr_mode = "labeled", pr_strategy = "bor";
  std::size_t pr_pattern = 0, pr_k = 1;
  bool pr_direct = false;
  predict_cmd->add_option("--task", pr_task)->required();
  predict_cmd->add_option("--pattern", pr_pattern);
  predict_cmd->add_option("--hrl", pr_hrl, "HRL corpus");
  predict_cmd->add_option("--index", pr_index, "HRL embedding index");
  predict_cmd->add_option("--input", pr_input, "Corpus to classify")->required();
  predict_cmd->add_option("--queries", pr_queries, "Input embeddings; default: embed with the scorer");
  predict_cmd->add_option("--scorer", pr_scorer)->required();
  predict_cmd->add_option("--mode", pr_mode, "labeled|unlabeled");
  predict_cmd->add_option("--strategy", pr_strategy, "bor|conc|single");
  predict_cmd->add_option("-k,--k", pr_k);
  predict_cmd->add_flag("--direct", pr_direct, "No retrieval");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment config");
  std::string ev_config, ev_out;
  eval_cmd->add_option("config", ev_config)->required();
  eval_cmd->add_option("--output-dir", ev_out, "Override output_dir");

  // report
  auto* report_cmd = app.add_subcommand("report", "Rebuild the result table from a run directory");
  std::string rep_run, rep_task, rep_format = "tsv";
  std::vector<std::string> rep_exclude{"en"};
  report_cmd->add_option("run", rep_run)->required();
  report_cmd->add_option("--task", rep_task)->required();
  report_cmd->add_option("--exclude", rep_exclude, "Columns left out of Avg");
  report_cmd->add_option("--format", rep_format, "tsv|json");

  // langsim
  auto* langsim_cmd = app.add_subcommand("langsim", "Pairwise typological similarity");
  std::string ls_profiles, ls_pairs;
  std::size_t ls_k = kDefaultImputeK;
  langsim_cmd->add_option("--profiles", ls_profiles)->required();
  langsim_cmd->add_option("--pairs", ls_pairs)->required();
  langsim_cmd->add_option("--impute-k", ls_k);

  // correlate
  auto* corr_cmd = app.add_subcommand("correlate", "Correlate accuracy with similarity and corpus size");
  std::string co_table, co_fixture, co_labeled, co_unlabeled, co_pmethod = "t_approx";
  std::string co_expected;
  double co_tol = 0.03;
  std::uint64_t co_seed = 0x5EED;
  corr_cmd->add_option("--fixture", co_fixture, "fifty_pairs fixture file; default: the bundled one");
  corr_cmd->add_option("--table", co_table, "CSV with the same eleven columns");
  corr_cmd->add_option("--expected", co_expected, "amazon_correlations fixture file for deviation flags");
  corr_cmd->add_option("--labeled-column", co_labeled, "first|second")->required();
  corr_cmd->add_option("--unlabeled-column", co_unlabeled, "first|second")->required();
  corr_cmd->add_option("--p-method", co_pmethod, "t_approx|permutation");
  corr_cmd->add_option("--tolerance", co_tol);
  corr_cmd->add_option("--seed", co_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }

  try {
    if (*index_cmd) {
      if (idx_vectors.empty() == idx_corpus.empty()) throw ConfigError("give exactly one of --vectors, --corpus");
      if (!idx_vectors.empty()) {
        save_index(load_tsv_index(idx_vectors), idx_out);
      } else {
        if (idx_task.empty() || idx_scorer.empty()) throw ConfigError("--corpus needs --task and --scorer");
        const auto spec = load_task(idx_task);
        const auto backend = make_backend(idx_scorer);
        save_index(embed_corpus(load_corpus(idx_corpus, spec), *backend), idx_out);
      }
    } else if (*retrieve_cmd) {
      const auto index = load_any_index(ret_index);
      const auto queries = load_any_index(ret_queries);
      std::vector<std::vector<RetrievalHit>> all;
      if (ret_random) {
        for (std::size_t q = 0; q < queries.size(); ++q) {
          all.push_back(random_retrieve(queries.row(q), index, ret_k, splitmix64(ret_seed ^ q)));
        }
      } else {
        all = retrieve_batch(queries, index, ret_k);
      }
      for (std::size_t q = 0; q < queries.size(); ++q) {
        ordered_json j;
        j["query_id"] = queries.id(q);
        j["hits"] = hits_json(all[q]);
        std::cout << j.dump() << '\n';
      }
    } else if (*predict_cmd) {
      const auto spec = load_task(pr_task);
      const auto backend = make_backend(pr_scorer);
      const auto input = load_corpus(pr_input, spec);
      const Corpus hrl = pr_hrl.empty() ? Corpus(spec.task_id(), {}) : load_corpus(pr_hrl, spec);
      const Predictor predictor(spec, pr_pattern, *backend, hrl);
      const Mode mode = parse_mode(pr_mode);
      const Strategy strategy = parse_strategy(pr_strategy);
      if (!pr_direct && (pr_hrl.empty() || pr_index.empty())) throw ConfigError("retrieval needs --hrl and --index");
      std::optional<EmbeddingIndex> index, queries;
      if (!pr_direct) {
        index = load_any_index(pr_index);
        queries = pr_queries.empty() ? embed_corpus(input, *backend) : load_any_index(pr_queries);
      }
      for (const auto& s : input.samples()) {
        Prediction p;
        if (pr_direct) {
          p = predictor.direct(s);
        } else {
          const auto pos = queries->position(s.id);
          if (!pos) throw DataError("no query embedding for \"" + s.id + "\"");
          const auto hits = retrieve_top_k(queries->row(*pos), *index, pr_k);
          p = strategy == Strategy::kBoR    ? predictor.bor(s, hits, mode)
              : strategy == Strategy::kConc ? predictor.conc(s, hits, mode)
                                            : predictor.single(s, hits.front(), mode);
        }
        PredictionRecord r{s.language, pr_direct ? "Direct" : "PARC-" + std::string(to_string(mode)), p.k,
                           s.gold_label ? s.gold_label->name : "", std::move(p)};
        std::cout << record_to_json(r) << '\n';
      }
    } else if (*eval_cmd) {
      auto config = load_config(ev_config);
      if (!ev_out.empty()) config.output_dir = ev_out;
      const auto result = run_experiment(config);
      std::cout << result.table.render_tsv();
    } else if (*report_cmd) {
      const auto table = report_from_run(rep_run, load_task(rep_task), rep_exclude);
      if (rep_format == "tsv") {
        std::cout << table.render_tsv();
      } else if (rep_format == "json") {
        std::cout << table.render_json();
      } else {
        throw ConfigError("unknown format \"" + rep_format + "\"");
      }
    } else if (*langsim_cmd) {
      const auto profiles = impute_missing(load_profiles(ls_profiles), ls_k);
      const SimilarityBatch batch(profiles, load_pairs(ls_pairs));
      std::printf("pair");
      for (auto name : kFeatureNames) std::printf("\t%.*s", static_cast<int>(name.size()), name.data());
      std::printf("\tSIM\tWikiSize\n");
      const auto reports = batch.all();
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& [a, b] = batch.pairs()[i];
        std::printf("%s-%s", a.c_str(), b.c_str());
        for (double v : reports[i].per_feature) std::printf("\t%s", format_percent(v).c_str());
        std::printf("\t%s\t%d\n", format_percent(reports[i].aggregate).c_str(), batch.profile(b).wiki_size);
      }
    } else if (*corr_cmd) {
      const ColumnMapping mapping{parse_column(co_labeled), parse_column(co_unlabeled)};
      std::vector<LanguagePairRow> rows;
      std::vector<ExpectedCell> expected;
      if (!co_table.empty() && !co_fixture.empty()) throw ConfigError("give at most one of --fixture, --table");
      if (!co_table.empty()) {
        rows = load_pair_table(co_table);
      } else {
        rows = language_pair_rows(co_fixture.empty() ? load_fixture("fifty_pairs") : load_fixture_file(co_fixture));
      }
      if (!co_expected.empty()) {
        expected = expected_correlations(load_fixture_file(co_expected));
      } else if (co_table.empty()) {
        expected = expected_correlations(load_fixture("amazon_correlations"));
      }
      if (co_pmethod != "t_approx" && co_pmethod != "permutation") {
        throw ConfigError("unknown p-value method \"" + co_pmethod + "\"");
      }
      CorrelationOptions options;
      options.p_method = co_pmethod == "t_approx" ? PValueMethod::kTApprox : PValueMethod::kPermutation;
      options.seed = co_seed;
      std::cout << reproduce_pair_correlations(rows, mapping, expected, co_tol, options).render();
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "parc: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "parc: %s\n", e.what());
    return static_cast<int>(ErrorKind::kData);
  }
  return 0;
}
