#include <doctest.h>

#include <cstdlib>
#include <random>

#include "parc/error.hpp"
#include "parc/fixtures.hpp"
#include "parc/harness.hpp"
#include "parc/util.hpp"
#include "support.hpp"

using namespace parc;

namespace {

const std::filesystem::path kToy = testing::source_dir() / "data" / "toy";

TaskSpec amazon() { return load_task(testing::source_dir() / "tasks" / "amazon.json"); }

ExperimentConfig toy_config(const std::string& run) {
  auto c = load_config(kToy / "eval.json");
  c.output_dir = testing::scratch_dir("harness-" + run);
  return c;
}

Corpus labeled(const TaskSpec& spec, std::initializer_list<const char*> labels) {
  std::vector<Sample> s;
  int i = 0;
  for (const char* l : labels) s.push_back(Sample{"g" + std::to_string(i++), {"x"}, "sw", spec.label_by_name(l)});
  return Corpus("t", s);
}

Prediction said(const std::string& id, Label label) {
  Prediction p;
  p.input_id = id;
  p.label = std::move(label);
  return p;
}

// Keeps PARC_CACHE_DIR from leaking between runs.
struct NoCacheEnv {
  NoCacheEnv() { unsetenv("PARC_CACHE_DIR"); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto c = load_config(kToy / "eval.json");
  CHECK(c.task == kToy / "../../tasks/amazon.json");
  CHECK(c.test_sets.size() == 3);
  CHECK(c.test_sets[2].queries.empty());
  CHECK(c.k_values == std::vector<std::size_t>{1, 3});
  CHECK(c.modes.size() == 2);
  CHECK(c.scorer == "fixture:" + (kToy / "scores.jsonl").string());

  const std::string base =
      R"("task":"t.json","hrl_corpus":"h.jsonl","index":"i.tsv","test_sets":[{"language":"sw","corpus":"s.jsonl"}],"scorer":"fixture:x","output_dir":"out")";
  CHECK_NOTHROW(parse_config("{" + base + "}", "/base"));
  CHECK(parse_config("{" + base + R"(,"k":5})").k_values == std::vector<std::size_t>{5});
  CHECK(parse_config("{" + base + R"(,"mode":"labeled"})").modes == std::vector<Mode>{Mode::kLabeled});
  for (std::string bad : {R"(,"k":[3,1])", R"(,"k":[1,1])", R"(,"k":0)", R"(,"k":[])", R"(,"mode":"gold")",
                          R"(,"strategy":"single","k":[1,2])", R"(,"baselines":["oracle"])", R"(,"colour":1)",
                          R"(,"threads":-1)", R"(,"separator":"[MASK]")"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_config("{" + base + bad + "}"), ConfigError);
  }
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"task":"t.json"})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/eval.json"), ConfigError);
}

TEST_CASE("accuracy examples") {
  const auto spec = amazon();
  const auto gold = labeled(spec, {"pos", "neg", "pos", "neg"});
  const auto pos = spec.label_by_name("pos");
  const auto neg = spec.label_by_name("neg");
  CHECK(accuracy({said("g0", pos), said("g1", neg), said("g2", pos), said("g3", neg)}, gold) == 100.0);
  CHECK(accuracy({said("g0", pos), said("g1", pos), said("g2", pos), said("g3", pos)}, gold) == 50.0);
  CHECK(accuracy({said("g0", pos), said("g1", neg), said("g2", neg), said("g3", neg)}, gold) == 75.0);
  CHECK_THROWS_AS(accuracy({}, gold), DataError);
  CHECK_THROWS_AS(accuracy({said("zz", pos)}, gold), DataError);
  const Corpus bare("amazon", {Sample{"g0", {"x"}, "sw", std::nullopt}});
  CHECK_THROWS_AS(accuracy({said("g0", pos)}, bare), DataError);
}

TEST_CASE("majority baseline") {
  const auto spec = amazon();
  CHECK(majority_baseline(labeled(spec, {"pos", "neg", "pos", "neg"}), spec) == 50.0);
  CHECK(majority_label(labeled(spec, {"pos", "neg", "pos", "neg"}), spec).name == "neg");  // tie -> index 0
  CHECK(majority_baseline(labeled(spec, {"pos", "pos", "neg", "pos"}), spec) == 75.0);
  CHECK(majority_label(labeled(spec, {"pos", "pos", "neg", "pos"}), spec).name == "pos");
  CHECK_THROWS_AS(majority_baseline(Corpus("amazon", {}), spec), DataError);

  for (const char* name : {"amazon", "agnews", "xnli"}) {
    CAPTURE(name);
    const auto t = load_task(testing::source_dir() / "tasks" / (std::string(name) + ".json"));
    const auto c = load_corpus(kToy / ("balanced_" + std::string(name) + ".jsonl"), t);
    CHECK(majority_baseline(c, t) == doctest::Approx(100.0 / static_cast<double>(t.num_labels())));
  }
}

TEST_CASE("result table averages rounded cells and skips excluded columns") {
  ResultTable t({"en"});
  t.set("Direct", "en", 90.0);
  t.set("Direct", "sw", 56.25);  // renders 56.3
  t.set("Direct", "ur", 50.04);  // renders 50.0
  t.set("MAJ", "sw", 50.0);
  CHECK(*t.average("Direct") == doctest::Approx(53.15));
  CHECK(t.render_tsv() ==
        "method\ten\tsw\tur\tAvg\n"
        "Direct\t90.0\t56.3\t50.0\t53.2\n"
        "MAJ\t-\t50.0\t-\t50.0\n");
  CHECK(t.rows() == std::vector<std::string>{"Direct", "MAJ"});
  CHECK_FALSE(t.get("MAJ", "en").has_value());
  ResultTable only_hrl({"en"});
  only_hrl.set("X", "en", 70.0);
  CHECK_FALSE(only_hrl.average("X").has_value());
  CHECK(only_hrl.render_tsv() == "method\ten\tAvg\nX\t70.0\t-\n");
  CHECK(t.render_json().find("\"avg\": 53.2") != std::string::npos);
}

TEST_CASE("overview fixture averages reproduce through the table") {
  for (const auto& row : overview_rows(load_fixture("overview"))) {
    CAPTURE(row.method);
    ResultTable t;
    for (std::size_t c = 0; c < row.columns.size(); ++c) t.set(row.method, row.columns[c], row.values[c]);
    CHECK(format_percent(*t.average(row.method)) == format_percent(row.average));
  }
}

TEST_CASE("method rows and record roundtrip") {
  CHECK(method_row("PARC-labeled", 3) == "PARC-labeled k=3");
  CHECK(method_row("Direct", 0) == "Direct");
  CHECK(method_row("Random-unlabeled", 1) == "Random-unlabeled");
  const auto spec = amazon();
  PredictionRecord r{"sw", "PARC-unlabeled", 2, "pos", {}};
  r.prediction.input_id = "sw-001";
  r.prediction.label = spec.label_by_name("neg");
  r.prediction.per_label_score = {1.2, 0.8};
  r.prediction.mode = Mode::kUnlabeled;
  r.prediction.strategy = Strategy::kBoR;
  r.prediction.k = 2;
  r.prediction.context_ids = {"en-001", "en-002"};
  r.prediction.prompts = {"a [MASK]", "b [MASK]"};
  const auto line = record_to_json(r);
  const auto back = record_from_json(line, spec);
  CHECK(record_to_json(back) == line);
  CHECK_THROWS_AS(record_from_json("{}", spec), DataError);
  CHECK_THROWS_AS(record_from_json(R"({"language":"sw"})", spec), DataError);
}

TEST_CASE("toy experiment runs end to end and is deterministic") {
  NoCacheEnv env;
  const auto a = run_experiment(toy_config("a"));
  const auto b_cfg = toy_config("b");
  const auto b = run_experiment(b_cfg);
  CHECK(a.table.render_tsv() == b.table.render_tsv());
  CHECK(read_file(b_cfg.output_dir / "report.tsv") == a.table.render_tsv());
  CHECK(read_file(b_cfg.output_dir / "predictions.jsonl").size() > 0);

  CHECK(a.table.columns() == std::vector<std::string>{"en", "sw", "ur"});
  CHECK(a.table.rows() == std::vector<std::string>{"MAJ", "Direct", "Random-unlabeled", "Random-labeled",
                                                   "PARC-unlabeled k=1", "PARC-unlabeled k=3", "PARC-labeled k=1",
                                                   "PARC-labeled k=3"});
  CHECK(*a.table.get("MAJ", "sw") == 50.0);
  // 4 + 8 + 8 inputs, 8 rows each.
  CHECK(a.records.size() == 20 * 8);

  // The report re-derived from predictions.jsonl equals report.tsv.
  const auto rederived = report_from_run(b_cfg.output_dir, amazon(), {"en"});
  CHECK(rederived.render_tsv() == read_file(b_cfg.output_dir / "report.tsv"));

  // Hits log: one line per test input.
  const auto hits = read_file(b_cfg.output_dir / "hits.jsonl");
  CHECK(static_cast<std::size_t>(std::count(hits.begin(), hits.end(), '\n')) == 20);
}

TEST_CASE("the seed only moves the Random rows") {
  NoCacheEnv env;
  auto c1 = toy_config("seed1");
  auto c2 = toy_config("seed2");
  c2.seed = 8;
  const auto a = run_experiment(c1);
  const auto b = run_experiment(c2);
  for (const auto& row : a.table.rows()) {
    if (row.starts_with("Random")) continue;
    for (const auto& col : a.table.columns()) CHECK(a.table.get(row, col) == b.table.get(row, col));
  }
  // Contexts themselves must differ even if accuracies happen to coincide.
  std::vector<std::string> ctx_a, ctx_b;
  for (const auto& r : a.records) {
    if (r.method.starts_with("Random")) ctx_a.push_back(r.prediction.context_ids.front());
  }
  for (const auto& r : b.records) {
    if (r.method.starts_with("Random")) ctx_b.push_back(r.prediction.context_ids.front());
  }
  CHECK(ctx_a != ctx_b);
}

TEST_CASE("Direct does not depend on the retrieval index") {
  NoCacheEnv env;
  auto base = toy_config("direct-a");
  base.test_sets.pop_back();  // the ur set embeds through the scorer; keep the TSV ones
  auto shuffled = base;
  shuffled.output_dir = testing::scratch_dir("harness-direct-b");
  // Same ids, rows scrambled.
  const auto idx = load_any_index(base.index);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  std::mt19937 rng(71);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    ids.push_back(idx.id(i));
    rows.push_back(testing::random_vector(rng, idx.dim()));
  }
  save_index(build_index(ids, rows), shuffled.output_dir / "scrambled.idx");
  shuffled.index = shuffled.output_dir / "scrambled.idx";
  const auto a = run_experiment(base);
  const auto b = run_experiment(shuffled);
  for (const auto& col : a.table.columns()) CHECK(a.table.get("Direct", col) == b.table.get("Direct", col));
  CHECK(read_file(base.output_dir / "hits.jsonl") != read_file(shuffled.output_dir / "hits.jsonl"));
}

TEST_CASE("run_experiment errors name the failing input") {
  NoCacheEnv env;
  auto c = toy_config("fail");
  const auto dir = c.output_dir;
  testing::write_text(dir / "odd.jsonl",
                      "{\"id\":\"sw-odd\",\"segments\":[\"Haijawahi kuonekana.\"],\"language\":\"sw\",\"label\":\"pos\"}\n");
  testing::write_text(dir / "odd.tsv", "sw-odd\t1,0,0,0,0,0,0,0\n");
  c.test_sets = {TestSet{"sw", dir / "odd.jsonl", dir / "odd.tsv"}};
  try {
    run_experiment(c);
    FAIL("expected a fixture miss");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find("sw-odd") != std::string::npos);
  }

  auto big_k = toy_config("fail-k");
  big_k.k_values = {1, 99};
  CHECK_THROWS_AS(run_experiment(big_k), ConfigError);

  auto foreign = toy_config("fail-index");
  testing::write_text(foreign.output_dir / "f.tsv", "not-in-hrl\t1,0,0,0,0,0,0,0\n");
  foreign.index = foreign.output_dir / "f.tsv";
  CHECK_THROWS_AS(run_experiment(foreign), DataError);

  auto unlabeled = toy_config("fail-gold");
  testing::write_text(unlabeled.output_dir / "u.jsonl",
                      "{\"id\":\"sw-001\",\"segments\":[\"Bidhaa nzuri sana, naipenda.\"],\"language\":\"sw\"}\n");
  unlabeled.test_sets = {TestSet{"sw", unlabeled.output_dir / "u.jsonl", kToy / "queries_sw.tsv"}};
  CHECK_THROWS_AS(run_experiment(unlabeled), DataError);
}

TEST_CASE("PARC_CACHE_DIR redirects the score cache") {
  auto c = toy_config("cache-env");
  const auto cache_dir = testing::scratch_dir("harness-cache-dir");
  setenv("PARC_CACHE_DIR", cache_dir.c_str(), 1);
  run_experiment(c);
  unsetenv("PARC_CACHE_DIR");
  CHECK(std::filesystem::file_size(cache_dir / "scores.jsonl") > 0);
  CHECK_FALSE(std::filesystem::exists(c.output_dir / "cache"));
}
