#include <doctest.h>

#include <random>

#include "parc/corpus.hpp"
#include "parc/error.hpp"
#include "support.hpp"

using namespace parc;

namespace {

TaskSpec amazon() { return load_task(testing::source_dir() / "tasks" / "amazon.json"); }
TaskSpec xnli() { return load_task(testing::source_dir() / "tasks" / "xnli.json"); }

TaskSpec make_task(int arity, std::vector<std::string> patterns,
                   std::vector<std::pair<std::string, std::string>> verbalizer) {
  std::vector<PatternTemplate> ps;
  for (auto& p : patterns) ps.emplace_back(p);
  return TaskSpec("t", arity, std::move(ps), std::move(verbalizer));
}

}  // namespace

TEST_CASE("bundled task files are valid") {
  for (const char* name : {"amazon", "agnews", "xnli"}) {
    CAPTURE(name);
    const auto spec = load_task(testing::source_dir() / "tasks" / (std::string(name) + ".json"));
    CHECK_NOTHROW(validate_task(spec));
  }
  const auto a = amazon();
  CHECK(a.num_labels() == 2);
  CHECK(a.patterns().size() == 5);
  CHECK(a.label(0).name == "neg");
  CHECK(a.word(1) == "great");
  const auto ag = load_task(testing::source_dir() / "tasks" / "agnews.json");
  CHECK(ag.label(3).name == "Tech");
  CHECK(ag.pattern(2).text() == "[MASK] News: [X]");
  CHECK(xnli().arity() == 2);
}

TEST_CASE("validate_task accepts the Amazon spec with the summary pattern") {
  const auto spec = make_task(1, {"[X] All in all, it was [MASK]."}, {{"pos", "great"}, {"neg", "terrible"}});
  CHECK_NOTHROW(validate_task(spec));
}

TEST_CASE("validate_task rejects invariant violations") {
  SUBCASE("duplicate verbalizer word") {
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] [MASK]"}, {{"0", "great"}, {"1", "great"}})), ConfigError);
  }
  SUBCASE("two masks") {
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] [MASK] [MASK]"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
  }
  SUBCASE("missing mask") {
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] nothing"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
  }
  SUBCASE("placeholder does not match arity") {
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X1] [MASK] [X2]"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(2, {"[X] [MASK]"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(2, {"[X1] [MASK]"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
  }
  SUBCASE("other violations") {
    CHECK_THROWS_AS(validate_task(make_task(3, {"[X] [MASK]"}, {{"a", "x"}, {"b", "y"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(1, {}, {{"a", "x"}, {"b", "y"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] [MASK]"}, {{"a", "x"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] [MASK]"}, {{"a", "x"}, {"a", "y"}})), ConfigError);
    CHECK_THROWS_AS(validate_task(make_task(1, {"[X] [MASK]"}, {{"a", "[MASK]"}, {"b", "y"}})), ConfigError);
  }
}

TEST_CASE("parse_task reports schema problems as config errors") {
  CHECK_THROWS_AS(parse_task("{"), ConfigError);
  CHECK_THROWS_AS(parse_task(R"({"task_id":"t","arity":1,"patterns":["[X] [MASK]"]})"), ConfigError);
  CHECK_THROWS_AS(load_task("/nonexistent/task.json"), ConfigError);
  const auto spec =
      parse_task(R"({"task_id":"t","arity":1,"patterns":["[X] [MASK]"],"verbalizer":{"z":"zed","a":"ay"}})");
  // Label order follows the verbalizer object, not key sorting.
  CHECK(spec.label(0).name == "z");
  CHECK(spec.label(1).name == "a");
}

TEST_CASE("verbalizer is a bijection") {
  const auto ag = load_task(testing::source_dir() / "tasks" / "agnews.json");
  for (const auto& l : ag.labels()) {
    CHECK(ag.label_for_word(ag.word(l.index)) == l);
  }
  for (const auto& w : ag.words()) {
    CHECK(ag.word(ag.label_for_word(w).index) == w);
  }
  CHECK_THROWS_AS(ag.label_for_word("Weather"), DataError);
  CHECK_THROWS_AS(ag.label(7), DataError);
  CHECK_THROWS_AS(ag.label_by_name("Science"), DataError);
  CHECK_FALSE(ag.find_label("Science").has_value());
  CHECK_THROWS_AS(ag.pattern(9), ConfigError);
}

TEST_CASE("parse_corpus reads labeled records in file order") {
  const auto spec = amazon();
  const auto c = parse_corpus(
      "{\"id\":\"a\",\"segments\":[\"Good.\"],\"language\":\"en\",\"label\":\"pos\"}\n"
      "{\"id\":\"b\",\"segments\":[\"Bad.\"],\"language\":\"en\",\"label\":\"neg\"}\n",
      spec);
  REQUIRE(c.size() == 2);
  CHECK(c.labeled());
  CHECK(c.at(0).id == "a");
  CHECK(c.at(0).gold_label->name == "pos");
  CHECK(c.at(0).gold_label->index == 1);
  CHECK(c.at(1).gold_label->index == 0);
  CHECK(c.position("b") == 1);
  CHECK(c.find("zzz") == nullptr);
}

TEST_CASE("parse_corpus errors carry line numbers") {
  const auto spec = amazon();
  SUBCASE("arity violation") {
    try {
      parse_corpus("{\"id\":\"p\",\"segments\":[\"only one\"],\"language\":\"sw\"}\n", xnli());
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
  }
  SUBCASE("malformed json on line 3") {
    try {
      parse_corpus("{\"id\":\"a\",\"segments\":[\"x\"],\"language\":\"en\"}\n\n{oops\n", spec);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("unknown label") {
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"segments\":[\"x\"],\"language\":\"en\",\"label\":\"meh\"}", spec),
                    DataError);
  }
  SUBCASE("duplicate ids") {
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"segments\":[\"x\"],\"language\":\"en\"}\n"
                                 "{\"id\":\"a\",\"segments\":[\"y\"],\"language\":\"en\"}\n",
                                 spec),
                    DataError);
  }
  SUBCASE("invalid utf-8") {
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"segments\":[\"\xc3\"],\"language\":\"en\"}", spec), DataError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_corpus("/nonexistent.jsonl", spec), DataError); }
}

TEST_CASE("a partially labeled corpus is unlabeled") {
  const auto c = parse_corpus(
      "{\"id\":\"a\",\"segments\":[\"x\"],\"language\":\"en\",\"label\":\"pos\"}\n"
      "{\"id\":\"b\",\"segments\":[\"y\"],\"language\":\"en\"}\n",
      amazon());
  CHECK_FALSE(c.labeled());
  CHECK_FALSE(Corpus("t", {}).labeled());
}

TEST_CASE("duplicate sentences stay distinct samples") {
  const auto c = parse_corpus(
      "{\"id\":\"a\",\"segments\":[\"same\"],\"language\":\"en\"}\n"
      "{\"id\":\"b\",\"segments\":[\"same\"],\"language\":\"en\"}\n",
      amazon());
  CHECK(c.size() == 2);
}

TEST_CASE("a 1000-record file loads as 1000 samples") {
  std::string text;
  for (int i = 0; i < 1000; ++i) {
    text += "{\"id\":\"s" + std::to_string(i) + "\",\"segments\":[\"review " + std::to_string(i) +
            "\"],\"language\":\"de\",\"label\":\"" + (i % 2 ? "pos" : "neg") + "\"}\n";
  }
  CHECK(parse_corpus(text, amazon()).size() == 1000);
}

TEST_CASE("serialization roundtrip is byte-stable") {
  const auto spec = xnli();
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const int n = 1 + trial % 7;
    for (int i = 0; i < n; ++i) {
      const auto label = spec.label(rng() % spec.num_labels()).name;
      text += "{\"id\":\"" + testing::random_word(rng) + std::to_string(i) + "\",\"segments\":[\"" +
              testing::random_word(rng) + " \\\"q\\\" \xc3\xa9\",\"" + testing::random_word(rng) +
              "\"],\"language\":\"sw\"" + (i % 3 ? ",\"label\":\"" + label + "\"" : "") + "}\n";
    }
    const auto first = serialize_corpus(parse_corpus(text, spec));
    const auto second = serialize_corpus(parse_corpus(first, spec));
    CHECK(first == second);
  }
}

TEST_CASE("joined_text joins segments with a space") {
  Sample s{"x", {"A man sleeps.", "A person rests."}, "en", std::nullopt};
  CHECK(joined_text(s) == "A man sleeps. A person rests.");
}
