#include "parc/scorer.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <future>
#include <json.hpp>

#include "parc/error.hpp"
#include "parc/util.hpp"

namespace parc {

using nlohmann::json;

namespace {

constexpr double kSumSlack = 1e-6;

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    fn(line_no, line);
  }
}

double checked_prob(const json& v, std::string_view where) {
  if (!v.is_number()) throw DataError(std::string(where) + ": probability is not a number");
  const double p = v.get<double>();
  if (!std::isfinite(p)) throw DataError(std::string(where) + ": non-finite probability");
  if (p < 0.0) throw DataError(std::string(where) + ": negative probability");
  return p;
}

}  // namespace

ScoreVector renormalize(const ScoreVector& s) {
  double sum = 0.0;
  for (double p : s.probs) sum += p;
  if (!(sum > 0.0) || !std::isfinite(sum)) throw DataError("degenerate score vector: sum is not positive");
  ScoreVector out;
  out.probs.reserve(s.probs.size());
  for (double p : s.probs) out.probs.push_back(p / sum);
  return out;
}

void validate_scores(const ScoreVector& s, std::size_t expected_size, std::string_view origin) {
  if (s.probs.size() != expected_size) {
    throw BackendError(std::string(origin) + ": expected " + std::to_string(expected_size) +
                       " probabilities, got " + std::to_string(s.probs.size()));
  }
  double sum = 0.0;
  for (double p : s.probs) {
    if (!std::isfinite(p)) throw BackendError(std::string(origin) + ": non-finite probability");
    if (p < 0.0) throw BackendError(std::string(origin) + ": negative probability");
    sum += p;
  }
  if (sum > 1.0 + kSumSlack) {
    throw BackendError(std::string(origin) + ": probabilities sum to " + std::to_string(sum) + " > 1");
  }
}

// --- FixtureScorer ---------------------------------------------------------

FixtureScorer::FixtureScorer(const std::filesystem::path& path)
    : FixtureScorer("fixture:" + path.filename().string(), read_file(path)) {}

FixtureScorer FixtureScorer::from_string(std::string_view jsonl, std::string id) {
  return FixtureScorer(std::move(id), jsonl);
}

FixtureScorer::FixtureScorer(std::string id, std::string_view jsonl) : id_(std::move(id)) {
  for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
    const std::string where = "fixture line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": record is not an object");
    if (j.contains("prompt_sha256")) {
      const auto& scores = j.at("scores");
      if (!scores.is_object()) throw DataError(where + ": \"scores\" must be an object");
      std::unordered_map<std::string, double> table;
      for (const auto& [word, p] : scores.items()) table.emplace(word, checked_prob(p, where));
      if (!scores_.emplace(j.at("prompt_sha256").get<std::string>(), std::move(table)).second) {
        throw DataError(where + ": duplicate prompt hash");
      }
    } else if (j.contains("text_sha256")) {
      std::vector<float> v;
      for (const auto& x : j.at("vector")) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw DataError(where + ": non-finite embedding component");
        }
        v.push_back(x.get<float>());
      }
      if (!vectors_.emplace(j.at("text_sha256").get<std::string>(), std::move(v)).second) {
        throw DataError(where + ": duplicate text hash");
      }
    } else {
      throw DataError(where + ": expected prompt_sha256 or text_sha256");
    }
  });
}

ScoreVector FixtureScorer::fixture_score(std::string_view prompt,
                                         std::span<const std::string> candidates) const {
  const auto hash = sha256_hex(prompt);
  const auto it = scores_.find(hash);
  if (it == scores_.end()) throw BackendError("fixture miss: no entry for prompt " + hash);
  ScoreVector out;
  out.probs.reserve(candidates.size());
  for (const auto& word : candidates) {
    const auto w = it->second.find(word);
    if (w == it->second.end()) {
      throw BackendError("fixture miss: prompt " + hash + " has no score for \"" + word + "\"");
    }
    out.probs.push_back(w->second);
  }
  validate_scores(out, candidates.size(), "fixture prompt " + hash);
  return out;
}

std::vector<ScoreVector> FixtureScorer::score(std::span<const ScoreRequest> batch) {
  std::vector<ScoreVector> out;
  out.reserve(batch.size());
  for (const auto& req : batch) out.push_back(fixture_score(req.prompt, req.candidates));
  return out;
}

std::vector<std::vector<float>> FixtureScorer::embed(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto hash = sha256_hex(t);
    const auto it = vectors_.find(hash);
    if (it == vectors_.end()) throw BackendError("fixture miss: no embedding for text " + hash);
    out.push_back(it->second);
  }
  return out;
}

// --- HttpScorer ------------------------------------------------------------

HttpScorer::HttpScorer(HttpScorerOptions options) : options_(std::move(options)) {
  if (options_.max_batch == 0) throw ConfigError("max_batch must be positive");
  if (options_.max_inflight == 0) throw ConfigError("max_inflight must be positive");
}

std::string HttpScorer::post(const std::string& path, const std::string& body) const {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    httplib::Client cli(options_.host, options_.port);
    cli.set_connection_timeout(options_.timeout_seconds, 0);
    cli.set_read_timeout(options_.timeout_seconds, 0);
    cli.set_write_timeout(options_.timeout_seconds, 0);
    ++requests_;
    auto res = path.empty() ? cli.Get("/info") : cli.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw BackendError("sidecar " + (path.empty() ? std::string("/info") : path) + " returned " +
                         std::to_string(res->status) + ": " + res->body);
    }
    return res->body;
  }
  throw BackendError("sidecar " + options_.host + ":" + std::to_string(options_.port) + " unreachable after " +
                     std::to_string(options_.retries + 1) + " attempt(s): " + last_error);
}

void HttpScorer::fetch_info() const {
  std::call_once(info_once_, [this] {
    json j;
    try {
      j = json::parse(post("", ""));
      model_ = j.at("model").get<std::string>();
      deterministic_ = j.at("deterministic").get<bool>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("protocol error in /info: ") + e.what());
    }
  });
}

std::string HttpScorer::backend_id() const {
  fetch_info();
  return "http:" + model_;
}

bool HttpScorer::deterministic() const {
  fetch_info();
  return deterministic_;
}

std::vector<ScoreVector> HttpScorer::score(std::span<const ScoreRequest> batch) {
  std::vector<ScoreVector> out(batch.size());
  const std::size_t chunk = options_.max_batch;

  auto run_chunk = [this, &batch, &out, chunk](std::size_t begin) {
    const std::size_t end = std::min(batch.size(), begin + chunk);
    json body;
    body["prompts"] = json::array();
    body["candidates"] = json::array();
    for (std::size_t i = begin; i < end; ++i) {
      body["prompts"].push_back(batch[i].prompt);
      body["candidates"].push_back(batch[i].candidates);
    }
    const auto text = post("/score", body.dump());
    json resp;
    try {
      resp = json::parse(text);
    } catch (const json::exception& e) {
      throw BackendError(std::string("protocol error in /score: malformed JSON: ") + e.what());
    }
    if (!resp.is_object() || !resp.contains("probs") || !resp["probs"].is_array() ||
        resp["probs"].size() != end - begin) {
      throw BackendError("protocol error in /score: \"probs\" missing or misaligned with request");
    }
    for (std::size_t i = begin; i < end; ++i) {
      const auto& row = resp["probs"][i - begin];
      if (!row.is_array()) throw BackendError("protocol error in /score: probs row is not an array");
      ScoreVector s;
      for (const auto& p : row) {
        if (!p.is_number()) throw BackendError("protocol error in /score: non-numeric probability");
        s.probs.push_back(p.get<double>());
      }
      validate_scores(s, batch[i].candidates.size(), "protocol error in /score");
      out[i] = std::move(s);
    }
  };

  std::vector<std::size_t> starts;
  for (std::size_t b = 0; b < batch.size(); b += chunk) starts.push_back(b);
  for (std::size_t w = 0; w < starts.size(); w += options_.max_inflight) {
    std::vector<std::future<void>> wave;
    for (std::size_t j = w; j < std::min(starts.size(), w + options_.max_inflight); ++j) {
      wave.push_back(std::async(std::launch::async, run_chunk, starts[j]));
    }
    for (auto& f : wave) f.get();
  }
  return out;
}

std::vector<std::vector<float>> HttpScorer::embed(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += options_.max_batch) {
    const std::size_t end = std::min(texts.size(), begin + options_.max_batch);
    json body;
    body["texts"] = json::array();
    for (std::size_t i = begin; i < end; ++i) body["texts"].push_back(texts[i]);
    json resp;
    try {
      resp = json::parse(post("/embed", body.dump()));
      const auto dim = resp.at("dim").get<std::size_t>();
      const auto& vectors = resp.at("vectors");
      if (!vectors.is_array() || vectors.size() != end - begin) {
        throw BackendError("protocol error in /embed: vectors misaligned with request");
      }
      for (const auto& v : vectors) {
        std::vector<float> row;
        for (const auto& x : v) {
          if (!x.is_number() || !std::isfinite(x.get<double>())) {
            throw BackendError("protocol error in /embed: non-finite component");
          }
          row.push_back(x.get<float>());
        }
        if (row.size() != dim) throw BackendError("protocol error in /embed: vector dim != advertised dim");
        out.push_back(std::move(row));
      }
    } catch (const json::exception& e) {
      throw BackendError(std::string("protocol error in /embed: ") + e.what());
    }
  }
  return out;
}

// --- CachingScorer ---------------------------------------------------------

CachingScorer::CachingScorer(std::shared_ptr<ScorerBackend> inner, std::filesystem::path cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
  if (!inner_) throw ConfigError("caching scorer needs a backend");
  if (cache_file_.empty() || !std::filesystem::exists(cache_file_)) return;
  // A torn final line from an interrupted append is skipped, not fatal.
  for_each_line(read_file(cache_file_), [&](std::size_t, std::string_view line) {
    try {
      const auto j = json::parse(line);
      ScoreVector s;
      for (const auto& p : j.at("probs")) s.probs.push_back(checked_prob(p, "cache"));
      entries_.insert_or_assign(j.at("key").get<std::string>(), std::move(s));
    } catch (const std::exception&) {
    }
  });
}

std::string CachingScorer::cache_key(std::string_view backend_id, const ScoreRequest& request) {
  // Length-prefixed fields keep the encoding unambiguous.
  std::string material;
  auto field = [&material](std::string_view s) {
    material += std::to_string(s.size());
    material += ':';
    material += s;
  };
  field(backend_id);
  field(request.prompt);
  material += std::to_string(request.candidates.size());
  material += '#';
  for (const auto& c : request.candidates) field(c);
  return sha256_hex(material);
}

std::size_t CachingScorer::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<ScoreVector> CachingScorer::score(std::span<const ScoreRequest> batch) {
  const auto id = inner_->backend_id();
  std::vector<std::string> keys;
  keys.reserve(batch.size());
  for (const auto& req : batch) keys.push_back(cache_key(id, req));

  std::vector<ScoreVector> out(batch.size());
  std::vector<std::size_t> missing;
  {
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto it = entries_.find(keys[i]);
      if (it != entries_.end()) {
        out[i] = it->second;
        ++hits_;
      } else {
        missing.push_back(i);
      }
    }
  }
  if (missing.empty()) return out;

  // Deduplicate within the batch so each distinct key goes out once.
  std::vector<ScoreRequest> requests;
  std::vector<std::string> request_keys;
  std::unordered_map<std::string, std::size_t> slot;
  for (auto i : missing) {
    if (slot.emplace(keys[i], requests.size()).second) {
      requests.push_back(batch[i]);
      request_keys.push_back(keys[i]);
    }
  }
  misses_ += requests.size();
  const auto fresh = inner_->score(requests);
  if (fresh.size() != requests.size()) {
    throw BackendError("backend returned " + std::to_string(fresh.size()) + " score vectors for " +
                       std::to_string(requests.size()) + " requests");
  }
  for (std::size_t r = 0; r < requests.size(); ++r) {
    validate_scores(fresh[r], requests[r].candidates.size(), "backend " + id);
  }

  std::unique_lock lock(mutex_);
  std::ofstream log;
  if (!cache_file_.empty()) {
    log.open(cache_file_, std::ios::app | std::ios::binary);
    if (!log) throw DataError("cannot append to cache file " + cache_file_.string());
  }
  for (std::size_t r = 0; r < requests.size(); ++r) {
    if (entries_.emplace(request_keys[r], fresh[r]).second && log) {
      json line;
      line["key"] = request_keys[r];
      line["probs"] = fresh[r].probs;
      log << line.dump() << '\n';
    }
  }
  if (log) log.flush();
  for (auto i : missing) out[i] = fresh[slot.at(keys[i])];
  return out;
}

// --- factory ---------------------------------------------------------------

std::shared_ptr<ScorerBackend> make_backend(std::string_view spec) {
  constexpr std::string_view kFixture = "fixture:";
  constexpr std::string_view kHttp = "http://";
  if (spec.substr(0, kFixture.size()) == kFixture) {
    const std::filesystem::path path(spec.substr(kFixture.size()));
    if (!std::filesystem::exists(path)) throw ConfigError("fixture file not found: " + path.string());
    return std::make_shared<FixtureScorer>(path);
  }
  if (spec.substr(0, kHttp.size()) == kHttp) {
    auto rest = spec.substr(kHttp.size());
    while (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
    const auto colon = rest.rfind(':');
    HttpScorerOptions opts;
    if (colon == std::string_view::npos) {
      opts.host = std::string(rest);
      opts.port = 80;
    } else {
      opts.host = std::string(rest.substr(0, colon));
      try {
        opts.port = std::stoi(std::string(rest.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("bad port in scorer spec: " + std::string(spec));
      }
    }
    return std::make_shared<HttpScorer>(opts);
  }
  throw ConfigError("unknown scorer backend spec \"" + std::string(spec) +
                    "\" (expected fixture:<path> or http://host:port)");
}

}  // namespace parc
