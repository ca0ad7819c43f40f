#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/scores.hpp"

namespace biasprobe {

enum class ScorerMode { file, remote, mock };

constexpr std::string_view to_string(ScorerMode m) {
  switch (m) {
    case ScorerMode::file: return "file";
    case ScorerMode::remote: return "remote";
    case ScorerMode::mock: return "mock";
  }
  return "";
}

inline std::optional<ScorerMode> try_parse_scorer_mode(std::string_view s) {
  if (s == "file") return ScorerMode::file;
  if (s == "remote") return ScorerMode::remote;
  if (s == "mock") return ScorerMode::mock;
  return std::nullopt;
}

struct ScorerConfig {
  ScorerMode mode = ScorerMode::mock;
  std::string endpoint;  // e.g. http://localhost:8080, optionally with a path prefix
  std::string model_id;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 1;
  std::size_t retry_count = 3;  // attempts per batch before giving up
  std::string cache_path;
  std::optional<std::uint64_t> seed;
  std::string score_file;  // file mode
  std::chrono::milliseconds timeout{10000};
  std::chrono::milliseconds retry_backoff{50};
};

/// Throws MalformedConfig when the mode's required fields are absent.
inline void validate(const ScorerConfig& c) {
  if (c.batch_size < 1) throw Error(ErrorCode::MalformedConfig, "batch_size must be >= 1");
  if (c.max_in_flight < 1) throw Error(ErrorCode::MalformedConfig, "max_in_flight must be >= 1");
  if (c.mode == ScorerMode::remote && c.endpoint.empty())
    throw Error(ErrorCode::MalformedConfig, "remote scorer requires an endpoint");
  if (c.mode == ScorerMode::mock && !c.seed) throw Error(ErrorCode::MalformedConfig, "mock scorer requires a seed");
  if (c.mode == ScorerMode::file && c.score_file.empty())
    throw Error(ErrorCode::MalformedConfig, "file scorer requires a score_file");
}

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

inline Endpoint split_endpoint(std::string_view url) {
  std::size_t scheme = url.find("://");
  std::size_t path_start = url.find('/', scheme == std::string_view::npos ? 0 : scheme + 3);
  Endpoint e;
  e.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) {
    e.prefix = std::string(url.substr(path_start));
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  }
  return e;
}

enum class BatchFailure { none, transport, schema };

struct BatchOutcome {
  BatchFailure failure = BatchFailure::none;
  std::vector<double> p_positive;
  std::string message;
};

inline BatchOutcome post_score_batch(const ScorerConfig& config, const std::vector<const BiasSample*>& batch) {
  const Endpoint ep = split_endpoint(config.endpoint);
  nlohmann::json body;
  body["model_id"] = config.model_id;
  body["texts"] = nlohmann::json::array();
  for (const auto* s : batch) body["texts"].push_back(s->text);
  const std::string payload = body.dump();

  BatchOutcome outcome;
  const std::size_t attempts = std::max<std::size_t>(1, config.retry_count);
  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config.retry_backoff * static_cast<int>(attempt));
    httplib::Client client(ep.origin);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    auto res = client.Post(ep.prefix + "/v1/score", payload, "application/json");
    if (!res) {
      outcome = {BatchFailure::transport, {}, "connection failed: " + httplib::to_string(res.error())};
      continue;
    }
    if (res->status != 200) {
      outcome = {BatchFailure::transport, {}, "HTTP " + std::to_string(res->status)};
      continue;
    }
    // A well-formed 200 with a bad body is not retried: it is an adapter bug.
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      return {BatchFailure::schema, {}, "response is not JSON"};
    }
    if (!reply.is_object() || !reply.contains("scores") || !reply["scores"].is_array())
      return {BatchFailure::schema, {}, "response lacks a 'scores' array"};
    const auto& scores = reply["scores"];
    if (scores.size() != batch.size())
      return {BatchFailure::schema, {},
              "expected " + std::to_string(batch.size()) + " scores, got " + std::to_string(scores.size())};
    std::vector<double> ps;
    ps.reserve(batch.size());
    for (const auto& s : scores) {
      if (!s.is_object() || !s.contains("p_positive") || !s["p_positive"].is_number())
        return {BatchFailure::schema, {}, "score entry lacks numeric p_positive"};
      double p = s["p_positive"].get<double>();
      if (!valid_probability(p)) return {BatchFailure::schema, {}, "p_positive outside [0, 1]"};
      if (s.contains("p_negative")) {
        if (!s["p_negative"].is_number()) return {BatchFailure::schema, {}, "p_negative must be numeric"};
        double q = s["p_negative"].get<double>();
        if (!valid_probability(q) || std::abs(p + q - 1.0) > 1e-6)
          return {BatchFailure::schema, {}, "p_positive + p_negative must equal 1"};
      }
      ps.push_back(p);
    }
    return {BatchFailure::none, std::move(ps), {}};
  }
  return outcome;
}

}  // namespace detail

/// Entries of an append-only cache file that belong to `model_id`. A missing
/// file is an empty cache. The first record for a sample id wins.
inline ScoreTable load_cache(const std::string& path, const std::string& model_id) {
  ScoreTable cache;
  if (path.empty() || !std::filesystem::exists(path)) return cache;
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  for_each_line(bytes, [&](std::string_view line, std::size_t line_no) {
    ScoreRecord r = parse_score_line(line, line_no);
    if (r.model_id.value_or("") != model_id || cache.contains(r.sample_id)) return;
    cache.insert(std::move(r));
  });
  return cache;
}

inline void append_cache(const std::string& path, const std::vector<ScoreRecord>& records) {
  if (path.empty() || records.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open cache file '" + path + "'");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write cache file '" + path + "'");
}

/// Scores samples through POST {endpoint}/v1/score. Cached (model_id,
/// sample_id) pairs are not re-requested. Batches are issued by up to
/// `max_in_flight` workers; results are assembled by sample id, so the table
/// does not depend on batch size, concurrency, or arrival order. Successful
/// batches are appended to the cache, in batch order, even when others fail.
inline ScoreTable score_remote(const std::vector<BiasSample>& samples, const ScorerConfig& config) {
  validate(config);
  if (config.mode != ScorerMode::remote)
    throw Error(ErrorCode::MalformedConfig, "score_remote requires remote mode");

  std::set<std::string> requested;
  for (const auto& s : samples)
    if (!requested.insert(s.sample_id).second)
      throw Error(ErrorCode::DuplicateSampleId, "sample '" + s.sample_id + "' requested twice");

  const ScoreTable cache = load_cache(config.cache_path, config.model_id);
  ScoreTable table;
  std::vector<const BiasSample*> pending;
  for (const auto& s : samples) {
    if (const auto* hit = cache.find(s.sample_id)) {
      table.insert(*hit);
    } else {
      pending.push_back(&s);
    }
  }
  if (pending.empty()) return table;

  std::vector<std::vector<const BiasSample*>> batches;
  for (std::size_t i = 0; i < pending.size(); i += config.batch_size)
    batches.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(i),
                         pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), i + config.batch_size)));

  std::vector<detail::BatchOutcome> outcomes(batches.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t b = next++; b < batches.size(); b = next++) outcomes[b] = detail::post_score_batch(config, batches[b]);
  };
  const std::size_t n_workers = std::min(config.max_in_flight, batches.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::vector<ScoreRecord> fresh;
  std::vector<std::string> unscored;
  bool any_schema = false, any_success = false;
  std::string first_message;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& o = outcomes[b];
    if (o.failure == detail::BatchFailure::none) {
      any_success = true;
      for (std::size_t i = 0; i < batches[b].size(); ++i)
        fresh.push_back({batches[b][i]->sample_id, o.p_positive[i], std::nullopt, config.model_id});
    } else {
      any_schema |= o.failure == detail::BatchFailure::schema;
      if (first_message.empty()) first_message = o.message;
      for (const auto* s : batches[b]) unscored.push_back(s->sample_id);
    }
  }
  append_cache(config.cache_path, fresh);
  for (auto& r : fresh) table.insert(std::move(r));

  if (!unscored.empty()) {
    std::sort(unscored.begin(), unscored.end());
    const std::string summary = std::to_string(unscored.size()) + " of " + std::to_string(samples.size()) +
                                " samples unscored (" + first_message + ")";
    if (any_schema) throw Error(ErrorCode::SchemaViolation, summary, std::move(unscored));
    if (!any_success)
      throw Error(ErrorCode::Unreachable, config.endpoint + " after " + std::to_string(config.retry_count) +
                                              " attempts: " + first_message,
                  std::move(unscored));
    throw Error(ErrorCode::PartialFailure, summary, std::move(unscored));
  }
  return table;
}

/// Generative labels through POST {endpoint}/v1/classify. Labels the service
/// could not map to a class come back as nullopt.
inline std::vector<std::optional<Label>> classify_remote(const std::vector<std::string>& texts,
                                                         const ScorerConfig& config) {
  if (config.endpoint.empty()) throw Error(ErrorCode::MalformedConfig, "classify requires an endpoint");
  const auto ep = detail::split_endpoint(config.endpoint);
  nlohmann::json body = {{"texts", texts}};
  const std::size_t attempts = std::max<std::size_t>(1, config.retry_count);
  std::string last;
  for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config.retry_backoff * static_cast<int>(attempt));
    httplib::Client client(ep.origin);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    auto res = client.Post(ep.prefix + "/v1/classify", body.dump(), "application/json");
    if (!res) {
      last = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::SchemaViolation, "classify response is not JSON");
    }
    if (!reply.contains("labels") || !reply["labels"].is_array() || reply["labels"].size() != texts.size())
      throw Error(ErrorCode::SchemaViolation, "classify response must carry one label per text");
    std::vector<std::optional<Label>> labels;
    for (const auto& l : reply["labels"]) {
      if (!l.is_string()) throw Error(ErrorCode::SchemaViolation, "labels must be strings");
      labels.push_back(try_parse_label(l.get<std::string>()));
    }
    return labels;
  }
  throw Error(ErrorCode::Unreachable, config.endpoint + ": " + last);
}

/// GET {endpoint}/healthz == 200.
inline bool check_health(const ScorerConfig& config) {
  const auto ep = detail::split_endpoint(config.endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(config.timeout);
  auto res = client.Get(ep.prefix + "/healthz");
  return res && res->status == 200;
}

}  // namespace biasprobe
