#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/hashing.hpp"
#include "biasprobe/metrics.hpp"
#include "biasprobe/remote_scorer.hpp"
#include "biasprobe/stats.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

struct ModelSpec {
  std::string model_id;
  ScorerConfig scorer;
  std::vector<std::string> languages;  // empty: every configured language
  bool seed_explicit = false;
};

/// Mock seed for a model without its own: derived from the run seed and the id.
inline std::uint64_t derived_model_seed(std::uint64_t seed, std::string_view model_id) {
  return seeded_hash(seed, model_id);
}

/// One mono-vs-multi comparison family ("finetune" or "pretrain").
struct Phase3Comparison {
  std::string setting;
  std::string mono_model;
  std::string multi_model;
  std::vector<std::string> languages;  // empty: every configured language
};

struct ExperimentConfig {
  std::vector<std::string> languages;
  std::vector<Attribute> attributes;
  double alpha = 0.05;
  MajorityMap majority_religion;                   // per-language overrides
  std::map<Attribute, MajorityMap> majority_groups;  // MBCM opt-in for non-religion attributes
  std::vector<std::string> template_files;
  std::vector<std::string> lexicon_files;
  std::map<std::string, std::string> prediction_files;  // language -> path
  std::vector<ModelSpec> models;
  std::vector<Phase3Comparison> phase3;
  std::uint64_t seed = 0;
  std::string output_dir = "biasprobe_out";
  StatsOptions stats;
  std::size_t jobs = 1;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingPath, "cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing '" + path.string() + "'");
}

namespace detail {

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

inline void require_exists(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingPath, what + " '" + path + "' does not exist");
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (j[key].is_string()) return {j[key].get<std::string>()};
  return j[key].get<std::vector<std::string>>();
}

inline ScorerConfig parse_scorer(const nlohmann::json& jm, const std::filesystem::path& base, std::uint64_t seed) {
  ScorerConfig sc;
  const std::string mode = get_or<std::string>(jm, "scorer", "mock");
  auto m = try_parse_scorer_mode(mode);
  if (!m) throw Error(ErrorCode::MalformedConfig, "unknown scorer mode '" + mode + "'");
  sc.mode = *m;
  sc.model_id = jm.at("model_id").get<std::string>();
  sc.endpoint = get_or<std::string>(jm, "endpoint", "");
  sc.batch_size = get_or<std::size_t>(jm, "batch_size", 32);
  sc.max_in_flight = get_or<std::size_t>(jm, "max_in_flight", 1);
  sc.retry_count = get_or<std::size_t>(jm, "retry_count", 3);
  if (jm.contains("cache_path")) sc.cache_path = resolve(base, jm["cache_path"].get<std::string>());
  if (jm.contains("score_file")) sc.score_file = resolve(base, jm["score_file"].get<std::string>());
  sc.seed = jm.contains("seed") ? jm["seed"].get<std::uint64_t>() : derived_model_seed(seed, sc.model_id);
  if (jm.contains("timeout_ms")) sc.timeout = std::chrono::milliseconds(jm["timeout_ms"].get<std::int64_t>());
  validate(sc);
  return sc;
}

}  // namespace detail

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Template, lexicon and prediction files must exist; score files are checked
/// when a phase reads them.
inline ExperimentConfig parse_config(std::string_view bytes, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedConfig, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "config must be a JSON object");
  ExperimentConfig c;
  try {
    c.languages = detail::string_list(j, "languages");
    if (c.languages.empty()) throw Error(ErrorCode::MalformedConfig, "at least one language is required");
    if (j.contains("attributes")) {
      for (const auto& a : j["attributes"].get<std::vector<std::string>>()) {
        auto attr = try_parse_attribute(a);
        if (!attr) throw Error(ErrorCode::MalformedConfig, "unknown attribute '" + a + "'");
        c.attributes.push_back(*attr);
      }
    } else {
      c.attributes.assign(kAllAttributes.begin(), kAllAttributes.end());
    }
    c.alpha = detail::get_or<double>(j, "alpha", 0.05);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error(ErrorCode::MalformedConfig, "alpha must lie in (0, 1)");
    if (j.contains("majority_religion")) c.majority_religion = j["majority_religion"].get<MajorityMap>();
    if (j.contains("majority_groups")) {
      for (const auto& [attr, map] : j["majority_groups"].items()) {
        auto a = try_parse_attribute(attr);
        if (!a) throw Error(ErrorCode::MalformedConfig, "unknown attribute '" + attr + "' in majority_groups");
        c.majority_groups[*a] = map.get<MajorityMap>();
      }
    }
    for (const auto& p : detail::string_list(j, "templates")) {
      c.template_files.push_back(detail::resolve(base_dir, p));
      detail::require_exists(c.template_files.back(), "template file");
    }
    for (const auto& p : detail::string_list(j, "lexicons")) {
      c.lexicon_files.push_back(detail::resolve(base_dir, p));
      detail::require_exists(c.lexicon_files.back(), "lexicon file");
    }
    if (j.contains("predictions")) {
      for (const auto& [lang, path] : j["predictions"].items()) {
        c.prediction_files[lang] = detail::resolve(base_dir, path.get<std::string>());
        detail::require_exists(c.prediction_files[lang], "prediction file");
      }
    }
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("models")) {
      for (const auto& jm : j["models"]) {
        ModelSpec m;
        m.model_id = jm.at("model_id").get<std::string>();
        m.scorer = detail::parse_scorer(jm, base_dir, c.seed);
        m.languages = detail::string_list(jm, "languages");
        m.seed_explicit = jm.contains("seed");
        c.models.push_back(std::move(m));
      }
    }
    if (j.contains("phase3")) {
      for (const auto& jp : j["phase3"]) {
        Phase3Comparison p;
        p.setting = jp.at("setting").get<std::string>();
        p.mono_model = jp.at("mono_model").get<std::string>();
        p.multi_model = jp.at("multi_model").get<std::string>();
        p.languages = detail::string_list(jp, "languages");
        c.phase3.push_back(std::move(p));
      }
    }
    if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j["output_dir"].get<std::string>());
    c.jobs = detail::get_or<std::size_t>(j, "jobs", 1);
    if (c.jobs < 1) throw Error(ErrorCode::MalformedConfig, "jobs must be >= 1");
    if (j.contains("stats")) {
      c.stats.mcnemar_exact_below = detail::get_or<std::size_t>(j["stats"], "mcnemar_exact_below", 25);
      c.stats.wilcoxon_exact_max = detail::get_or<std::size_t>(j["stats"], "wilcoxon_exact_max", 20);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, e.what());
  }
  return c;
}

/// Replaces the run seed; mock models without an explicit seed follow it.
inline void apply_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  for (auto& m : c.models)
    if (!m.seed_explicit) m.scorer.seed = derived_model_seed(seed, m.model_id);
}

/// Loads and validates a config file; BIASPROBE_OUT overrides output_dir.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingPath, "config '" + path.string() + "' does not exist");
  ExperimentConfig c = parse_config(read_file(path), path.parent_path());
  if (const char* env = std::getenv("BIASPROBE_OUT"); env && *env) c.output_dir = env;
  return c;
}

}  // namespace biasprobe
