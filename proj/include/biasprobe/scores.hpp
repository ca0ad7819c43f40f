#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/hashing.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

/// Positive-sentiment probability for one sample (1 = positive, 0 = negative).
struct ScoreRecord {
  std::string sample_id;
  double p_positive = 0.5;
  std::optional<Label> pred_label;
  std::optional<std::string> model_id;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

inline bool valid_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

class ScoreTable {
 public:
  void insert(ScoreRecord record) {
    if (record.sample_id.empty()) throw Error(ErrorCode::MalformedLine, "empty sample_id");
    if (!valid_probability(record.p_positive))
      throw Error(ErrorCode::ProbabilityOutOfRange,
                  "p_positive for '" + record.sample_id + "' is outside [0, 1]");
    auto id = record.sample_id;
    if (!records_.emplace(id, std::move(record)).second)
      throw Error(ErrorCode::DuplicateSampleId, "sample_id '" + id + "' scored twice");
  }

  /// Absent ids yield nullptr; there is no default score.
  const ScoreRecord* find(std::string_view id) const {
    auto it = records_.find(std::string(id));
    return it == records_.end() ? nullptr : &it->second;
  }

  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::map<std::string, ScoreRecord>& records() const { return records_; }

  friend bool operator==(const ScoreTable&, const ScoreTable&) = default;

 private:
  std::map<std::string, ScoreRecord> records_;
};

inline nlohmann::ordered_json to_json(const ScoreRecord& r) {
  nlohmann::ordered_json j = {{"sample_id", r.sample_id}, {"p_positive", r.p_positive}};
  if (r.pred_label) j["pred_label"] = std::string(to_string(*r.pred_label));
  if (r.model_id) j["model_id"] = *r.model_id;
  return j;
}

/// Parses one score-file line. `line_no` is only used in messages.
inline ScoreRecord parse_score_line(std::string_view line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedLine, where + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("sample_id") || !j["sample_id"].is_string() || !j.contains("p_positive") ||
      !j["p_positive"].is_number())
    throw Error(ErrorCode::MalformedLine, where + ": need string sample_id and numeric p_positive");
  ScoreRecord r;
  r.sample_id = j["sample_id"].get<std::string>();
  if (r.sample_id.empty()) throw Error(ErrorCode::MalformedLine, where + ": empty sample_id");
  r.p_positive = j["p_positive"].get<double>();
  if (!valid_probability(r.p_positive))
    throw Error(ErrorCode::ProbabilityOutOfRange, where + ": p_positive outside [0, 1]");
  if (j.contains("pred_label") && !j["pred_label"].is_null()) {
    auto l = j["pred_label"].is_string() ? try_parse_label(j["pred_label"].get<std::string>()) : std::nullopt;
    if (!l) throw Error(ErrorCode::MalformedLine, where + ": bad pred_label");
    r.pred_label = l;
  }
  if (j.contains("model_id") && !j["model_id"].is_null()) {
    if (!j["model_id"].is_string()) throw Error(ErrorCode::MalformedLine, where + ": model_id must be a string");
    r.model_id = j["model_id"].get<std::string>();
  }
  return r;
}

template <typename F>
void for_each_line(std::string_view bytes, F&& f) {
  std::size_t line_no = 0, start = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string_view::npos) end = bytes.size();
    ++line_no;
    std::string_view line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) f(line, line_no);
    start = end + 1;
  }
}

inline ScoreTable read_scores(std::string_view bytes) {
  ScoreTable table;
  for_each_line(bytes, [&](std::string_view line, std::size_t line_no) {
    ScoreRecord r = parse_score_line(line, line_no);
    if (table.contains(r.sample_id))
      throw Error(ErrorCode::DuplicateSampleId,
                  "line " + std::to_string(line_no) + ": sample_id '" + r.sample_id + "' already present");
    table.insert(std::move(r));
  });
  return table;
}

inline std::string write_scores(const ScoreTable& table) {
  std::string out;
  for (const auto& [id, r] : table.records()) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

/// Deterministic stand-in for a model: p = hash(seed, sample_id) mapped to [0, 1).
inline double mock_probability(std::uint64_t seed, std::string_view sample_id) {
  return unit_interval(seeded_hash(seed, sample_id));
}

inline ScoreTable mock_score(const std::vector<BiasSample>& samples, std::uint64_t seed,
                             std::optional<std::string> model_id = std::nullopt) {
  ScoreTable table;
  for (const auto& s : samples) {
    if (table.contains(s.sample_id)) continue;
    table.insert({s.sample_id, mock_probability(seed, s.sample_id), std::nullopt, model_id});
  }
  return table;
}

inline ScoreTable constant_score(const std::vector<BiasSample>& samples, double p,
                                 std::optional<std::string> model_id = std::nullopt) {
  ScoreTable table;
  for (const auto& s : samples)
    if (!table.contains(s.sample_id)) table.insert({s.sample_id, p, std::nullopt, model_id});
  return table;
}

}  // namespace biasprobe
