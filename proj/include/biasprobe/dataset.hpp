#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/hashing.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

struct LabeledRecord {
  std::string record_id;
  std::string text;
  Label label = Label::neutral;

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

struct LabeledDataset {
  std::vector<LabeledRecord> records;

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const LabeledRecord& r) { return r.label == l; }));
  }
};

inline LabeledDataset read_dataset_jsonl(std::string_view bytes) {
  LabeledDataset ds;
  std::set<std::string> ids;
  std::istringstream in{std::string(bytes)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    LabeledRecord r;
    try {
      auto j = nlohmann::json::parse(line);
      r.record_id = j.at("record_id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      auto l = try_parse_label(j.at("label").get<std::string>());
      if (!l) throw Error(ErrorCode::MalformedLine, where + ": label must be positive|negative|neutral");
      r.label = *l;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + ": " + e.what());
    }
    if (!ids.insert(r.record_id).second)
      throw Error(ErrorCode::MalformedLine, where + ": duplicate record_id '" + r.record_id + "'");
    ds.records.push_back(std::move(r));
  }
  return ds;
}

inline std::string write_dataset_jsonl(const LabeledDataset& ds) {
  std::string out;
  for (const auto& r : ds.records) {
    nlohmann::ordered_json j = {
        {"record_id", r.record_id}, {"text", r.text}, {"label", std::string(to_string(r.label))}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace detail {

inline void require_binary(const LabeledDataset& ds) {
  for (const auto& r : ds.records)
    if (r.label == Label::neutral)
      throw Error(ErrorCode::NeutralLabelPresent, "record '" + r.record_id + "' is neutral");
}

/// Uniformly keeps `target` records of each binary label; result sorted by id.
inline LabeledDataset subsample_per_label(const LabeledDataset& ds, std::size_t pos_target, std::size_t neg_target,
                                          std::uint64_t seed) {
  std::vector<const LabeledRecord*> pos, neg;
  for (const auto& r : ds.records) (r.label == Label::positive ? pos : neg).push_back(&r);
  // Draws are made over the id-sorted view so input order does not matter.
  auto by_id = [](const LabeledRecord* a, const LabeledRecord* b) { return a->record_id < b->record_id; };
  std::sort(pos.begin(), pos.end(), by_id);
  std::sort(neg.begin(), neg.end(), by_id);
  LabeledDataset out;
  for (std::size_t i : sample_indices(pos.size(), pos_target, splitmix64(seed ^ 0x706F73ULL)))
    out.records.push_back(*pos[i]);
  for (std::size_t i : sample_indices(neg.size(), neg_target, splitmix64(seed ^ 0x6E6567ULL)))
    out.records.push_back(*neg[i]);
  std::sort(out.records.begin(), out.records.end(),
            [](const LabeledRecord& a, const LabeledRecord& b) { return a.record_id < b.record_id; });
  return out;
}

}  // namespace detail

/// Downsamples the majority label so positive and negative counts match.
inline LabeledDataset balance_labels(const LabeledDataset& ds, std::uint64_t seed) {
  detail::require_binary(ds);
  const std::size_t target = std::min(ds.count(Label::positive), ds.count(Label::negative));
  return detail::subsample_per_label(ds, target, target, seed);
}

/// Brings every language to the same per-label counts: the minimum positive
/// count and the minimum negative count across languages.
inline std::map<std::string, LabeledDataset> downsample_equal(const std::map<std::string, LabeledDataset>& datasets,
                                                              std::uint64_t seed) {
  if (datasets.empty()) throw Error(ErrorCode::EmptyLabelClass, "no datasets given");
  std::size_t min_pos = std::numeric_limits<std::size_t>::max();
  std::size_t min_neg = std::numeric_limits<std::size_t>::max();
  for (const auto& [lang, ds] : datasets) {
    detail::require_binary(ds);
    const std::size_t pos = ds.count(Label::positive), neg = ds.count(Label::negative);
    if (pos == 0 || neg == 0)
      throw Error(ErrorCode::EmptyLabelClass, "language '" + lang + "' has an empty label class");
    min_pos = std::min(min_pos, pos);
    min_neg = std::min(min_neg, neg);
  }
  std::map<std::string, LabeledDataset> out;
  for (const auto& [lang, ds] : datasets)
    out[lang] = detail::subsample_per_label(ds, min_pos, min_neg, seeded_hash(seed, lang));
  return out;
}

}  // namespace biasprobe
