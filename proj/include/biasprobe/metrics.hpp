#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/scores.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

/// Dense groups x templates matrix of mean positive probabilities for one
/// (attribute, language, gender) slice. Row i is group i, column j template j.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> groups, std::vector<std::string> templates, std::vector<double> values)
      : groups_(std::move(groups)), templates_(std::move(templates)), values_(std::move(values)) {
    if (groups_.empty() || templates_.empty())
      throw Error(ErrorCode::EmptyCell, "score matrix needs at least one group and one template");
    if (values_.size() != groups_.size() * templates_.size())
      throw Error(ErrorCode::LengthMismatch, "score matrix value count does not match its shape");
    for (double v : values_)
      if (!valid_probability(v)) throw Error(ErrorCode::ProbabilityOutOfRange, "matrix entry outside [0, 1]");
  }

  std::size_t groups_count() const { return groups_.size(); }
  std::size_t templates_count() const { return templates_.size(); }
  const std::vector<std::string>& groups() const { return groups_; }
  const std::vector<std::string>& templates() const { return templates_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(std::size_t group, std::size_t tmpl) const { return values_[group * templates_.size() + tmpl]; }
  std::span<const double> row(std::size_t group) const {
    return {values_.data() + group * templates_.size(), templates_.size()};
  }

  std::optional<std::size_t> group_index(std::string_view name) const {
    for (std::size_t i = 0; i < groups_.size(); ++i)
      if (groups_[i] == name) return i;
    return std::nullopt;
  }

  Attribute attribute = Attribute::race;
  std::string language;
  Gender gender = Gender::female;

 private:
  std::vector<std::string> groups_;
  std::vector<std::string> templates_;
  std::vector<double> values_;
};

/// Builds the matrix for one slice. Cell (i, j) is the mean p_positive over
/// the identity-term samples of group i and template j. Groups and templates
/// are in lexicographic order. For the gender attribute the group dimension is
/// the subject gender itself, so `gender` does not filter; both genders form
/// the rows.
inline ScoreMatrix group_template_score(const std::vector<BiasSample>& samples, const ScoreTable& table,
                                        Attribute attribute, std::string_view language, Gender gender) {
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> cells;
  std::set<std::string> groups, templates;
  std::vector<std::string> missing;
  for (const auto& s : samples) {
    if (s.attribute != attribute || s.language != language) continue;
    if (attribute != Attribute::gender && s.gender != gender) continue;
    groups.insert(s.group);
    templates.insert(s.template_id);
    const ScoreRecord* r = table.find(s.sample_id);
    if (!r) {
      missing.push_back(s.sample_id);
      continue;
    }
    auto& cell = cells[{s.group, s.template_id}];
    cell.first += r->p_positive;
    ++cell.second;
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = std::to_string(missing.size()) + " sample(s) without a score, first '" + missing.front() + "'";
    throw Error(ErrorCode::MissingScore, msg, std::move(missing));
  }
  if (groups.empty())
    throw Error(ErrorCode::EmptyCell, "no samples for " + std::string(to_string(attribute)) + "/" +
                                          std::string(language) + "/" + std::string(to_string(gender)));
  std::vector<double> values;
  values.reserve(groups.size() * templates.size());
  for (const auto& g : groups) {
    for (const auto& t : templates) {
      auto it = cells.find({g, t});
      if (it == cells.end() || it->second.second == 0)
        throw Error(ErrorCode::EmptyCell, "no samples for group '" + g + "' and template '" + t + "'");
      values.push_back(it->second.first / static_cast<double>(it->second.second));
    }
  }
  ScoreMatrix m({groups.begin(), groups.end()}, {templates.begin(), templates.end()}, std::move(values));
  m.attribute = attribute;
  m.language = std::string(language);
  m.gender = gender;
  return m;
}

namespace detail {
inline void require_two_groups(const ScoreMatrix& m) {
  if (m.groups_count() < 2) throw Error(ErrorCode::SingleGroup, "metric needs at least two groups");
}

/// Mean taken relative to the first entry, so an all-equal column yields
/// that value exactly.
inline double column_mean(const ScoreMatrix& m, std::size_t j) {
  const double pivot = m(0, j);
  double sum = 0.0;
  for (std::size_t i = 0; i < m.groups_count(); ++i) sum += m(i, j) - pivot;
  return pivot + sum / static_cast<double>(m.groups_count());
}
}  // namespace detail

/// Multi-group comparison: mean over templates of the population standard
/// deviation of the group scores.
inline double mcm(const ScoreMatrix& m) {
  detail::require_two_groups(m);
  const std::size_t groups = m.groups_count(), n = m.templates_count();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = detail::column_mean(m, j);
    double ss = 0.0;
    for (std::size_t i = 0; i < groups; ++i) ss += (m(i, j) - mean) * (m(i, j) - mean);
    total += std::sqrt(ss / static_cast<double>(groups));
  }
  return total / static_cast<double>(n);
}

/// Per-group mean deviation from the all-groups mean (the group itself included).
inline std::map<std::string, double> vbcm(const ScoreMatrix& m) {
  detail::require_two_groups(m);
  const std::size_t n = m.templates_count();
  std::vector<double> background(n);
  for (std::size_t j = 0; j < n; ++j) background[j] = detail::column_mean(m, j);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < m.groups_count(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += m(i, j) - background[j];
    out[m.groups()[i]] = sum / static_cast<double>(n);
  }
  return out;
}

/// Per-group mean score across templates.
inline std::map<std::string, double> v(const ScoreMatrix& m) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < m.groups_count(); ++i) {
    double sum = 0.0;
    for (double x : m.row(i)) sum += x;
    out[m.groups()[i]] = sum / static_cast<double>(m.templates_count());
  }
  return out;
}

/// Per non-majority group: mean difference from the majority group's score.
inline std::map<std::string, double> mbcm(const ScoreMatrix& m, std::string_view majority_group) {
  auto maj = m.group_index(majority_group);
  if (!maj)
    throw Error(ErrorCode::UnknownMajorityGroup, "majority group '" + std::string(majority_group) + "' not in matrix");
  detail::require_two_groups(m);
  const std::size_t n = m.templates_count();
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < m.groups_count(); ++i) {
    if (i == *maj) continue;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += m(i, j) - m(*maj, j);
    out[m.groups()[i]] = sum / static_cast<double>(n);
  }
  return out;
}

using MajorityMap = std::map<std::string, std::string>;

/// Most frequent religion per language in the reference study.
inline MajorityMap default_majority_religions() {
  return {{"en", "Christianity"}, {"es", "Christianity"}, {"it", "Christianity"},
          {"he", "Judaism"},      {"zh", "Buddhism"}};
}

inline std::string majority_religion(std::string_view language, const MajorityMap& overrides = {}) {
  if (auto it = overrides.find(std::string(language)); it != overrides.end()) return it->second;
  const auto defaults = default_majority_religions();
  if (auto it = defaults.find(std::string(language)); it != defaults.end()) return it->second;
  throw Error(ErrorCode::UnknownLanguage, "no majority religion configured for '" + std::string(language) + "'");
}

struct MetricReport {
  Attribute attribute = Attribute::race;
  std::string language;
  Gender gender = Gender::female;
  std::string model_id;
  std::size_t n_samples = 0;
  std::size_t n_groups = 0;
  std::size_t n_templates = 0;
  double mcm = 0.0;
  std::map<std::string, double> vbcm;
  std::map<std::string, double> v;
  std::optional<std::string> majority_group;
  std::optional<std::map<std::string, double>> mbcm;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline MetricReport compute_metric_report(const ScoreMatrix& m, std::string model_id,
                                          std::optional<std::string> majority_group = std::nullopt,
                                          std::size_t n_samples = 0) {
  MetricReport r;
  r.attribute = m.attribute;
  r.language = m.language;
  r.gender = m.gender;
  r.model_id = std::move(model_id);
  r.n_samples = n_samples;
  r.n_groups = m.groups_count();
  r.n_templates = m.templates_count();
  r.mcm = mcm(m);
  r.vbcm = vbcm(m);
  r.v = v(m);
  if (majority_group) {
    r.mbcm = mbcm(m, *majority_group);
    r.majority_group = std::move(majority_group);
  }
  return r;
}

struct McmDelta {
  double delta = 0.0;
  bool amplified = false;
};

/// delta = mcm(multi) - mcm(mono); amplified when strictly positive.
inline McmDelta mcm_delta(const MetricReport& mono, const MetricReport& multi) {
  if (mono.attribute != multi.attribute || mono.language != multi.language || mono.gender != multi.gender)
    throw Error(ErrorCode::MismatchedMetadata, "reports describe different (attribute, language, gender) cells");
  const double d = multi.mcm - mono.mcm;
  return {d, d > 0.0};
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["attribute"] = std::string(to_string(r.attribute));
  j["language"] = r.language;
  j["gender"] = std::string(to_string(r.gender));
  j["model_id"] = r.model_id;
  j["n_samples"] = r.n_samples;
  j["n_groups"] = r.n_groups;
  j["n_templates"] = r.n_templates;
  j["mcm"] = r.mcm;
  j["vbcm"] = r.vbcm;
  j["v"] = r.v;
  j["majority_group"] = r.majority_group ? nlohmann::json(*r.majority_group) : nlohmann::json(nullptr);
  j["mbcm"] = r.mbcm ? nlohmann::json(*r.mbcm) : nlohmann::json(nullptr);
  return j;
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.attribute = parse_attribute(j.at("attribute").get<std::string>());
  r.language = j.at("language").get<std::string>();
  auto g = try_parse_gender(j.at("gender").get<std::string>());
  if (!g) throw Error(ErrorCode::MalformedJson, "metric report: bad gender");
  r.gender = *g;
  r.model_id = j.at("model_id").get<std::string>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.n_groups = j.at("n_groups").get<std::size_t>();
  r.n_templates = j.at("n_templates").get<std::size_t>();
  r.mcm = j.at("mcm").get<double>();
  r.vbcm = j.at("vbcm").get<std::map<std::string, double>>();
  r.v = j.at("v").get<std::map<std::string, double>>();
  if (!j.at("majority_group").is_null()) r.majority_group = j.at("majority_group").get<std::string>();
  if (!j.at("mbcm").is_null()) r.mbcm = j.at("mbcm").get<std::map<std::string, double>>();
  return r;
}

}  // namespace biasprobe
