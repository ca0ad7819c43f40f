#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/config.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/experiments.hpp"
#include "biasprobe/metrics.hpp"
#include "biasprobe/stats.hpp"

namespace biasprobe {

enum class ReportFormat { json, csv };

inline std::optional<ReportFormat> try_parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  return std::nullopt;
}

/// Fixed 6-decimal rendering; negative zero prints as zero.
inline std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline Gender gender_from(const nlohmann::json& j) {
  auto g = try_parse_gender(j.get<std::string>());
  if (!g) throw Error(ErrorCode::MalformedJson, "bad gender '" + j.get<std::string>() + "'");
  return *g;
}

inline void expect_kind(const nlohmann::json& j, std::string_view kind) {
  if (!j.is_object() || !j.contains("kind") || j["kind"] != kind)
    throw Error(ErrorCode::MalformedJson, "expected a " + std::string(kind) + " document");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Phase1Report& r) {
  nlohmann::json j;
  j["kind"] = "phase1";
  j["languages"] = r.languages;
  j["alpha"] = r.alpha;
  j["accuracy"] = r.accuracy;
  j["accuracy_two_way"] = r.accuracy_two_way;
  j["p_matrix"] = r.p_matrix;
  j["language_sets"] = r.language_sets;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs)
    j["pairs"].push_back({{"language_a", p.language_a},
                          {"language_b", p.language_b},
                          {"a_only_correct", p.a_only_correct},
                          {"b_only_correct", p.b_only_correct},
                          {"test", to_json(p.result)}});
  return j;
}

inline Phase1Report phase1_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "phase1");
  Phase1Report r;
  try {
    r.languages = j.at("languages").get<std::vector<std::string>>();
    r.alpha = j.at("alpha").get<double>();
    r.accuracy = j.at("accuracy").get<std::map<std::string, double>>();
    r.accuracy_two_way = j.at("accuracy_two_way").get<std::map<std::string, double>>();
    r.p_matrix = j.at("p_matrix").get<std::vector<std::vector<double>>>();
    r.language_sets = j.at("language_sets").get<std::vector<std::vector<std::string>>>();
    for (const auto& p : j.at("pairs"))
      r.pairs.push_back({p.at("language_a").get<std::string>(), p.at("language_b").get<std::string>(),
                         p.at("a_only_correct").get<std::size_t>(), p.at("b_only_correct").get<std::size_t>(),
                         test_result_from_json(p.at("test"))});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("phase1 report: ") + e.what());
  }
  return r;
}

inline nlohmann::json to_json(const Phase2Report& r) {
  nlohmann::json j;
  j["kind"] = "phase2";
  j["languages"] = r.languages;
  j["models"] = r.models;
  j["attributes"] = nlohmann::json::array();
  for (Attribute a : r.attributes) j["attributes"].push_back(std::string(to_string(a)));
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) j["cells"].push_back({{"metrics", to_json(c.metrics)}, {"group_test", to_json(c.group_test)}});
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : r.skipped)
    j["skipped"].push_back({{"attribute", std::string(to_string(s.attribute))},
                            {"language", s.language},
                            {"gender", std::string(to_string(s.gender))},
                            {"model_id", s.model_id},
                            {"reason", s.reason}});
  j["gender_gaps"] = nlohmann::json::array();
  for (const auto& g : r.gender_gaps)
    j["gender_gaps"].push_back({{"attribute", std::string(to_string(g.attribute))},
                                {"language", g.language},
                                {"model_id", g.model_id},
                                {"pairs", g.pairs},
                                {"test", to_json(g.result)}});
  j["averaged"] = nlohmann::json::array();
  for (const auto& m : r.averaged) j["averaged"].push_back(to_json(m));
  return j;
}

inline Phase2Report phase2_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "phase2");
  Phase2Report r;
  try {
    r.languages = j.at("languages").get<std::vector<std::string>>();
    r.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& a : j.at("attributes")) r.attributes.push_back(parse_attribute(a.get<std::string>()));
    for (const auto& c : j.at("cells"))
      r.cells.push_back({metric_report_from_json(c.at("metrics")), test_result_from_json(c.at("group_test"))});
    for (const auto& s : j.at("skipped"))
      r.skipped.push_back({parse_attribute(s.at("attribute").get<std::string>()), s.at("language").get<std::string>(),
                           detail::gender_from(s.at("gender")), s.at("model_id").get<std::string>(),
                           s.at("reason").get<std::string>()});
    for (const auto& g : j.at("gender_gaps"))
      r.gender_gaps.push_back({parse_attribute(g.at("attribute").get<std::string>()), g.at("language").get<std::string>(),
                               g.at("model_id").get<std::string>(), g.at("pairs").get<std::size_t>(),
                               test_result_from_json(g.at("test"))});
    for (const auto& m : j.at("averaged")) r.averaged.push_back(metric_report_from_json(m));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("phase2 report: ") + e.what());
  }
  return r;
}

inline nlohmann::json to_json(const Phase3Record& r) {
  return {{"setting", r.setting},
          {"attribute", std::string(to_string(r.attribute))},
          {"language", r.language},
          {"gender", std::string(to_string(r.gender))},
          {"mono_model", r.mono_model},
          {"multi_model", r.multi_model},
          {"mono_mcm", r.mono_mcm},
          {"multi_mcm", r.multi_mcm},
          {"delta", r.delta},
          {"amplified", r.amplified},
          {"probability_shift", r.probability_shift}};
}

inline nlohmann::json to_json(const Phase3Report& r) {
  nlohmann::json j;
  j["kind"] = "phase3";
  j["records"] = nlohmann::json::array();
  for (const auto& rec : r.records) j["records"].push_back(to_json(rec));
  j["summary"] = nlohmann::json::object();
  for (const auto& [setting, s] : r.summary)
    j["summary"][setting] = {{"cells", s.cells}, {"amplified", s.amplified}, {"fraction", s.fraction()}};
  return j;
}

inline Phase3Report phase3_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "phase3");
  Phase3Report r;
  try {
    for (const auto& x : j.at("records")) {
      Phase3Record rec;
      rec.setting = x.at("setting").get<std::string>();
      rec.attribute = parse_attribute(x.at("attribute").get<std::string>());
      rec.language = x.at("language").get<std::string>();
      rec.gender = detail::gender_from(x.at("gender"));
      rec.mono_model = x.at("mono_model").get<std::string>();
      rec.multi_model = x.at("multi_model").get<std::string>();
      rec.mono_mcm = x.at("mono_mcm").get<double>();
      rec.multi_mcm = x.at("multi_mcm").get<double>();
      rec.delta = x.at("delta").get<double>();
      rec.amplified = x.at("amplified").get<bool>();
      rec.probability_shift = x.at("probability_shift").get<std::map<std::string, double>>();
      r.records.push_back(std::move(rec));
    }
    for (const auto& [setting, s] : j.at("summary").items())
      r.summary[setting] = {s.at("cells").get<std::size_t>(), s.at("amplified").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("phase3 report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV tables

/// File name -> contents.
using ReportFiles = std::map<std::string, std::string>;

inline ReportFiles render_csv(const Phase1Report& r) {
  ReportFiles files;
  detail::CsvWriter acc;
  acc.row({"language", "three_way", "two_way"});
  for (const auto& lang : r.languages) {
    auto it = r.accuracy.find(lang);
    auto jt = r.accuracy_two_way.find(lang);
    acc.row({lang, it == r.accuracy.end() ? "" : fixed6(it->second),
             jt == r.accuracy_two_way.end() ? "" : fixed6(jt->second)});
  }
  files["accuracy.csv"] = acc.str();

  detail::CsvWriter mc;
  mc.row({"language_a", "language_b", "a_only_correct", "b_only_correct", "method", "statistic", "p_value", "exact"});
  for (const auto& p : r.pairs)
    mc.row({p.language_a, p.language_b, std::to_string(p.a_only_correct), std::to_string(p.b_only_correct),
            p.result.method, fixed6(p.result.statistic), fixed6(p.result.p_value), p.result.exact ? "true" : "false"});
  files["mcnemar.csv"] = mc.str();

  detail::CsvWriter sets;
  sets.row({"set", "language"});
  for (std::size_t i = 0; i < r.language_sets.size(); ++i)
    for (const auto& lang : r.language_sets[i]) sets.row({std::to_string(i + 1), lang});
  files["language_sets.csv"] = sets.str();
  return files;
}

/// One table per attribute: rows are (model, metric, group), columns are
/// `<language>_F`, `<language>_M` in configured language order.
inline ReportFiles render_csv(const Phase2Report& r) {
  ReportFiles files;
  std::vector<const MetricReport*> all;
  for (const auto& c : r.cells) all.push_back(&c.metrics);
  for (const auto& m : r.averaged) all.push_back(&m);
  std::vector<std::string> models = r.models;
  for (const auto& m : r.averaged)
    if (std::find(models.begin(), models.end(), m.model_id) == models.end()) models.push_back(m.model_id);

  for (Attribute a : r.attributes) {
    detail::CsvWriter w;
    std::vector<std::string> header = {"model", "metric", "group"};
    for (const auto& lang : r.languages) {
      header.push_back(lang + "_F");
      header.push_back(lang + "_M");
    }
    w.row(header);
    for (const auto& model : models) {
      std::map<std::pair<std::string, Gender>, const MetricReport*> by;
      std::set<std::string> groups, mb_groups;
      for (const auto* m : all) {
        if (m->attribute != a || m->model_id != model) continue;
        by[{m->language, m->gender}] = m;
        for (const auto& [g, x] : m->v) groups.insert(g);
        if (m->mbcm)
          for (const auto& [g, x] : *m->mbcm) mb_groups.insert(g);
      }
      if (by.empty()) continue;
      auto emit = [&](const std::string& metric, const std::string& group, auto value) {
        std::vector<std::string> row = {model, metric, group};
        for (const auto& lang : r.languages) {
          for (Gender g : kAllGenders) {
            auto it = by.find({lang, g});
            std::optional<double> x = it == by.end() ? std::nullopt : value(*it->second);
            row.push_back(x ? fixed6(*x) : "");
          }
        }
        w.row(row);
      };
      emit("mcm", "", [](const MetricReport& m) -> std::optional<double> { return m.mcm; });
      for (const auto& grp : groups)
        emit("vbcm", grp, [&](const MetricReport& m) -> std::optional<double> {
          auto it = m.vbcm.find(grp);
          return it == m.vbcm.end() ? std::nullopt : std::optional<double>(it->second);
        });
      for (const auto& grp : mb_groups)
        emit("mbcm", grp, [&](const MetricReport& m) -> std::optional<double> {
          if (!m.mbcm) return std::nullopt;
          auto it = m.mbcm->find(grp);
          return it == m.mbcm->end() ? std::nullopt : std::optional<double>(it->second);
        });
    }
    files[std::string(to_string(a)) + ".csv"] = w.str();
  }

  detail::CsvWriter dist;
  dist.row({"attribute", "language", "gender", "group", "v", "model"});
  for (const auto* m : all)
    for (const auto& [g, x] : m->v)
      dist.row({std::string(to_string(m->attribute)), m->language, std::string(to_string(m->gender)), g, fixed6(x),
                m->model_id});
  files["v_distributions.csv"] = dist.str();

  detail::CsvWriter tests;
  tests.row({"test", "attribute", "language", "gender", "model", "method", "statistic", "p_value", "n_effective", "exact"});
  for (const auto& c : r.cells)
    tests.row({"groups", std::string(to_string(c.metrics.attribute)), c.metrics.language,
               std::string(to_string(c.metrics.gender)), c.metrics.model_id, c.group_test.method,
               fixed6(c.group_test.statistic), fixed6(c.group_test.p_value), std::to_string(c.group_test.n_effective),
               c.group_test.exact ? "true" : "false"});
  for (const auto& g : r.gender_gaps)
    tests.row({"gender_gap", std::string(to_string(g.attribute)), g.language, "", g.model_id, g.result.method,
               fixed6(g.result.statistic), fixed6(g.result.p_value), std::to_string(g.result.n_effective),
               g.result.exact ? "true" : "false"});
  files["tests.csv"] = tests.str();

  detail::CsvWriter skipped;
  skipped.row({"attribute", "language", "gender", "model", "reason"});
  for (const auto& s : r.skipped)
    skipped.row({std::string(to_string(s.attribute)), s.language, std::string(to_string(s.gender)), s.model_id, s.reason});
  files["skipped.csv"] = skipped.str();
  return files;
}

/// mcm_delta.csv mirrors the mono/multi layout: one row per (setting,
/// attribute, gender) with `<lang>` and `<lang>M` columns.
inline ReportFiles render_csv(const Phase3Report& r) {
  ReportFiles files;
  std::vector<std::string> languages;
  for (const auto& rec : r.records)
    if (std::find(languages.begin(), languages.end(), rec.language) == languages.end()) languages.push_back(rec.language);

  using RowKey = std::tuple<std::string, Attribute, Gender>;
  std::vector<RowKey> order;
  std::map<RowKey, std::map<std::string, const Phase3Record*>> rows;
  for (const auto& rec : r.records) {
    RowKey k{rec.setting, rec.attribute, rec.gender};
    if (!rows.count(k)) order.push_back(k);
    rows[k][rec.language] = &rec;
  }
  detail::CsvWriter w;
  std::vector<std::string> header = {"setting", "attribute", "gender"};
  for (const auto& lang : languages) {
    header.push_back(lang);
    header.push_back(lang + "M");
    header.push_back(lang + "_delta");
    header.push_back(lang + "_amplified");
  }
  w.row(header);
  for (const auto& k : order) {
    std::vector<std::string> row = {std::get<0>(k), std::string(to_string(std::get<1>(k))),
                                    std::string(gender_letter(std::get<2>(k)))};
    for (const auto& lang : languages) {
      auto it = rows[k].find(lang);
      if (it == rows[k].end()) {
        row.insert(row.end(), {"", "", "", ""});
        continue;
      }
      const auto* rec = it->second;
      row.push_back(fixed6(rec->mono_mcm));
      row.push_back(fixed6(rec->multi_mcm));
      row.push_back(fixed6(rec->delta));
      row.push_back(rec->amplified ? "yes" : "no");
    }
    w.row(row);
  }
  files["mcm_delta.csv"] = w.str();

  detail::CsvWriter shift;
  shift.row({"setting", "attribute", "language", "gender", "group", "shift"});
  for (const auto& rec : r.records)
    for (const auto& [g, x] : rec.probability_shift)
      shift.row({rec.setting, std::string(to_string(rec.attribute)), rec.language, std::string(to_string(rec.gender)), g,
                 fixed6(x)});
  files["probability_shift.csv"] = shift.str();

  detail::CsvWriter summary;
  summary.row({"setting", "cells", "amplified", "fraction"});
  for (const auto& [setting, s] : r.summary)
    summary.row({setting, std::to_string(s.cells), std::to_string(s.amplified), fixed6(s.fraction())});
  files["amplification.csv"] = summary.str();
  return files;
}

// ---------------------------------------------------------------------------
// Emission

inline void write_files(const std::filesystem::path& dir, const ReportFiles& files) {
  for (const auto& [name, bytes] : files) write_file(dir / name, bytes);
}

template <typename Report>
ReportFiles render(const Report& r, ReportFormat format, std::string_view json_name) {
  if (format == ReportFormat::json) return {{std::string(json_name), detail::dump(to_json(r))}};
  return render_csv(r);
}

inline void emit_report(const Phase1Report& r, ReportFormat f, const std::filesystem::path& dir) {
  write_files(dir, render(r, f, "phase1.json"));
}
inline void emit_report(const Phase2Report& r, ReportFormat f, const std::filesystem::path& dir) {
  write_files(dir, render(r, f, "phase2.json"));
}
inline void emit_report(const Phase3Report& r, ReportFormat f, const std::filesystem::path& dir) {
  write_files(dir, render(r, f, "phase3.json"));
}

}  // namespace biasprobe
