#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/config.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/metrics.hpp"
#include "biasprobe/remote_scorer.hpp"
#include "biasprobe/scores.hpp"
#include "biasprobe/stats.hpp"
#include "biasprobe/templates.hpp"

namespace biasprobe {

// ---------------------------------------------------------------------------
// Accuracy

enum class AccuracyMode { three_way, two_way };

/// three_way: exact-match rate. two_way: exact-match rate over items whose
/// gold label is not neutral; a neutral prediction there counts as wrong.
inline double compute_accuracy(const std::vector<Label>& predictions, const std::vector<Label>& gold,
                               AccuracyMode mode) {
  if (predictions.size() != gold.size())
    throw Error(ErrorCode::LengthMismatch, "predictions and gold differ in length");
  std::size_t considered = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (mode == AccuracyMode::two_way && gold[i] == Label::neutral) continue;
    ++considered;
    if (predictions[i] == gold[i]) ++correct;
  }
  if (considered == 0)
    throw Error(ErrorCode::EmptyAfterFilter, mode == AccuracyMode::two_way ? "every gold label is neutral" : "no samples");
  return static_cast<double>(correct) / static_cast<double>(considered);
}

// ---------------------------------------------------------------------------
// Phase 1: task performance on a parallel test set

struct PredictionRecord {
  std::string sample_id;
  std::string language;
  Label pred_label = Label::neutral;
  Label gold_label = Label::neutral;
};

inline std::vector<PredictionRecord> read_predictions(std::string_view bytes) {
  std::vector<PredictionRecord> out;
  std::set<std::string> ids;
  for_each_line(bytes, [&](std::string_view line, std::size_t line_no) {
    const std::string where = "prediction line " + std::to_string(line_no);
    PredictionRecord r;
    try {
      auto j = nlohmann::json::parse(line);
      r.sample_id = j.at("sample_id").get<std::string>();
      r.language = j.value("language", "");
      auto p = try_parse_label(j.at("pred_label").get<std::string>());
      auto g = try_parse_label(j.at("gold_label").get<std::string>());
      if (!p || !g) throw Error(ErrorCode::MalformedLine, where + ": labels must be positive|negative|neutral");
      r.pred_label = *p;
      r.gold_label = *g;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + ": " + e.what());
    }
    if (!ids.insert(r.sample_id).second)
      throw Error(ErrorCode::DuplicateSampleId, where + ": sample_id '" + r.sample_id + "' repeated");
    out.push_back(std::move(r));
  });
  return out;
}

struct LanguagePairTest {
  std::string language_a;
  std::string language_b;
  std::size_t a_only_correct = 0;  // b in McNemar's notation
  std::size_t b_only_correct = 0;  // c
  TestResult result;

  friend bool operator==(const LanguagePairTest&, const LanguagePairTest&) = default;
};

struct Phase1Report {
  std::vector<std::string> languages;
  double alpha = 0.05;
  std::map<std::string, double> accuracy;
  std::map<std::string, double> accuracy_two_way;
  std::vector<LanguagePairTest> pairs;
  std::vector<std::vector<double>> p_matrix;  // languages x languages, diagonal 1
  std::vector<std::vector<std::string>> language_sets;

  friend bool operator==(const Phase1Report&, const Phase1Report&) = default;
};

/// Accuracy per language, McNemar for every language pair, and the language
/// sets that are not significantly different at alpha.
inline Phase1Report run_phase1(const std::vector<std::string>& languages,
                               const std::map<std::string, std::vector<PredictionRecord>>& predictions, double alpha,
                               const StatsOptions& opts = {}) {
  Phase1Report report;
  report.languages = languages;
  report.alpha = alpha;
  std::map<std::string, std::map<std::string, const PredictionRecord*>> by_lang;
  std::set<std::string> universe;
  for (const auto& lang : languages) {
    auto it = predictions.find(lang);
    if (it == predictions.end()) throw Error(ErrorCode::UnalignedTestSets, "no predictions for '" + lang + "'");
    for (const auto& r : it->second) by_lang[lang][r.sample_id] = &r;
    if (universe.empty()) {
      for (const auto& r : it->second) universe.insert(r.sample_id);
    }
  }
  for (const auto& lang : languages) {
    const auto& m = by_lang[lang];
    if (m.size() != universe.size() ||
        !std::all_of(universe.begin(), universe.end(), [&](const std::string& id) { return m.count(id) > 0; }))
      throw Error(ErrorCode::UnalignedTestSets, "language '" + lang + "' does not share the test-set sample ids");
  }
  const std::vector<std::string> ids(universe.begin(), universe.end());
  std::vector<Label> gold;
  for (const auto& id : ids) gold.push_back(by_lang[languages.front()][id]->gold_label);
  for (const auto& lang : languages) {
    std::vector<Label> preds;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto* r = by_lang[lang][ids[i]];
      if (r->gold_label != gold[i])
        throw Error(ErrorCode::UnalignedTestSets, "gold label of '" + ids[i] + "' differs in '" + lang + "'");
      preds.push_back(r->pred_label);
    }
    report.accuracy[lang] = compute_accuracy(preds, gold, AccuracyMode::three_way);
    if (std::any_of(gold.begin(), gold.end(), [](Label l) { return l != Label::neutral; }))
      report.accuracy_two_way[lang] = compute_accuracy(preds, gold, AccuracyMode::two_way);
  }
  const std::size_t n = languages.size();
  report.p_matrix.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      PairedPredictions pp;
      pp.gold = gold;
      for (const auto& id : ids) {
        pp.predictions_a.push_back(by_lang[languages[a]][id]->pred_label);
        pp.predictions_b.push_back(by_lang[languages[b]][id]->pred_label);
      }
      auto [bc, cc] = discordant_counts(pp);
      LanguagePairTest t{languages[a], languages[b], bc, cc, mcnemar_from_counts(bc, cc, opts)};
      report.p_matrix[a][b] = report.p_matrix[b][a] = t.result.p_value;
      report.pairs.push_back(std::move(t));
    }
  }
  report.language_sets = partition_languages(languages, report.p_matrix, alpha);
  return report;
}

// ---------------------------------------------------------------------------
// Phase 2: bias metrics per (attribute, language, gender, model)

struct Phase2Cell {
  MetricReport metrics;
  TestResult group_test;  // Friedman across groups, or Wilcoxon for two groups

  friend bool operator==(const Phase2Cell&, const Phase2Cell&) = default;
};

struct SkippedCell {
  Attribute attribute = Attribute::race;
  std::string language;
  Gender gender = Gender::female;
  std::string model_id;
  std::string reason;

  friend bool operator==(const SkippedCell&, const SkippedCell&) = default;
};

struct GenderGapResult {
  Attribute attribute = Attribute::race;
  std::string language;
  std::string model_id;
  std::size_t pairs = 0;
  TestResult result;

  friend bool operator==(const GenderGapResult&, const GenderGapResult&) = default;
};

struct Phase2Report {
  std::vector<std::string> languages;
  std::vector<Attribute> attributes;
  std::vector<std::string> models;
  std::vector<Phase2Cell> cells;
  std::vector<SkippedCell> skipped;
  std::vector<GenderGapResult> gender_gaps;
  std::vector<MetricReport> averaged;  // mean over "<base>-seed<k>" model groups

  friend bool operator==(const Phase2Report&, const Phase2Report&) = default;

  const MetricReport* find(std::string_view model, Attribute a, std::string_view lang, Gender g) const {
    for (const auto& c : cells)
      if (c.metrics.model_id == model && c.metrics.attribute == a && c.metrics.language == lang && c.metrics.gender == g)
        return &c.metrics;
    for (const auto& m : averaged)
      if (m.model_id == model && m.attribute == a && m.language == lang && m.gender == g) return &m;
    return nullptr;
  }
};

struct Phase2Options {
  MajorityMap majority_religion;
  std::map<Attribute, MajorityMap> majority_groups;
  StatsOptions stats;
  std::size_t jobs = 1;
  std::map<std::string, std::vector<std::string>> model_languages;  // empty / absent: all
};

namespace detail {

/// Runs f(i) for i in [0, n) on up to `jobs` threads. Results must be stored
/// by index; the first exception (lowest index) is rethrown.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::optional<std::string> seed_group(const std::string& model_id) {
  static const std::regex pattern(R"(^(.+)-seed[0-9]+$)");
  std::smatch m;
  if (std::regex_match(model_id, m, pattern)) return m[1].str();
  return std::nullopt;
}

inline TestResult group_test(const ScoreMatrix& m, const StatsOptions& opts) {
  if (m.groups_count() == 2) {
    std::vector<double> a(m.row(0).begin(), m.row(0).end()), b(m.row(1).begin(), m.row(1).end());
    return wilcoxon_signed_rank(a, b, opts);
  }
  // Blocks are templates, treatments are groups.
  std::vector<std::vector<double>> blocks(m.templates_count(), std::vector<double>(m.groups_count()));
  for (std::size_t j = 0; j < m.templates_count(); ++j)
    for (std::size_t i = 0; i < m.groups_count(); ++i) blocks[j][i] = m(i, j);
  return friedman(blocks);
}

inline std::vector<MetricReport> average_seed_groups(const std::vector<Phase2Cell>& cells) {
  using Key = std::tuple<std::string, Attribute, std::string, Gender>;
  std::map<Key, std::vector<const MetricReport*>> groups;
  std::map<std::string, std::set<std::string>> members;
  for (const auto& c : cells) {
    auto base = seed_group(c.metrics.model_id);
    if (!base) continue;
    members[*base].insert(c.metrics.model_id);
    groups[{*base, c.metrics.attribute, c.metrics.language, c.metrics.gender}].push_back(&c.metrics);
  }
  std::vector<MetricReport> out;
  for (const auto& [key, reports] : groups) {
    const auto& base = std::get<0>(key);
    if (members[base].size() < 2 || reports.size() != members[base].size()) continue;
    MetricReport avg = *reports.front();
    avg.model_id = base;
    const double k = static_cast<double>(reports.size());
    auto mean_map = [&](auto getter) {
      std::map<std::string, double> acc;
      for (const auto* r : reports)
        for (const auto& [g, x] : getter(*r)) acc[g] += x;
      for (auto& [g, x] : acc) x /= k;
      return acc;
    };
    avg.mcm = 0.0;
    for (const auto* r : reports) avg.mcm += r->mcm;
    avg.mcm /= k;
    avg.vbcm = mean_map([](const MetricReport& r) { return r.vbcm; });
    avg.v = mean_map([](const MetricReport& r) { return r.v; });
    if (avg.mbcm) avg.mbcm = mean_map([](const MetricReport& r) { return r.mbcm.value_or(std::map<std::string, double>{}); });
    out.push_back(std::move(avg));
  }
  return out;
}

}  // namespace detail

/// Computes every (model, attribute, language, gender) cell. Cells are
/// emitted in canonical order: models as given, attributes in enum order,
/// languages as given, female before male.
inline Phase2Report run_phase2(const std::vector<std::string>& languages, const std::vector<Attribute>& attributes,
                               const std::vector<BiasSample>& samples,
                               const std::vector<std::pair<std::string, ScoreTable>>& model_scores,
                               const Phase2Options& opts = {}) {
  Phase2Report report;
  report.languages = languages;
  report.attributes = attributes;
  std::sort(report.attributes.begin(), report.attributes.end());
  for (const auto& [model, table] : model_scores) report.models.push_back(model);

  struct Job {
    std::size_t model;
    Attribute attribute;
    std::string language;
    Gender gender;
  };
  std::vector<Job> jobs;
  for (std::size_t mi = 0; mi < model_scores.size(); ++mi)
    for (Attribute a : report.attributes)
      for (const auto& lang : languages)
        for (Gender g : kAllGenders) jobs.push_back({mi, a, lang, g});

  std::map<std::pair<Attribute, std::string>, std::vector<BiasSample>> by_slice;
  for (const auto& s : samples) by_slice[{s.attribute, s.language}].push_back(s);

  auto model_covers = [&](const std::string& model, const std::string& lang) {
    auto it = opts.model_languages.find(model);
    if (it == opts.model_languages.end() || it->second.empty()) return true;
    return std::find(it->second.begin(), it->second.end(), lang) != it->second.end();
  };

  std::vector<std::optional<Phase2Cell>> results(jobs.size());
  std::vector<std::string> skip_reasons(jobs.size());
  detail::parallel_for(jobs.size(), opts.jobs, [&](std::size_t k) {
    const Job& job = jobs[k];
    const auto& [model, table] = model_scores[job.model];
    if (!model_covers(model, job.language)) {
      skip_reasons[k] = "model not configured for language";
      return;
    }
    auto slice = by_slice.find({job.attribute, job.language});
    if (slice == by_slice.end()) {
      skip_reasons[k] = "no samples for attribute and language";
      return;
    }
    ScoreMatrix m = group_template_score(slice->second, table, job.attribute, job.language, job.gender);
    if (m.groups_count() < 2) {
      skip_reasons[k] = "fewer than two groups";
      return;
    }
    std::optional<std::string> majority;
    if (job.attribute == Attribute::religion) {
      majority = majority_religion(job.language, opts.majority_religion);
    } else if (auto it = opts.majority_groups.find(job.attribute); it != opts.majority_groups.end()) {
      if (auto jt = it->second.find(job.language); jt != it->second.end()) majority = jt->second;
    }
    std::size_t n_samples = 0;
    for (const auto& s : slice->second)
      if (job.attribute == Attribute::gender || s.gender == job.gender) ++n_samples;
    Phase2Cell cell{compute_metric_report(m, model, majority, n_samples), detail::group_test(m, opts.stats)};
    results[k] = std::move(cell);
  });
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (results[k]) {
      report.cells.push_back(std::move(*results[k]));
    } else {
      report.skipped.push_back(
          {jobs[k].attribute, jobs[k].language, jobs[k].gender, model_scores[jobs[k].model].first, skip_reasons[k]});
    }
  }

  // Paired female/male comparison per (model, attribute, language).
  for (const auto& [model, table] : model_scores) {
    for (Attribute a : report.attributes) {
      if (a == Attribute::gender) continue;
      for (const auto& lang : languages) {
        if (!model_covers(model, lang)) continue;
        auto slice = by_slice.find({a, lang});
        if (slice == by_slice.end()) continue;
        auto pairs = pair_genders(slice->second);
        report.gender_gaps.push_back({a, lang, model, pairs.size(), gender_gap_test(pairs, table, opts.stats)});
      }
    }
  }
  report.averaged = detail::average_seed_groups(report.cells);
  return report;
}

// ---------------------------------------------------------------------------
// Phase 3: monolingual vs multilingual

struct Phase3Record {
  std::string setting;
  Attribute attribute = Attribute::race;
  std::string language;
  Gender gender = Gender::female;
  std::string mono_model;
  std::string multi_model;
  double mono_mcm = 0.0;
  double multi_mcm = 0.0;
  double delta = 0.0;
  bool amplified = false;
  std::map<std::string, double> probability_shift;  // v_multi - v_mono per group

  friend bool operator==(const Phase3Record&, const Phase3Record&) = default;
};

struct AmplificationSummary {
  std::size_t cells = 0;
  std::size_t amplified = 0;
  friend bool operator==(const AmplificationSummary&, const AmplificationSummary&) = default;
  double fraction() const { return cells == 0 ? 0.0 : static_cast<double>(amplified) / static_cast<double>(cells); }
};

struct Phase3Report {
  std::vector<Phase3Record> records;
  std::map<std::string, AmplificationSummary> summary;  // per setting

  friend bool operator==(const Phase3Report&, const Phase3Report&) = default;
};

/// Pairs mono and multi reports by (attribute, language, gender) and records
/// the MCM delta and per-group probability shift for each.
inline std::vector<Phase3Record> compare_reports(const std::string& setting, const std::vector<MetricReport>& mono,
                                                 const std::vector<MetricReport>& multi) {
  using Key = std::tuple<Attribute, std::string, Gender>;
  std::map<Key, const MetricReport*> mono_by, multi_by;
  for (const auto& r : mono) mono_by[{r.attribute, r.language, r.gender}] = &r;
  for (const auto& r : multi) multi_by[{r.attribute, r.language, r.gender}] = &r;
  std::vector<Phase3Record> out;
  for (const auto& [key, a] : mono_by) {
    auto it = multi_by.find(key);
    if (it == multi_by.end())
      throw Error(ErrorCode::MismatchedCells, "no multilingual report for " + std::string(to_string(a->attribute)) + "/" +
                                                  a->language + "/" + std::string(to_string(a->gender)));
    const MetricReport* b = it->second;
    auto d = mcm_delta(*a, *b);
    Phase3Record rec{setting, a->attribute, a->language, a->gender, a->model_id, b->model_id, a->mcm, b->mcm,
                     d.delta, d.amplified, {}};
    for (const auto& [g, vm] : b->v) {
      auto jt = a->v.find(g);
      if (jt == a->v.end()) throw Error(ErrorCode::MismatchedCells, "group '" + g + "' missing from monolingual report");
      rec.probability_shift[g] = vm - jt->second;
    }
    out.push_back(std::move(rec));
  }
  for (const auto& [key, b] : multi_by)
    if (!mono_by.count(key))
      throw Error(ErrorCode::MismatchedCells, "no monolingual report for " + std::string(to_string(b->attribute)) + "/" +
                                                  b->language + "/" + std::string(to_string(b->gender)));
  return out;
}

inline Phase3Report summarize_phase3(std::vector<Phase3Record> records) {
  Phase3Report report;
  report.records = std::move(records);
  for (const auto& r : report.records) {
    auto& s = report.summary[r.setting];
    ++s.cells;
    if (r.amplified) ++s.amplified;
  }
  return report;
}

/// Runs every configured comparison against a Phase 2 report.
inline Phase3Report run_phase3(const Phase2Report& phase2, const std::vector<Phase3Comparison>& comparisons,
                               const std::vector<std::string>& default_languages) {
  std::vector<Phase3Record> all;
  for (const auto& cmp : comparisons) {
    const auto& langs = cmp.languages.empty() ? default_languages : cmp.languages;
    std::vector<MetricReport> mono, multi;
    for (Attribute a : phase2.attributes) {
      for (const auto& lang : langs) {
        for (Gender g : kAllGenders) {
          const auto* m = phase2.find(cmp.mono_model, a, lang, g);
          const auto* x = phase2.find(cmp.multi_model, a, lang, g);
          if (!m && !x) continue;
          if (!m || !x)
            throw Error(ErrorCode::MismatchedCells, "cell " + std::string(to_string(a)) + "/" + lang + "/" +
                                                        std::string(to_string(g)) + " present for only one of '" +
                                                        cmp.mono_model + "' and '" + cmp.multi_model + "'");
          mono.push_back(*m);
          multi.push_back(*x);
        }
      }
    }
    auto recs = compare_reports(cmp.setting, mono, multi);
    // Keep the comparison's canonical attribute/language/gender order.
    std::map<std::tuple<Attribute, std::string, Gender>, Phase3Record> keyed;
    for (auto& r : recs) keyed.emplace(std::make_tuple(r.attribute, r.language, r.gender), std::move(r));
    for (Attribute a : phase2.attributes)
      for (const auto& lang : langs)
        for (Gender g : kAllGenders)
          if (auto it = keyed.find({a, lang, g}); it != keyed.end()) all.push_back(std::move(it->second));
  }
  return summarize_phase3(std::move(all));
}

// ---------------------------------------------------------------------------
// Pipeline helpers shared by the CLI and tests

inline TemplateSet load_templates(const std::vector<std::string>& files) {
  std::vector<TemplateSet> sets;
  for (const auto& f : files) sets.push_back(parse_template_file(read_file(f)));
  return merge_template_sets(std::move(sets));
}

inline Lexicon load_lexicons(const std::vector<std::string>& files) {
  std::vector<Lexicon> parts;
  for (const auto& f : files) parts.push_back(parse_lexicon_file(read_file(f)));
  return merge_lexicons(parts);
}

inline std::vector<BiasSample> expand_from_config(const ExperimentConfig& c) {
  return expand(load_templates(c.template_files), load_lexicons(c.lexicon_files), c.languages, c.attributes);
}

/// Scores samples for one model according to its scorer configuration. The
/// result must cover every sample.
inline ScoreTable score_samples(const std::vector<BiasSample>& samples, const ScorerConfig& scorer) {
  validate(scorer);
  ScoreTable table;
  switch (scorer.mode) {
    case ScorerMode::mock:
      table = mock_score(samples, *scorer.seed, scorer.model_id);
      break;
    case ScorerMode::remote:
      table = score_remote(samples, scorer);
      break;
    case ScorerMode::file:
      detail::require_exists(scorer.score_file, "score file");
      table = read_scores(read_file(scorer.score_file));
      break;
  }
  std::vector<std::string> missing;
  for (const auto& s : samples)
    if (!table.contains(s.sample_id)) missing.push_back(s.sample_id);
  if (!missing.empty())
    throw Error(ErrorCode::MissingScore,
                std::to_string(missing.size()) + " sample(s) unscored by model '" + scorer.model_id + "'",
                std::move(missing));
  return table;
}

inline Phase2Options phase2_options(const ExperimentConfig& c) {
  Phase2Options o;
  o.majority_religion = c.majority_religion;
  o.majority_groups = c.majority_groups;
  o.stats = c.stats;
  o.jobs = c.jobs;
  for (const auto& m : c.models) o.model_languages[m.model_id] = m.languages;
  return o;
}

}  // namespace biasprobe
