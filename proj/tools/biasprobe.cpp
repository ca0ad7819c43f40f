// biasprobe: command-line front end for the bias-probing pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biasprobe/biasprobe.hpp"

namespace fs = std::filesystem;
using namespace biasprobe;

namespace {

enum Exit : int { kOk = 0, kFindings = 1, kUsage = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::size_t> jobs;
  std::string scorer;
  std::string model_id;
  std::string samples;
  std::string phase2;
  std::string input;
  std::string format = "csv";
  std::vector<std::string> templates;
  std::vector<std::string> languages;
  std::vector<std::string> score_files;  // model=path
};

ExperimentConfig config_for(const Options& o) {
  if (o.config.empty()) throw Error(ErrorCode::MissingPath, "--config is required");
  ExperimentConfig c = load_config(o.config);
  if (o.seed) apply_seed(c, *o.seed);
  if (o.alpha) {
    if (!(*o.alpha > 0.0 && *o.alpha < 1.0)) throw Error(ErrorCode::MalformedConfig, "alpha must lie in (0, 1)");
    c.alpha = *o.alpha;
  }
  if (o.jobs) {
    if (*o.jobs < 1) throw Error(ErrorCode::MalformedConfig, "jobs must be >= 1");
    c.jobs = *o.jobs;
  }
  return c;
}

fs::path output_dir(const Options& o, const ExperimentConfig& c) { return o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out); }

void emit_data(const Options& o, const std::string& bytes) {
  if (o.out.empty()) {
    std::cout << bytes;
    std::cout.flush();
  } else {
    write_file(o.out, bytes);
  }
}

std::vector<BiasSample> samples_for(const Options& o, const ExperimentConfig& c) {
  if (!o.samples.empty()) return read_samples_jsonl(read_file(o.samples));
  return expand_from_config(c);
}

int cmd_expand(const Options& o) {
  auto c = config_for(o);
  auto samples = expand_from_config(c);
  emit_data(o, write_samples_jsonl(samples));
  std::cerr << samples.size() << " samples\n";
  return kOk;
}

int cmd_validate(const Options& o) {
  std::vector<std::string> files = o.templates;
  std::vector<std::string> languages = o.languages;
  if (!o.config.empty()) {
    auto c = config_for(o);
    if (files.empty()) files = c.template_files;
    if (languages.empty()) languages = c.languages;
  }
  if (files.empty()) throw Error(ErrorCode::MissingPath, "no template files given (--templates or --config)");
  std::vector<TemplateSet> sets;
  for (const auto& f : files) sets.push_back(parse_template_records(read_file(f)));
  TemplateSet all;
  for (auto& s : sets)
    for (auto& t : s.templates) all.templates.push_back(std::move(t));
  if (languages.empty()) languages = all.languages();
  auto report = validate_parallel(all, languages);
  std::string lines;
  for (const auto& f : report.findings) lines += to_json(f).dump() + "\n";
  emit_data(o, lines);
  std::cerr << report.variant_checks << " variant checks, " << report.findings.size() << " finding(s)\n";
  return report.ok() ? kOk : kFindings;
}

const ModelSpec& find_model(const ExperimentConfig& c, const std::string& id) {
  for (const auto& m : c.models)
    if (m.model_id == id) return m;
  throw Error(ErrorCode::MalformedConfig, "model '" + id + "' is not configured");
}

int cmd_score(const Options& o) {
  auto c = config_for(o);
  ScorerConfig sc;
  if (!o.model_id.empty() && std::any_of(c.models.begin(), c.models.end(),
                                         [&](const ModelSpec& m) { return m.model_id == o.model_id; })) {
    sc = find_model(c, o.model_id).scorer;
  } else if (o.model_id.empty() && c.models.size() == 1) {
    sc = c.models.front().scorer;
  } else if (!o.model_id.empty()) {
    sc.model_id = o.model_id;
    sc.seed = derived_model_seed(c.seed, o.model_id);
  } else {
    throw Error(ErrorCode::MalformedConfig, "--model-id is required when the config lists several models");
  }
  if (!o.scorer.empty()) sc.mode = *try_parse_scorer_mode(o.scorer);
  if (o.seed && sc.mode == ScorerMode::mock && !o.model_id.empty()) sc.seed = derived_model_seed(*o.seed, sc.model_id);
  auto samples = samples_for(o, c);
  auto table = score_samples(samples, sc);
  emit_data(o, write_scores(table));
  return kOk;
}

int cmd_phase1(const Options& o) {
  auto c = config_for(o);
  std::map<std::string, std::vector<PredictionRecord>> preds;
  for (const auto& lang : c.languages) {
    auto it = c.prediction_files.find(lang);
    if (it == c.prediction_files.end()) throw Error(ErrorCode::MissingPath, "no prediction file for '" + lang + "'");
    preds[lang] = read_predictions(read_file(it->second));
  }
  auto report = run_phase1(c.languages, preds, c.alpha, c.stats);
  emit_report(report, ReportFormat::json, output_dir(o, c));
  return kOk;
}

int cmd_phase2(const Options& o) {
  auto c = config_for(o);
  auto samples = samples_for(o, c);
  std::map<std::string, std::string> overrides;
  for (const auto& s : o.score_files) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::MalformedConfig, "--scores expects model=path, got '" + s + "'");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (c.models.empty()) throw Error(ErrorCode::MalformedConfig, "no models configured");
  std::vector<std::pair<std::string, ScoreTable>> tables;
  for (const auto& m : c.models) {
    ScorerConfig sc = m.scorer;
    if (auto it = overrides.find(m.model_id); it != overrides.end()) {
      sc.mode = ScorerMode::file;
      sc.score_file = it->second;
    }
    std::vector<BiasSample> subset;
    for (const auto& s : samples)
      if (m.languages.empty() || std::find(m.languages.begin(), m.languages.end(), s.language) != m.languages.end())
        subset.push_back(s);
    tables.emplace_back(m.model_id, score_samples(subset, sc));
  }
  auto report = run_phase2(c.languages, c.attributes, samples, tables, phase2_options(c));
  emit_report(report, ReportFormat::json, output_dir(o, c));
  return kOk;
}

int cmd_phase3(const Options& o) {
  auto c = config_for(o);
  const fs::path dir = output_dir(o, c);
  const fs::path in = o.phase2.empty() ? dir / "phase2.json" : fs::path(o.phase2);
  auto p2 = phase2_from_json(detail::parse_json(read_file(in), "phase2 report"));
  if (c.phase3.empty()) throw Error(ErrorCode::MalformedConfig, "no phase3 comparisons configured");
  auto report = run_phase3(p2, c.phase3, c.languages);
  emit_report(report, ReportFormat::json, dir);
  return kOk;
}

int cmd_report(const Options& o) {
  auto format = try_parse_report_format(o.format);
  if (!format) throw Error(ErrorCode::MalformedConfig, "--format must be json or csv");
  fs::path in = o.input;
  if (in.empty()) {
    if (o.config.empty()) throw Error(ErrorCode::MissingPath, "--input or --config is required");
    in = config_for(o).output_dir;
  }
  const fs::path out = o.out.empty() ? in : fs::path(o.out);
  std::size_t emitted = 0;
  auto load = [&](const char* name) -> std::optional<nlohmann::json> {
    if (!fs::exists(in / name)) return std::nullopt;
    return detail::parse_json(read_file(in / name), name);
  };
  if (auto j = load("phase1.json")) emit_report(phase1_from_json(*j), *format, out), ++emitted;
  if (auto j = load("phase2.json")) emit_report(phase2_from_json(*j), *format, out), ++emitted;
  if (auto j = load("phase3.json")) emit_report(phase3_from_json(*j), *format, out), ++emitted;
  if (emitted == 0) throw Error(ErrorCode::MissingPath, "no phase reports under '" + in.string() + "'");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual bias probing: expansion, scoring, metrics and reports"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", o.config, "Experiment config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--out", o.out, "Output file or directory");
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--alpha", o.alpha, "Significance level");
    sub->add_option("--jobs", o.jobs, "Parallel cells");
  };

  auto* expand_cmd = app.add_subcommand("expand", "Expand templates into bias samples (JSONL)");
  common(expand_cmd, true);

  auto* validate_cmd = app.add_subcommand("validate", "Check template files for parallel completeness");
  common(validate_cmd, false);
  validate_cmd->add_option("--templates", o.templates, "Template files")->check(CLI::ExistingFile);
  validate_cmd->add_option("--languages", o.languages, "Languages every template must cover");

  auto* score_cmd = app.add_subcommand("score", "Score samples with one model (JSONL)");
  common(score_cmd, true);
  score_cmd->add_option("--scorer", o.scorer, "Scorer mode")->check(CLI::IsMember({"file", "remote", "mock"}));
  score_cmd->add_option("--model-id", o.model_id, "Model to score with");
  score_cmd->add_option("--samples", o.samples, "Samples JSONL (default: expand from config)")->check(CLI::ExistingFile);

  auto* phase1_cmd = app.add_subcommand("phase1", "Accuracy, McNemar tests and language sets");
  common(phase1_cmd, true);

  auto* phase2_cmd = app.add_subcommand("phase2", "Bias metrics and significance tests per cell");
  common(phase2_cmd, true);
  phase2_cmd->add_option("--samples", o.samples, "Samples JSONL (default: expand from config)")->check(CLI::ExistingFile);
  phase2_cmd->add_option("--scores", o.score_files, "Score file per model, as model=path");

  auto* phase3_cmd = app.add_subcommand("phase3", "Monolingual vs multilingual comparison");
  common(phase3_cmd, true);
  phase3_cmd->add_option("--phase2", o.phase2, "Phase 2 report (default: <out>/phase2.json)")->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "Render phase reports as JSON or CSV tables");
  common(report_cmd, false);
  report_cmd->add_option("--input", o.input, "Directory holding phase*.json")->check(CLI::ExistingDirectory);
  report_cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*expand_cmd) return cmd_expand(o);
    if (*validate_cmd) return cmd_validate(o);
    if (*score_cmd) return cmd_score(o);
    if (*phase1_cmd) return cmd_phase1(o);
    if (*phase2_cmd) return cmd_phase2(o);
    if (*phase3_cmd) return cmd_phase3(o);
    if (*report_cmd) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
