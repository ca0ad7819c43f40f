// Acceptance runner: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace biasprobe;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Outcome expansion_counts() {
  Outcome o;
  const auto t0 = Clock::now();
  auto set = load_templates(fixture_template_files());
  auto lex = load_lexicons({(fixture_dir() / "lexicon.json").string()});
  auto samples = expand(set, lex, fixture_languages(), {kAllAttributes.begin(), kAllAttributes.end()});
  const double secs = seconds_since(t0);
  std::map<std::pair<std::string, Attribute>, std::size_t> counts;
  for (const auto& s : samples) ++counts[{s.language, s.attribute}];
  const std::map<Attribute, std::size_t> want = {
      {Attribute::gender, 54}, {Attribute::race, 270}, {Attribute::religion, 684}, {Attribute::nationality, 1224}};
  for (const auto& lang : fixture_languages()) {
    std::size_t total = 0;
    for (const auto& [a, n] : want) {
      total += counts[{lang, a}];
      if (counts[{lang, a}] != n)
        fail(o, lang + "/" + std::string(to_string(a)) + " = " + std::to_string(counts[{lang, a}]));
    }
    if (total != 2232) fail(o, lang + " total " + std::to_string(total));
  }
  if (secs >= 1.0) fail(o, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(samples.size()) + " samples in " + std::to_string(secs) + " s";
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 60;
    auto s = random_matrix(rng, m, n);
    auto rows = as_rows(s);
    auto note = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    note(mcm(s), oracle_mcm(rows));
    auto vb = vbcm(s), vv = v(s);
    auto ovb = oracle_vbcm(rows), ov = oracle_v(rows);
    double sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      note(vb.at(s.groups()[i]), ovb[i]);
      note(vv.at(s.groups()[i]), ov[i]);
      sum += vb.at(s.groups()[i]);
    }
    note(sum, 0.0);
    const std::size_t maj = rng() % m;
    auto mb = mbcm(s, s.groups()[maj]);
    for (const auto& [i, x] : oracle_mbcm(rows, maj)) note(mb.at(s.groups()[i]), x);
    if (mb.size() != m - 1) fail(o, "mbcm size");
  }
  const double secs = seconds_since(t0);
  if (worst > 1e-12) fail(o, "max deviation " + std::to_string(worst));
  if (secs >= 10.0) fail(o, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    std::ostringstream d;
    d << "1000 matrices, max deviation " << worst << ", " << secs << " s";
    o.detail = d.str();
  }
  return o;
}

Outcome metric_invariances() {
  Outcome o;
  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> shift(-0.3, 0.3), scale(0.1, 1.4);
  constexpr double tol = 1e-12;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 60;
    auto s = random_matrix(rng, m, n, 0.3, 0.7);
    auto rows = as_rows(s);
    const double c = shift(rng), a = scale(rng);
    auto shifted = rows, scaled = rows;
    for (auto& r : shifted)
      for (auto& x : r) x += c;
    for (auto& r : scaled)
      for (auto& x : r) x *= a;
    auto ss = from_rows(shifted), sa = from_rows(scaled);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> prow;
    std::vector<std::string> pgroups;
    for (auto i : perm) {
      prow.push_back(rows[i]);
      pgroups.push_back(s.groups()[i]);
    }
    auto sp = from_rows(prow, pgroups);
    const std::string maj = s.groups()[rng() % m];

    if (!close(mcm(ss), mcm(s), tol) || !close(mcm(sa), a * mcm(s), tol) || !close(mcm(sp), mcm(s), tol))
      fail(o, "mcm trial " + std::to_string(trial));
    auto vb = vbcm(s), vbs = vbcm(ss), vba = vbcm(sa), vbp = vbcm(sp);
    auto vv = v(s), vvs = v(ss), vva = v(sa), vvp = v(sp);
    auto mb = mbcm(s, maj), mbs = mbcm(ss, maj), mba = mbcm(sa, maj), mbp = mbcm(sp, maj);
    for (const auto& g : s.groups()) {
      if (!close(vbs.at(g), vb.at(g), tol) || !close(vba.at(g), a * vb.at(g), tol) || !close(vbp.at(g), vb.at(g), tol))
        fail(o, "vbcm trial " + std::to_string(trial));
      if (!close(vvs.at(g), vv.at(g) + c, tol) || !close(vva.at(g), a * vv.at(g), tol) ||
          !close(vvp.at(g), vv.at(g), tol))
        fail(o, "v trial " + std::to_string(trial));
      if (g == maj) continue;
      if (!close(mbs.at(g), mb.at(g), tol) || !close(mba.at(g), a * mb.at(g), tol) || !close(mbp.at(g), mb.at(g), tol))
        fail(o, "mbcm trial " + std::to_string(trial));
    }
  }
  if (o.pass) o.detail = "200 matrices: shift, scale, permutation";
  return o;
}

Outcome exact_tests() {
  Outcome o;
  auto mc = mcnemar_from_counts(15, 5);
  if (!close(mc.p_value, 0.04139, 1e-5)) fail(o, "mcnemar p " + std::to_string(mc.p_value));
  if (!close(mc.p_value, oracle_mcnemar_exact(15, 5), 1e-5)) fail(o, "mcnemar vs enumeration");
  auto w = wilcoxon_signed_rank({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1});
  if (w.p_value != 0.0625) fail(o, "wilcoxon p " + std::to_string(w.p_value));
  auto f = friedman({{1, 2, 3}, {1, 2, 3}});
  if (f.statistic != 4.0) fail(o, "friedman statistic " + std::to_string(f.statistic));
  if (!close(f.p_value, 0.1353, 1e-4)) fail(o, "friedman p " + std::to_string(f.p_value));
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u;
  double worst = 0;
  int over = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> b(10, std::vector<double>(4));
    const double effect = 0.1 * (trial % 4);
    for (auto& row : b)
      for (std::size_t j = 0; j < 4; ++j) row[j] = u(rng) + effect * static_cast<double>(j);
    const double gap = std::abs(friedman(b).p_value - oracle_friedman_permutation(b, 20000, 5000 + trial));
    worst = std::max(worst, gap);
    if (gap > 0.02) ++over;
  }
  if (worst > 0.02)
    fail(o, "friedman vs permutation: " + std::to_string(over) + "/20 instances beyond 0.02, max gap " +
                std::to_string(worst));
  if (o.pass) {
    std::ostringstream d;
    d << "mcnemar " << mc.p_value << ", wilcoxon " << w.p_value << ", friedman " << f.statistic << "/" << f.p_value
      << ", permutation gap " << worst;
    o.detail = d.str();
  }
  return o;
}

Outcome phase1_partition() {
  Outcome o;
  std::map<std::string, std::vector<PredictionRecord>> preds;
  for (const auto& lang : fixture_languages())
    preds[lang] = read_predictions(fixture("predictions/" + lang + ".jsonl"));
  auto r = run_phase1(fixture_languages(), preds, 0.05);
  const std::vector<std::vector<std::string>> want = {{"en", "es", "it", "zh"}, {"he"}};
  std::ostringstream d;
  for (const auto& s : r.language_sets) {
    d << "{";
    for (std::size_t i = 0; i < s.size(); ++i) d << (i ? "," : "") << s[i];
    d << "}";
  }
  o.detail = d.str();
  if (r.language_sets != want) fail(o, "got " + d.str());
  return o;
}

Outcome phase3_recount() {
  Outcome o;
  const std::vector<std::tuple<std::string, double, double, bool>> row = {
      {"en", 0.045, 0.036, false}, {"es", 0.078, 0.127, true}, {"zh", 0.089, 0.107, true},
      {"it", 0.11, 0.077, false},  {"he", 0.096, 0.135, true}};
  std::ostringstream d;
  for (const auto& [lang, mono_mcm, multi_mcm, want] : row) {
    MetricReport a, b;
    a.language = b.language = lang;
    a.mcm = mono_mcm;
    b.mcm = multi_mcm;
    const bool got = mcm_delta(a, b).amplified;
    d << lang << ":" << (got ? "yes" : "no") << " ";
    if (got != want) fail(o, lang + " flag mismatch");
  }
  if (o.pass) o.detail = d.str();
  return o;
}

std::map<std::string, std::string> pipeline_tree(const fs::path& dir, bool constant) {
  auto c = load_config(fixture_dir() / "config.json");
  auto samples = expand_from_config(c);
  std::vector<std::pair<std::string, ScoreTable>> scores;
  for (const auto& m : c.models) {
    ScoreTable t;
    if (constant) {
      for (const auto& s : samples) t.insert({s.sample_id, 0.5});
    } else {
      t = mock_score(samples, 7, m.model_id);
    }
    scores.emplace_back(m.model_id, std::move(t));
  }
  auto p2 = run_phase2(c.languages, c.attributes, samples, scores, phase2_options(c));
  auto p3 = run_phase3(p2, c.phase3, c.languages);
  for (auto f : {ReportFormat::json, ReportFormat::csv}) {
    emit_report(p2, f, dir);
    emit_report(p3, f, dir);
  }
  std::map<std::string, std::string> tree;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) tree[fs::relative(e.path(), dir).string()] = read_file(e.path());
  if (constant) {
    for (const auto& cell : p2.cells)
      if (cell.metrics.mcm != 0.0 || cell.group_test.p_value != 1.0) tree.clear();
    if (p2.cells.empty()) tree.clear();
  }
  return tree;
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  TempDir a("acc_a"), b("acc_b"), k("acc_const");
  auto ta = pipeline_tree(a.path(), false);
  auto tb = pipeline_tree(b.path(), false);
  if (ta.empty() || ta != tb) fail(o, "output trees differ");
  if (pipeline_tree(k.path(), true).empty()) fail(o, "constant scorer: nonzero MCM or Friedman p != 1");
  const double secs = seconds_since(t0);
  if (secs >= 30.0) fail(o, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(ta.size()) + " identical files, " + std::to_string(secs) + " s";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"expansion cardinalities", expansion_counts},
      {"metric oracle equivalence", metric_oracles},
      {"metric invariances", metric_invariances},
      {"exact-test oracles", exact_tests},
      {"phase 1 partitioning", phase1_partition},
      {"phase 3 amplification recount", phase3_recount},
      {"end-to-end determinism", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  " << name << "  (" << out.detail << ")" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures;
}
