#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support.hpp"

using namespace biasprobe;
using namespace testing_support;

namespace {

std::vector<double> values_of(const std::map<std::string, double>& m, const std::vector<std::string>& groups) {
  std::vector<double> out;
  for (const auto& g : groups) out.push_back(m.at(g));
  return out;
}

BiasSample sample(const std::string& group, const std::string& tmpl, std::size_t idx, Gender g = Gender::female) {
  BiasSample s;
  s.attribute = Attribute::race;
  s.template_id = tmpl;
  s.language = "en";
  s.gender = g;
  s.group = group;
  s.identity_term_index = idx;
  s.sample_id = make_sample_id(s.attribute, tmpl, "en", g, group, idx);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// group_template_score

TEST(GroupTemplateScore, TermsAveraged) {
  std::vector<BiasSample> samples = {sample("Black", "r01", 0), sample("Black", "r01", 1)};
  ScoreTable t;
  t.insert({samples[0].sample_id, 0.2});
  t.insert({samples[1].sample_id, 0.4});
  auto m = group_template_score(samples, t, Attribute::race, "en", Gender::female);
  ASSERT_EQ(m.groups_count(), 1u);
  ASSERT_EQ(m.templates_count(), 1u);
  EXPECT_NEAR(m(0, 0), 0.3, 1e-15);
}

TEST(GroupTemplateScore, RaceFixtureMatchesBruteForceCellMeans) {
  auto samples = expand(load_templates(fixture_template_files()), parse_lexicon_file(fixture("lexicon.json")), {"en"},
                        {Attribute::race});
  auto table = mock_score(samples, 17);
  auto m = group_template_score(samples, table, Attribute::race, "en", Gender::male);
  ASSERT_EQ(m.groups_count(), 5u);
  ASSERT_EQ(m.templates_count(), 27u);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 27; ++j) {
      double sum = 0;
      int n = 0;
      for (const auto& s : samples)
        if (s.gender == Gender::male && s.group == m.groups()[i] && s.template_id == m.templates()[j]) {
          sum += table.find(s.sample_id)->p_positive;
          ++n;
        }
      ASSERT_GT(n, 0);
      EXPECT_DOUBLE_EQ(m(i, j), sum / n);
    }
  }
}

TEST(GroupTemplateScore, MissingScoreNamesId) {
  std::vector<BiasSample> samples = {sample("Black", "r01", 0), sample("White", "r01", 0)};
  ScoreTable t;
  t.insert({samples[0].sample_id, 0.2});
  try {
    group_template_score(samples, t, Attribute::race, "en", Gender::female);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingScore);
    EXPECT_EQ(e.ids(), std::vector<std::string>{samples[1].sample_id});
  }
}

TEST(GroupTemplateScore, EmptyCellDetected) {
  std::vector<BiasSample> samples = {sample("Black", "r01", 0), sample("White", "r02", 0)};
  auto t = constant_score(samples, 0.5, "m");
  EXPECT_ERROR_CODE(group_template_score(samples, t, Attribute::race, "en", Gender::female), ErrorCode::EmptyCell);
  EXPECT_ERROR_CODE(group_template_score(samples, t, Attribute::race, "fr", Gender::female), ErrorCode::EmptyCell);
}

TEST(ScoreMatrix, ShapeAndRangeChecked) {
  EXPECT_ERROR_CODE(ScoreMatrix({"a"}, {"t"}, {0.1, 0.2}), ErrorCode::LengthMismatch);
  EXPECT_ERROR_CODE(ScoreMatrix({"a"}, {"t"}, {1.1}), ErrorCode::ProbabilityOutOfRange);
  EXPECT_ERROR_CODE(ScoreMatrix({}, {"t"}, {}), ErrorCode::EmptyCell);
}

// ---------------------------------------------------------------------------
// worked examples

TEST(Mcm, Examples) {
  EXPECT_EQ(mcm(from_rows({{0.7, 0.7}, {0.7, 0.7}, {0.7, 0.7}})), 0.0);
  EXPECT_NEAR(mcm(from_rows({{0.2}, {0.4}})), 0.1, 1e-15);
  EXPECT_ERROR_CODE(mcm(from_rows({{0.2, 0.3}})), ErrorCode::SingleGroup);
}

TEST(Vbcm, Examples) {
  auto r = vbcm(from_rows({{0.2}, {0.4}}));
  EXPECT_NEAR(r.at("g0"), -0.1, 1e-15);
  EXPECT_NEAR(r.at("g1"), 0.1, 1e-15);
  EXPECT_ERROR_CODE(vbcm(from_rows({{0.2}})), ErrorCode::SingleGroup);
}

TEST(V, Examples) {
  for (const auto& [g, x] : v(from_rows({{0.6, 0.6, 0.6}, {0.6, 0.6, 0.6}}))) EXPECT_DOUBLE_EQ(x, 0.6);
  EXPECT_NEAR(v(from_rows({{0.2, 0.4}})).at("g0"), 0.3, 1e-15);
}

TEST(Mbcm, Examples) {
  auto same = mbcm(from_rows({{0.3, 0.8}, {0.3, 0.8}}, {"maj", "other"}), "maj");
  EXPECT_EQ(same.size(), 1u);
  EXPECT_EQ(same.at("other"), 0.0);
  EXPECT_NEAR(mbcm(from_rows({{0.5}, {0.3}}, {"maj", "other"}), "maj").at("other"), -0.2, 1e-15);
  EXPECT_ERROR_CODE(mbcm(from_rows({{0.5}, {0.3}}), "nobody"), ErrorCode::UnknownMajorityGroup);
}

TEST(MajorityReligion, Defaults) {
  EXPECT_EQ(majority_religion("he"), "Judaism");
  EXPECT_EQ(majority_religion("zh"), "Buddhism");
  for (const char* l : {"en", "es", "it"}) EXPECT_EQ(majority_religion(l), "Christianity");
  EXPECT_ERROR_CODE(majority_religion("fr"), ErrorCode::UnknownLanguage);
  EXPECT_EQ(majority_religion("fr", {{"fr", "Christianity"}}), "Christianity");
  EXPECT_EQ(majority_religion("zh", {{"zh", "atheism"}}), "atheism");
}

TEST(McmDelta, RaceFemaleExamples) {
  MetricReport mono, multi;
  mono.language = multi.language = "en";
  mono.mcm = 0.045;
  multi.mcm = 0.036;
  auto d = mcm_delta(mono, multi);
  EXPECT_NEAR(d.delta, -0.009, 1e-12);
  EXPECT_FALSE(d.amplified);
  mono.language = multi.language = "es";
  mono.mcm = 0.078;
  multi.mcm = 0.127;
  d = mcm_delta(mono, multi);
  EXPECT_NEAR(d.delta, 0.049, 1e-12);
  EXPECT_TRUE(d.amplified);
  d = mcm_delta(mono, mono);
  EXPECT_EQ(d.delta, 0.0);
  EXPECT_FALSE(d.amplified);
  multi.gender = Gender::male;
  EXPECT_ERROR_CODE(mcm_delta(mono, multi), ErrorCode::MismatchedMetadata);
}

// ---------------------------------------------------------------------------
// oracles and properties

TEST(MetricOracles, RandomMatricesAgree) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 60;
    auto s = random_matrix(rng, m, n);
    auto rows = as_rows(s);
    EXPECT_NEAR(mcm(s), oracle_mcm(rows), 1e-12);
    auto vb = values_of(vbcm(s), s.groups());
    auto vv = values_of(v(s), s.groups());
    auto ovb = oracle_vbcm(rows);
    auto ov = oracle_v(rows);
    double sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_NEAR(vb[i], ovb[i], 1e-12);
      EXPECT_NEAR(vv[i], ov[i], 1e-12);
      sum += vb[i];
    }
    EXPECT_NEAR(sum, 0.0, 1e-12);
    const std::size_t maj = rng() % m;
    auto mb = mbcm(s, s.groups()[maj]);
    auto omb = oracle_mbcm(rows, maj);
    ASSERT_EQ(mb.size(), m - 1);
    for (const auto& [i, x] : omb) EXPECT_NEAR(mb.at(s.groups()[i]), x, 1e-12);
  }
}

TEST(MetricProperties, BoundsHold) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_matrix(rng, 2 + rng() % 5, 1 + rng() % 30);
    const double x = mcm(s);
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 0.5);
    for (const auto& [g, val] : v(s)) {
      EXPECT_GE(val, 0.0);
      EXPECT_LE(val, 1.0);
    }
  }
  // Two groups at opposite extremes reach the upper bound.
  EXPECT_DOUBLE_EQ(mcm(from_rows({{0.0, 1.0}, {1.0, 0.0}})), 0.5);
}

TEST(MetricProperties, ShiftInvariance) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 40;
    auto s = random_matrix(rng, m, n, 0.0, 0.7);
    const double c = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    auto rows = as_rows(s);
    for (auto& r : rows)
      for (auto& x : r) x += c;
    auto t = from_rows(rows);
    EXPECT_NEAR(mcm(t), mcm(s), 1e-12);
    for (const auto& g : s.groups()) {
      EXPECT_NEAR(vbcm(t).at(g), vbcm(s).at(g), 1e-12);
      EXPECT_NEAR(v(t).at(g), v(s).at(g) + c, 1e-12);
    }
    for (const auto& [g, x] : mbcm(s, "g0")) EXPECT_NEAR(mbcm(t, "g0").at(g), x, 1e-12);
  }
}

TEST(MetricProperties, ScaleLinearity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_matrix(rng, 2 + rng() % 5, 1 + rng() % 40);
    const double a = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    auto rows = as_rows(s);
    for (auto& r : rows)
      for (auto& x : r) x *= a;
    auto t = from_rows(rows);
    EXPECT_NEAR(mcm(t), a * mcm(s), 1e-12);
    for (const auto& g : s.groups()) EXPECT_NEAR(vbcm(t).at(g), a * vbcm(s).at(g), 1e-12);
    for (const auto& [g, x] : mbcm(s, "g1")) EXPECT_NEAR(mbcm(t, "g1").at(g), a * x, 1e-12);
  }
}

TEST(MetricProperties, PermutationEquivariance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 5;
    auto s = random_matrix(rng, m, 1 + rng() % 40);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto rows = as_rows(s);
    std::vector<std::vector<double>> prow;
    std::vector<std::string> pgroups;
    for (std::size_t i : perm) {
      prow.push_back(rows[i]);
      pgroups.push_back(s.groups()[i]);
    }
    auto t = from_rows(prow, pgroups);
    EXPECT_NEAR(mcm(t), mcm(s), 1e-12);
    for (const auto& g : s.groups()) {
      EXPECT_NEAR(vbcm(t).at(g), vbcm(s).at(g), 1e-12);
      EXPECT_NEAR(v(t).at(g), v(s).at(g), 1e-12);
    }
    for (const auto& [g, x] : mbcm(s, "g0")) EXPECT_NEAR(mbcm(t, "g0").at(g), x, 1e-12);
  }
}

TEST(MetricProperties, MbcmWithMeanMajorityEqualsVbcm) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 20;
    auto rows = as_rows(random_matrix(rng, m, n));
    // Append a majority row equal to the mean of the others, then compare
    // against vbcm of the original groups.
    std::vector<double> mean(n, 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < n; ++j) mean[j] += r[j] / static_cast<double>(m);
    auto with_majority = rows;
    with_majority.push_back(mean);
    std::vector<std::string> groups;
    for (std::size_t i = 0; i < m; ++i) groups.push_back("g" + std::to_string(i));
    groups.push_back("majority");
    auto mb = mbcm(from_rows(with_majority, groups), "majority");
    auto vb = vbcm(from_rows(rows));
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(mb.at(groups[i]), vb.at(groups[i]), 1e-12);
  }
}

TEST(MetricReportJson, RoundTrip) {
  std::mt19937_64 rng(10);
  auto s = random_matrix(rng, 6, 9);
  s.attribute = Attribute::religion;
  s.language = "he";
  s.gender = Gender::male;
  auto r = compute_metric_report(s, "m", std::string("g3"), 54);
  EXPECT_EQ(metric_report_from_json(nlohmann::json::parse(to_json(r).dump())), r);
  EXPECT_EQ(r.mbcm->count("g3"), 0u);
  auto plain = compute_metric_report(s, "m");
  EXPECT_FALSE(plain.mbcm.has_value());
  EXPECT_EQ(metric_report_from_json(to_json(plain)), plain);
}
