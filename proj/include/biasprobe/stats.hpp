#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/expand.hpp"
#include "biasprobe/scores.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

struct TestResult {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_effective = 0;
  bool exact = false;
  /// Wilcoxon only: W+ - W-, which flips sign when the inputs are swapped.
  /// Not part of the serialized form.
  std::optional<double> signed_statistic;

  friend bool operator==(const TestResult& a, const TestResult& b) {
    return a.method == b.method && a.statistic == b.statistic && a.p_value == b.p_value &&
           a.n_effective == b.n_effective && a.exact == b.exact;
  }
};

inline nlohmann::json to_json(const TestResult& r) {
  return {{"method", r.method},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"n_effective", r.n_effective},
          {"exact", r.exact}};
}

inline TestResult test_result_from_json(const nlohmann::json& j) {
  TestResult r;
  r.method = j.at("method").get<std::string>();
  r.statistic = j.at("statistic").get<double>();
  r.p_value = j.at("p_value").get<double>();
  r.n_effective = j.at("n_effective").get<std::size_t>();
  r.exact = j.at("exact").get<bool>();
  return r;
}

/// Exact-vs-asymptotic switch points.
struct StatsOptions {
  std::size_t mcnemar_exact_below = 25;  // exact binomial when b + c is below this
  std::size_t wilcoxon_exact_max = 20;   // full enumeration when n_effective <= this
};

namespace detail {

inline double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(df);
  return clamp_p(boost::math::cdf(boost::math::complement(dist, x)));
}

inline double normal_sf(double z) {
  boost::math::normal dist;
  return clamp_p(boost::math::cdf(boost::math::complement(dist, z)));
}

/// Average ranks (1-based) of `values`; ties share the mean rank. Also
/// returns sum over tie groups of (t^3 - t).
inline std::pair<std::vector<double>, double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return {ranks, tie_term};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// McNemar

struct PairedPredictions {
  std::vector<Label> gold;
  std::vector<Label> predictions_a;
  std::vector<Label> predictions_b;
};

/// McNemar on discordant counts: b = a right / b wrong, c = a wrong / b right.
inline TestResult mcnemar_from_counts(std::size_t b, std::size_t c, const StatsOptions& opts = {}) {
  TestResult r;
  r.method = "mcnemar";
  const std::size_t n = b + c;
  r.n_effective = n;
  if (n == 0) {
    r.exact = true;
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  if (n < opts.mcnemar_exact_below) {
    // Two-sided binomial(n, 1/2) tail from max(b, c) upward, doubled.
    const std::size_t hi = std::max(b, c);
    double tail = 0.0;
    for (std::size_t k = hi; k <= n; ++k) {
      const double log_term = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
                              std::lgamma(static_cast<double>(n - k) + 1) - static_cast<double>(n) * std::log(2.0);
      tail += std::exp(log_term);
    }
    r.exact = true;
    r.statistic = static_cast<double>(std::min(b, c));
    r.p_value = detail::clamp_p(std::min(1.0, 2.0 * tail));
    return r;
  }
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  r.statistic = diff > 0.0 ? diff * diff / static_cast<double>(n) : 0.0;
  r.p_value = detail::chi_square_sf(r.statistic, 1.0);
  r.exact = false;
  return r;
}

inline std::pair<std::size_t, std::size_t> discordant_counts(const PairedPredictions& pp) {
  if (pp.gold.size() != pp.predictions_a.size() || pp.gold.size() != pp.predictions_b.size())
    throw Error(ErrorCode::LengthMismatch, "gold and prediction vectors differ in length");
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < pp.gold.size(); ++i) {
    const bool a_ok = pp.predictions_a[i] == pp.gold[i];
    const bool b_ok = pp.predictions_b[i] == pp.gold[i];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return {b, c};
}

inline TestResult mcnemar(const PairedPredictions& pp, const StatsOptions& opts = {}) {
  auto [b, c] = discordant_counts(pp);
  return mcnemar_from_counts(b, c, opts);
}

// ---------------------------------------------------------------------------
// Friedman

/// Friedman test over `blocks` (rows), each holding one value per treatment.
/// Within-block mean ranks, tie-corrected statistic, chi-square(k - 1) p-value.
inline TestResult friedman(const std::vector<std::vector<double>>& blocks) {
  const std::size_t n = blocks.size();
  const std::size_t k = n == 0 ? 0 : blocks.front().size();
  if (k < 3) throw Error(ErrorCode::TooFewTreatments, "Friedman test needs at least 3 treatments");
  if (n < 2) throw Error(ErrorCode::TooFewBlocks, "Friedman test needs at least 2 blocks");
  std::vector<double> rank_sums(k, 0.0);
  double tie_total = 0.0;
  for (const auto& block : blocks) {
    if (block.size() != k) throw Error(ErrorCode::LengthMismatch, "Friedman blocks differ in length");
    auto [ranks, tie_term] = detail::average_ranks(block);
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
    tie_total += tie_term;
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  double sum_sq = 0.0;
  for (double r : rank_sums) sum_sq += r * r;
  double stat = 12.0 / (nd * kd * (kd + 1.0)) * sum_sq - 3.0 * nd * (kd + 1.0);
  const double correction = 1.0 - tie_total / (nd * kd * (kd * kd - 1.0));

  TestResult r;
  r.method = "friedman";
  r.n_effective = n;
  r.exact = false;
  if (correction <= 1e-12) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  stat /= correction;
  if (stat < 0.0 && stat > -1e-9) stat = 0.0;
  r.statistic = stat;
  r.p_value = detail::chi_square_sf(stat, kd - 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

/// Paired two-sided Wilcoxon signed-rank test on x - y. Zero differences are
/// dropped; tied |d| share mean ranks; statistic is min(W+, W-).
inline TestResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                       const StatsOptions& opts = {}) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "Wilcoxon inputs differ in length");
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  TestResult r;
  r.method = "wilcoxon";
  const std::size_t n = abs_d.size();
  r.n_effective = n;
  if (n == 0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.exact = true;
    r.signed_statistic = 0.0;
    return r;
  }
  auto [ranks, tie_term] = detail::average_ranks(abs_d);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (positive[i] ? w_plus : w_minus) += ranks[i];
  const double w = std::min(w_plus, w_minus);
  r.statistic = w;
  r.signed_statistic = w_plus - w_minus;

  if (n <= opts.wilcoxon_exact_max) {
    // Mean ranks are multiples of 1/2, so doubled ranks are integers. Count
    // sign assignments by the doubled W+ they produce.
    std::vector<std::size_t> doubled(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    std::size_t reach = 0;
    for (std::size_t v : doubled) {
      for (std::size_t s = reach + 1; s-- > 0;)
        if (ways[s] != 0.0) ways[s + v] += ways[s];
      reach += v;
    }
    const std::size_t observed = static_cast<std::size_t>(std::llround(2.0 * w));
    double lower = 0.0;
    for (std::size_t s = 0; s <= observed && s <= total; ++s) lower += ways[s];
    r.p_value = detail::clamp_p(std::min(1.0, 2.0 * lower / std::ldexp(1.0, static_cast<int>(n))));
    r.exact = true;
    return r;
  }
  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = std::max(0.0, std::abs(w - mean) - 0.5);
  r.p_value = var > 0.0 ? detail::clamp_p(std::min(1.0, 2.0 * detail::normal_sf(dev / std::sqrt(var)))) : 1.0;
  r.exact = false;
  return r;
}

/// Paired female-minus-male comparison; a thin wrapper over Wilcoxon.
inline TestResult gender_gap_test(const std::vector<double>& female, const std::vector<double>& male,
                                  const StatsOptions& opts = {}) {
  return wilcoxon_signed_rank(female, male, opts);
}

/// Looks up both members of each gender pair and runs gender_gap_test.
inline TestResult gender_gap_test(const std::vector<GenderPair>& pairs, const ScoreTable& scores,
                                  const StatsOptions& opts = {}) {
  std::vector<double> f, m;
  std::vector<std::string> missing;
  for (const auto& p : pairs) {
    const auto* a = scores.find(p.female_sample_id);
    const auto* b = scores.find(p.male_sample_id);
    if (!a) missing.push_back(p.female_sample_id);
    if (!b) missing.push_back(p.male_sample_id);
    if (a && b) {
      f.push_back(a->p_positive);
      m.push_back(b->p_positive);
    }
  }
  if (!missing.empty())
    throw Error(ErrorCode::MissingScore, std::to_string(missing.size()) + " paired sample(s) without a score",
                std::move(missing));
  return gender_gap_test(f, m, opts);
}

// ---------------------------------------------------------------------------
// Language partitioning

/// Connected components of the graph whose edges join languages that are not
/// significantly different (p >= alpha). Components are sorted internally;
/// larger components come first, ties broken lexicographically.
inline std::vector<std::vector<std::string>> partition_languages(const std::vector<std::string>& languages,
                                                                 const std::vector<std::vector<double>>& p_matrix,
                                                                 double alpha) {
  const std::size_t n = languages.size();
  if (p_matrix.size() != n) throw Error(ErrorCode::LengthMismatch, "p-value matrix size does not match languages");
  for (const auto& row : p_matrix)
    if (row.size() != n) throw Error(ErrorCode::LengthMismatch, "p-value matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(p_matrix[i][j] - p_matrix[j][i]) > 1e-12)
        throw Error(ErrorCode::AsymmetricMatrix,
                    "p(" + languages[i] + "," + languages[j] + ") differs from p(" + languages[j] + "," + languages[i] + ")");

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (p_matrix[i][j] >= alpha) parent[find(i)] = find(j);

  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].push_back(languages[i]);
  std::vector<std::vector<std::string>> sets;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    sets.push_back(std::move(members));
  }
  std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
  return sets;
}

}  // namespace biasprobe
