#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "biasprobe/biasprobe.hpp"

namespace testing_support {

inline std::filesystem::path fixture_dir() { return BIASPROBE_FIXTURE_DIR; }

inline std::string fixture(const std::string& name) { return biasprobe::read_file(fixture_dir() / name); }

inline std::vector<std::string> fixture_template_files() {
  std::vector<std::string> out;
  for (const char* a : {"gender", "race", "religion", "nationality"})
    out.push_back((fixture_dir() / ("templates_" + std::string(a) + ".json")).string());
  return out;
}

inline const std::vector<std::string>& fixture_languages() {
  static const std::vector<std::string> langs = {"en", "es", "zh", "it", "he"};
  return langs;
}

/// Scratch directory unique to the calling test; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("biasprobe_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Random matrices

inline biasprobe::ScoreMatrix random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t n, double lo = 0.0,
                                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::string> groups, templates;
  for (std::size_t i = 0; i < m; ++i) groups.push_back("g" + std::to_string(i));
  for (std::size_t j = 0; j < n; ++j) templates.push_back("t" + std::to_string(j));
  std::vector<double> values(m * n);
  for (auto& x : values) x = u(rng);
  return {groups, templates, values};
}

inline std::vector<std::vector<double>> as_rows(const biasprobe::ScoreMatrix& s) {
  std::vector<std::vector<double>> rows(s.groups_count(), std::vector<double>(s.templates_count()));
  for (std::size_t i = 0; i < s.groups_count(); ++i)
    for (std::size_t j = 0; j < s.templates_count(); ++j) rows[i][j] = s(i, j);
  return rows;
}

inline biasprobe::ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                        std::vector<std::string> groups = {}) {
  if (groups.empty())
    for (std::size_t i = 0; i < rows.size(); ++i) groups.push_back("g" + std::to_string(i));
  std::vector<std::string> templates;
  for (std::size_t j = 0; j < rows.front().size(); ++j) templates.push_back("t" + std::to_string(j));
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  return {groups, templates, values};
}

// ---------------------------------------------------------------------------
// Metric oracles, written from the definitions without sharing code paths.

inline double oracle_mcm(const std::vector<std::vector<double>>& p) {
  const std::size_t m = p.size(), n = p[0].size();
  long double acc = 0;
  for (std::size_t j = 0; j < n; ++j) {
    long double mean = 0;
    for (std::size_t i = 0; i < m; ++i) mean += p[i][j];
    mean /= m;
    long double var = 0;
    for (std::size_t i = 0; i < m; ++i) var += (p[i][j] - mean) * (p[i][j] - mean);
    acc += std::sqrt(var / m);
  }
  return static_cast<double>(acc / n);
}

inline std::vector<double> oracle_v(const std::vector<std::vector<double>>& p) {
  std::vector<double> out;
  for (const auto& row : p) {
    long double s = 0;
    for (double x : row) s += x;
    out.push_back(static_cast<double>(s / row.size()));
  }
  return out;
}

/// Average over templates of (row i minus background row); background is a
/// full row vector.
inline double oracle_background_gap(const std::vector<std::vector<double>>& p, std::size_t i,
                                    const std::vector<long double>& background) {
  long double s = 0;
  for (std::size_t j = 0; j < p[i].size(); ++j) s += p[i][j] - background[j];
  return static_cast<double>(s / p[i].size());
}

inline std::vector<double> oracle_vbcm(const std::vector<std::vector<double>>& p) {
  const std::size_t m = p.size(), n = p[0].size();
  std::vector<long double> bg(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) bg[j] += p[i][j];
    bg[j] /= m;
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(oracle_background_gap(p, i, bg));
  return out;
}

inline std::map<std::size_t, double> oracle_mbcm(const std::vector<std::vector<double>>& p, std::size_t majority) {
  std::vector<long double> bg(p[majority].begin(), p[majority].end());
  std::map<std::size_t, double> out;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i != majority) out[i] = oracle_background_gap(p, i, bg);
  return out;
}

// ---------------------------------------------------------------------------
// Test-statistic oracles

inline long double binom(unsigned n, unsigned k) {
  long double r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Two-sided exact McNemar p by enumerating the binomial(b+c, 1/2) tail.
inline double oracle_mcnemar_exact(unsigned b, unsigned c) {
  const unsigned n = b + c;
  if (n == 0) return 1.0;
  long double tail = 0;
  for (unsigned k = std::max(b, c); k <= n; ++k) tail += binom(n, k);
  return static_cast<double>(std::min<long double>(1.0L, 2.0L * tail / std::pow(2.0L, n)));
}

inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

/// Uncorrected Friedman statistic straight from the rank-sum formula.
inline double friedman_statistic(const std::vector<std::vector<double>>& blocks) {
  const double n = static_cast<double>(blocks.size()), k = static_cast<double>(blocks[0].size());
  std::vector<double> R(blocks[0].size(), 0.0);
  for (const auto& b : blocks) {
    auto r = oracle_ranks(b);
    for (std::size_t j = 0; j < r.size(); ++j) R[j] += r[j];
  }
  double ss = 0;
  for (double x : R) ss += x * x;
  return 12.0 / (n * k * (k + 1.0)) * ss - 3.0 * n * (k + 1.0);
}

/// Monte-Carlo permutation p for Friedman: shuffle values within each block.
inline double oracle_friedman_permutation(std::vector<std::vector<double>> blocks, std::size_t draws,
                                          std::uint64_t seed) {
  const double observed = friedman_statistic(blocks);
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (auto& b : blocks) std::shuffle(b.begin(), b.end(), rng);
    if (friedman_statistic(blocks) >= observed - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

/// Exact two-sided Wilcoxon p by enumerating every sign assignment.
inline double oracle_wilcoxon_exact(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> mag;
  for (double v : d) mag.push_back(std::abs(v));
  auto r = oracle_ranks(mag);
  double wplus = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += r[i];
    if (d[i] > 0) wplus += r[i];
  }
  const double w = std::min(wplus, total - wplus);
  std::size_t extreme = 0;
  const std::size_t all = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < all; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1U) s += r[i];
    if (std::min(s, total - s) <= w + 1e-9) ++extreme;
  }
  return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(all));
}

}  // namespace testing_support

#define EXPECT_ERROR_CODE(stmt, expected)                                              \
  do {                                                                                 \
    try {                                                                              \
      stmt;                                                                            \
      ADD_FAILURE() << "expected " << biasprobe::to_string(expected) << ", no throw";  \
    } catch (const biasprobe::Error& e__) {                                            \
      EXPECT_EQ(e__.code(), expected) << e__.what();                                   \
    }                                                                                  \
  } while (0)
