#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/templates.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

/// Token frequencies of one language's reference corpus.
struct CorpusCounts {
  std::string language;
  std::map<std::string, std::uint64_t> counts;
};

inline CorpusCounts parse_corpus_counts(std::string_view bytes) {
  const auto doc = detail::parse_json(bytes, "corpus counts");
  CorpusCounts out;
  out.language = detail::require_string(doc, "language", "corpus counts");
  const auto& counts = detail::require(doc, "counts", "corpus counts");
  if (!counts.is_object()) throw Error(ErrorCode::MalformedJson, "corpus counts: 'counts' must be an object");
  for (const auto& [token, n] : counts.items()) {
    if (!n.is_number_unsigned() && !(n.is_number_integer() && n.get<std::int64_t>() >= 0))
      throw Error(ErrorCode::MalformedJson, "corpus counts: count for '" + token + "' must be a non-negative integer");
    out.counts[token] = n.get<std::uint64_t>();
  }
  return out;
}

/// ASCII lower-casing; other bytes pass through unchanged.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

struct GroupRanking {
  std::map<std::string, std::vector<std::string>> ranked;  // language -> groups, most frequent first
  std::map<std::string, std::map<std::string, std::uint64_t>> totals;  // language -> group -> frequency
  std::vector<std::string> overlap;  // groups in the top-k of every language, lexicographic
};

/// Ranks the attribute's groups per language by the summed corpus frequency of
/// their identity terms (case-folded lookup, each distinct term counted once;
/// absent tokens count 0). Ties break lexicographically by group name.
inline GroupRanking rank_groups_by_frequency(const std::vector<CorpusCounts>& corpora, const Lexicon& lexicon,
                                             Attribute attribute, std::size_t top_k) {
  GroupRanking out;
  const std::vector<std::string> groups = lexicon.groups(attribute);
  std::map<std::string, int> membership;
  for (const auto& corpus : corpora) {
    std::map<std::string, std::uint64_t> folded;
    for (const auto& [token, n] : corpus.counts) folded[ascii_lower(token)] += n;

    auto& totals = out.totals[corpus.language];
    for (const auto& g : groups) {
      std::set<std::string> seen;
      std::uint64_t total = 0;
      for (const auto& term : lexicon.terms_for(attribute, g, corpus.language)) {
        auto key = ascii_lower(term);
        if (!seen.insert(key).second) continue;
        if (auto it = folded.find(key); it != folded.end()) total += it->second;
      }
      totals[g] = total;
    }
    std::vector<std::string> ranked = groups;
    std::stable_sort(ranked.begin(), ranked.end(), [&](const std::string& a, const std::string& b) {
      if (totals[a] != totals[b]) return totals[a] > totals[b];
      return a < b;
    });
    for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) ++membership[ranked[i]];
    out.ranked[corpus.language] = std::move(ranked);
  }
  for (const auto& [group, n] : membership)
    if (n == static_cast<int>(corpora.size())) out.overlap.push_back(group);
  return out;
}

}  // namespace biasprobe
