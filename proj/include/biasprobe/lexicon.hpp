#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/templates.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

struct LexiconKey {
  Attribute attribute = Attribute::race;
  std::string group;
  std::string language;
  Gender gender = Gender::female;
  Role role = Role::adj;

  auto tie() const { return std::tie(attribute, group, language, gender, role); }
  friend bool operator<(const LexiconKey& a, const LexiconKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const LexiconKey& a, const LexiconKey& b) { return a.tie() == b.tie(); }
};

inline std::string to_string(const LexiconKey& k) {
  return std::string(to_string(k.attribute)) + "/" + k.group + "/" + k.language + "/" +
         std::string(to_string(k.gender)) + "/" + std::string(to_string(k.role));
}

struct LexiconEntry {
  LexiconKey key;
  std::vector<std::string> terms;
};

/// Identity terms keyed by (attribute, group, language, gender, role).
/// Entries keep file order; lookups go through an index.
class Lexicon {
 public:
  void add(LexiconEntry entry) {
    if (entry.terms.empty())
      throw Error(ErrorCode::EmptyTermList, "no terms for " + to_string(entry.key));
    for (const auto& t : entry.terms)
      if (t.empty()) throw Error(ErrorCode::EmptyTermList, "empty term for " + to_string(entry.key));
    if (index_.count(entry.key))
      throw Error(ErrorCode::MalformedJson, "duplicate lexicon entry for " + to_string(entry.key));
    index_.emplace(entry.key, entries_.size());
    entries_.push_back(std::move(entry));
  }

  const std::vector<std::string>* find(const LexiconKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second].terms;
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Groups defined for `attribute`, in lexicographic (byte) order.
  std::vector<std::string> groups(Attribute attribute) const {
    std::set<std::string> out;
    for (const auto& e : entries_)
      if (e.key.attribute == attribute) out.insert(e.key.group);
    return {out.begin(), out.end()};
  }

  /// Distinct surface terms for a group in one language, over genders and roles.
  std::vector<std::string> terms_for(Attribute attribute, std::string_view group, std::string_view language) const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (e.key.attribute != attribute || e.key.group != group || e.key.language != language) continue;
      for (const auto& t : e.terms)
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
  }

 private:
  std::vector<LexiconEntry> entries_;
  std::map<LexiconKey, std::size_t> index_;
};

inline Lexicon parse_lexicon_file(std::string_view bytes) {
  using detail::require;
  using detail::require_string;
  const nlohmann::json doc = detail::parse_json(bytes, "lexicon file");
  const auto& arr = require(doc, "entries", "lexicon file");
  if (!arr.is_array()) throw Error(ErrorCode::MalformedJson, "'entries' must be an array");
  Lexicon lexicon;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& je = arr[i];
    const std::string where = "entries[" + std::to_string(i) + "]";
    LexiconEntry e;
    e.key.attribute = parse_attribute(require_string(je, "attribute", where));
    e.key.group = require_string(je, "group", where);
    e.key.language = require_string(je, "language", where);
    auto gender = try_parse_gender(require_string(je, "gender", where));
    if (!gender) throw Error(ErrorCode::MalformedJson, where + ": gender must be female|male");
    e.key.gender = *gender;
    auto role = try_parse_role(require_string(je, "role", where));
    if (!role) throw Error(ErrorCode::MalformedJson, where + ": role must be adj|noun");
    e.key.role = *role;
    const auto& terms = require(je, "terms", where);
    if (!terms.is_array()) throw Error(ErrorCode::MalformedJson, where + ": 'terms' must be an array");
    for (const auto& t : terms) {
      if (!t.is_string()) throw Error(ErrorCode::MalformedJson, where + ": terms must be strings");
      e.terms.push_back(t.get<std::string>());
    }
    lexicon.add(std::move(e));
  }
  return lexicon;
}

/// Merges lexicons in order; duplicate keys are an error.
inline Lexicon merge_lexicons(const std::vector<Lexicon>& parts) {
  Lexicon out;
  for (const auto& p : parts)
    for (const auto& e : p.entries()) out.add(e);
  return out;
}

/// The group set of one attribute.
struct AttributeSpec {
  Attribute attribute = Attribute::race;
  std::vector<std::string> groups;
};

inline AttributeSpec attribute_spec(const Lexicon& lexicon, Attribute attribute) {
  if (attribute == Attribute::gender) return {attribute, {"female", "male"}};
  return {attribute, lexicon.groups(attribute)};
}

/// Group counts of the reference study design.
inline std::size_t reference_group_count(Attribute attribute) {
  switch (attribute) {
    case Attribute::gender: return 2;
    case Attribute::race: return 5;
    case Attribute::religion: return 6;
    case Attribute::nationality: return 17;
  }
  return 0;
}

}  // namespace biasprobe
