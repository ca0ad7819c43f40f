#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/lexicon.hpp"
#include "biasprobe/sample_id.hpp"
#include "biasprobe/templates.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

/// One fully substituted sentence, a member of the (template, group) cell.
struct BiasSample {
  std::string sample_id;
  std::string template_id;
  Attribute attribute = Attribute::race;
  std::string group;
  std::string language;
  Gender gender = Gender::female;
  std::size_t identity_term_index = 0;
  std::string text;
  Label gold_label = Label::neutral;

  friend bool operator==(const BiasSample&, const BiasSample&) = default;
};

namespace detail {

inline std::string substitute(std::string_view text, const std::vector<Placeholder>& slots,
                              const std::map<Role, std::string_view>& fill) {
  std::string out;
  std::size_t cursor = 0;
  for (const auto& p : slots) {
    out.append(text.substr(cursor, p.offset - cursor));
    out.append(fill.at(p.role));
    cursor = p.offset + p.length;
  }
  out.append(text.substr(cursor));
  return out;
}

}  // namespace detail

/// Expands templates into bias samples for the selected languages and
/// attributes. Non-gender templates yield one sample per (template, language,
/// gender, group, term index); gender templates yield one sample per
/// (template, language, gender) with group equal to the subject gender.
/// When a template uses several roles, term index i draws the i-th term of
/// each role and the index range is the shortest of those term lists.
/// Output is sorted by sample_id.
inline std::vector<BiasSample> expand(const TemplateSet& set, const Lexicon& lexicon,
                                      const std::vector<std::string>& languages,
                                      const std::vector<Attribute>& attributes) {
  std::vector<BiasSample> out;
  std::map<Attribute, std::vector<std::string>> groups_by_attribute;
  for (Attribute a : attributes) groups_by_attribute[a] = attribute_spec(lexicon, a).groups;

  for (const auto& t : set.templates) {
    auto groups_it = groups_by_attribute.find(t.attribute);
    if (groups_it == groups_by_attribute.end()) continue;
    for (const auto& lang : languages) {
      for (Gender gender : kAllGenders) {
        const TemplateVariant* variant = t.find_variant(lang, gender);
        if (!variant)
          throw Error(ErrorCode::MissingLanguageVariant, "template '" + t.template_id + "' has no " +
                                                             std::string(to_string(gender)) + " variant for '" +
                                                             lang + "'");
        const auto slots = scan_placeholders(variant->text);
        if (t.attribute == Attribute::gender) {
          BiasSample s;
          s.template_id = t.template_id;
          s.attribute = t.attribute;
          s.group = std::string(to_string(gender));
          s.language = lang;
          s.gender = gender;
          s.identity_term_index = 0;
          s.text = variant->text;
          s.gold_label = t.gold_label;
          s.sample_id = make_sample_id(s.attribute, s.template_id, s.language, s.gender, s.group, 0);
          out.push_back(std::move(s));
          continue;
        }
        std::vector<Role> roles;
        for (const auto& p : slots)
          if (std::find(roles.begin(), roles.end(), p.role) == roles.end()) roles.push_back(p.role);
        std::sort(roles.begin(), roles.end());

        for (const auto& group : groups_it->second) {
          std::map<Role, const std::vector<std::string>*> terms;
          std::size_t n_terms = roles.empty() ? 1 : std::numeric_limits<std::size_t>::max();
          for (Role r : roles) {
            LexiconKey key{t.attribute, group, lang, gender, r};
            const auto* found = lexicon.find(key);
            if (!found)
              throw Error(ErrorCode::MissingLexiconEntry,
                          "no lexicon entry for " + to_string(key) + " (template '" + t.template_id + "')");
            terms[r] = found;
            n_terms = std::min(n_terms, found->size());
          }
          for (std::size_t i = 0; i < n_terms; ++i) {
            std::map<Role, std::string_view> fill;
            for (const auto& [r, list] : terms) fill[r] = (*list)[i];
            BiasSample s;
            s.template_id = t.template_id;
            s.attribute = t.attribute;
            s.group = group;
            s.language = lang;
            s.gender = gender;
            s.identity_term_index = i;
            s.text = detail::substitute(variant->text, slots, fill);
            s.gold_label = t.gold_label;
            s.sample_id = make_sample_id(s.attribute, s.template_id, s.language, s.gender, s.group, i);
            out.push_back(std::move(s));
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BiasSample& a, const BiasSample& b) { return a.sample_id < b.sample_id; });
  return out;
}

struct GenderPair {
  std::string female_sample_id;
  std::string male_sample_id;

  friend bool operator==(const GenderPair&, const GenderPair&) = default;
};

/// Pairs each female-subject sample with the male-subject sample that agrees
/// on (attribute, template, language, group, term index). Pairs come back
/// ordered by female sample id.
inline std::vector<GenderPair> pair_genders(const std::vector<BiasSample>& samples) {
  using PairKey = std::tuple<Attribute, std::string, std::string, std::string, std::size_t>;
  std::map<PairKey, std::pair<const BiasSample*, const BiasSample*>> slots;
  for (const auto& s : samples) {
    if (s.attribute == Attribute::gender)
      throw Error(ErrorCode::UnpairedSample,
                  "gender-attribute sample '" + s.sample_id + "' has no counterpart by construction");
    auto& slot = slots[PairKey{s.attribute, s.template_id, s.language, s.group, s.identity_term_index}];
    auto& target = s.gender == Gender::female ? slot.first : slot.second;
    if (target) throw Error(ErrorCode::UnpairedSample, "sample '" + s.sample_id + "' occurs twice");
    target = &s;
  }
  std::vector<GenderPair> pairs;
  pairs.reserve(slots.size());
  for (const auto& [key, slot] : slots) {
    if (!slot.first || !slot.second) {
      const BiasSample* lone = slot.first ? slot.first : slot.second;
      throw Error(ErrorCode::UnpairedSample, "sample '" + lone->sample_id + "' has no opposite-gender partner",
                  {lone->sample_id});
    }
    pairs.push_back({slot.first->sample_id, slot.second->sample_id});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const GenderPair& a, const GenderPair& b) { return a.female_sample_id < b.female_sample_id; });
  return pairs;
}

inline nlohmann::ordered_json to_json(const BiasSample& s) {
  return {{"sample_id", s.sample_id},
          {"template_id", s.template_id},
          {"attribute", std::string(to_string(s.attribute))},
          {"group", s.group},
          {"language", s.language},
          {"gender", std::string(to_string(s.gender))},
          {"identity_term_index", s.identity_term_index},
          {"text", s.text},
          {"gold_label", std::string(to_string(s.gold_label))}};
}

inline std::string write_samples_jsonl(const std::vector<BiasSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<BiasSample> read_samples_jsonl(std::string_view bytes) {
  std::vector<BiasSample> out;
  std::istringstream in{std::string(bytes)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = "samples line " + std::to_string(line_no);
    try {
      auto j = nlohmann::json::parse(line);
      BiasSample s;
      s.sample_id = j.at("sample_id").get<std::string>();
      s.template_id = j.at("template_id").get<std::string>();
      s.attribute = parse_attribute(j.at("attribute").get<std::string>());
      s.group = j.at("group").get<std::string>();
      s.language = j.at("language").get<std::string>();
      auto g = try_parse_gender(j.at("gender").get<std::string>());
      auto l = try_parse_label(j.at("gold_label").get<std::string>());
      if (!g || !l) throw Error(ErrorCode::MalformedLine, where + ": bad gender or gold_label");
      s.gender = *g;
      s.gold_label = *l;
      s.identity_term_index = j.at("identity_term_index").get<std::size_t>();
      s.text = j.at("text").get<std::string>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace biasprobe
