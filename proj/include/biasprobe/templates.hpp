#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasprobe/error.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

struct TemplateVariant {
  std::string language;
  Gender gender = Gender::female;
  std::string text;
};

struct Template {
  std::string template_id;
  Attribute attribute = Attribute::race;
  Label gold_label = Label::neutral;
  std::vector<TemplateVariant> variants;

  const TemplateVariant* find_variant(std::string_view language, Gender gender) const {
    for (const auto& v : variants)
      if (v.language == language && v.gender == gender) return &v;
    return nullptr;
  }
};

struct TemplateSet {
  std::vector<Template> templates;

  std::size_t size() const { return templates.size(); }
  std::size_t count(Attribute attribute) const {
    return static_cast<std::size_t>(std::count_if(templates.begin(), templates.end(),
                                                  [&](const Template& t) { return t.attribute == attribute; }));
  }
  /// Languages referenced by any variant, sorted.
  std::vector<std::string> languages() const {
    std::set<std::string> langs;
    for (const auto& t : templates)
      for (const auto& v : t.variants) langs.insert(v.language);
    return {langs.begin(), langs.end()};
  }
};

/// A placeholder occurrence inside template text.
struct Placeholder {
  std::size_t offset = 0;  // position of '{'
  std::size_t length = 0;  // including braces
  Role role = Role::adj;
};

/// Scans `{identity:adj}` / `{identity:noun}` slots. Any other use of braces
/// is rejected with UnknownPlaceholderRole.
inline std::vector<Placeholder> scan_placeholders(std::string_view text) {
  std::vector<Placeholder> out;
  std::size_t pos = 0;
  while ((pos = text.find_first_of("{}", pos)) != std::string_view::npos) {
    if (text[pos] == '}')
      throw Error(ErrorCode::UnknownPlaceholderRole, "stray '}' in '" + std::string(text) + "'");
    std::size_t close = text.find('}', pos);
    if (close == std::string_view::npos)
      throw Error(ErrorCode::UnknownPlaceholderRole, "unterminated placeholder in '" + std::string(text) + "'");
    std::string_view body = text.substr(pos + 1, close - pos - 1);
    constexpr std::string_view kPrefix = "identity:";
    std::optional<Role> role;
    if (body.substr(0, kPrefix.size()) == kPrefix) role = try_parse_role(body.substr(kPrefix.size()));
    if (!role)
      throw Error(ErrorCode::UnknownPlaceholderRole, "unknown placeholder '{" + std::string(body) + "}'");
    out.push_back({pos, close - pos + 1, *role});
    pos = close + 1;
  }
  return out;
}

inline std::vector<Role> placeholder_roles(std::string_view text) {
  std::vector<Role> roles;
  for (const auto& p : scan_placeholders(text)) roles.push_back(p.role);
  std::sort(roles.begin(), roles.end());
  return roles;
}

namespace detail {

inline std::string role_multiset_string(const std::vector<Role>& roles) {
  std::string s = "[";
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (i) s += ",";
    s += to_string(roles[i]);
  }
  return s + "]";
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::MalformedJson, where + ": missing field '" + key + "'");
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw Error(ErrorCode::MalformedJson, where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline nlohmann::json parse_json(std::string_view bytes, std::string_view what) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedJson, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

/// Parses the template JSON without cross-variant checks. Placeholder syntax
/// is still enforced. Used by validation, which reports structural problems
/// as findings instead of failing.
inline TemplateSet parse_template_records(std::string_view bytes) {
  using detail::require;
  using detail::require_string;
  const nlohmann::json doc = detail::parse_json(bytes, "template file");
  const auto& arr = require(doc, "templates", "template file");
  if (!arr.is_array()) throw Error(ErrorCode::MalformedJson, "'templates' must be an array");

  TemplateSet set;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& jt = arr[i];
    const std::string where = "templates[" + std::to_string(i) + "]";
    Template t;
    t.template_id = require_string(jt, "template_id", where);
    if (t.template_id.empty()) throw Error(ErrorCode::MalformedJson, where + ": empty template_id");
    t.attribute = parse_attribute(require_string(jt, "attribute", where));
    auto label = try_parse_label(require_string(jt, "gold_label", where));
    if (!label) throw Error(ErrorCode::MalformedJson, where + ": gold_label must be positive|negative|neutral");
    t.gold_label = *label;
    const auto& jv = require(jt, "variants", where);
    if (!jv.is_array()) throw Error(ErrorCode::MalformedJson, where + ": 'variants' must be an array");
    for (std::size_t k = 0; k < jv.size(); ++k) {
      const std::string vwhere = where + ".variants[" + std::to_string(k) + "]";
      TemplateVariant v;
      v.language = require_string(jv[k], "language", vwhere);
      auto gender = try_parse_gender(require_string(jv[k], "gender", vwhere));
      if (!gender) throw Error(ErrorCode::MalformedJson, vwhere + ": gender must be female|male");
      v.gender = *gender;
      v.text = require_string(jv[k], "text", vwhere);
      scan_placeholders(v.text);
      t.variants.push_back(std::move(v));
    }
    set.templates.push_back(std::move(t));
  }
  return set;
}

/// Strict parse: the result satisfies every TemplateSet invariant. The
/// language list a template must cover is the union of languages in the file.
inline TemplateSet parse_template_file(std::string_view bytes) {
  TemplateSet set = parse_template_records(bytes);
  const std::vector<std::string> languages = set.languages();
  std::set<std::string> seen_ids;
  for (const auto& t : set.templates) {
    if (!seen_ids.insert(t.template_id).second)
      throw Error(ErrorCode::DuplicateTemplateId, "template_id '" + t.template_id + "' appears twice");
    if (t.variants.empty())
      throw Error(ErrorCode::MissingLanguageVariant, "template '" + t.template_id + "' has no variants");
    for (const auto& lang : languages) {
      for (Gender g : kAllGenders) {
        auto n = std::count_if(t.variants.begin(), t.variants.end(),
                               [&](const TemplateVariant& v) { return v.language == lang && v.gender == g; });
        if (n != 1)
          throw Error(ErrorCode::MissingLanguageVariant,
                      "template '" + t.template_id + "' has " + std::to_string(n) + " " +
                          std::string(to_string(g)) + " variants for language '" + lang + "' (need exactly 1)");
      }
    }
    const std::vector<Role> reference = placeholder_roles(t.variants.front().text);
    if (t.attribute == Attribute::gender && !reference.empty())
      throw Error(ErrorCode::PlaceholderMismatch,
                  "gender template '" + t.template_id + "' must not contain identity placeholders");
    for (const auto& v : t.variants) {
      auto roles = placeholder_roles(v.text);
      if (roles != reference)
        throw Error(ErrorCode::PlaceholderMismatch,
                    "template '" + t.template_id + "' variant " + v.language + "/" +
                        std::string(to_string(v.gender)) + " has placeholders " +
                        detail::role_multiset_string(roles) + ", expected " +
                        detail::role_multiset_string(reference));
    }
  }
  return set;
}

/// Concatenates several template sets, enforcing global id uniqueness.
inline TemplateSet merge_template_sets(std::vector<TemplateSet> sets) {
  TemplateSet merged;
  std::set<std::string> ids;
  for (auto& s : sets) {
    for (auto& t : s.templates) {
      if (!ids.insert(t.template_id).second)
        throw Error(ErrorCode::DuplicateTemplateId, "template_id '" + t.template_id + "' appears in more than one file");
      merged.templates.push_back(std::move(t));
    }
  }
  return merged;
}

enum class FindingKind { missing_variant, duplicate_variant, placeholder_mismatch, duplicate_template_id };

constexpr std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::missing_variant: return "missing_variant";
    case FindingKind::duplicate_variant: return "duplicate_variant";
    case FindingKind::placeholder_mismatch: return "placeholder_mismatch";
    case FindingKind::duplicate_template_id: return "duplicate_template_id";
  }
  return "";
}

struct ValidationFinding {
  std::string template_id;
  FindingKind kind = FindingKind::missing_variant;
  std::string language;
  std::optional<Gender> gender;
  std::string detail;
};

struct ValidationReport {
  std::size_t variant_checks = 0;  // templates x languages x genders examined
  std::vector<ValidationFinding> findings;

  bool ok() const { return findings.empty(); }
};

inline nlohmann::json to_json(const ValidationFinding& f) {
  nlohmann::json j = {{"template_id", f.template_id},
                      {"kind", std::string(to_string(f.kind))},
                      {"language", f.language},
                      {"detail", f.detail}};
  j["gender"] = f.gender ? nlohmann::json(std::string(to_string(*f.gender))) : nlohmann::json(nullptr);
  return j;
}

/// Checks every template against `languages`: one female and one male variant
/// per language, and identical placeholder multisets across the variants.
inline ValidationReport validate_parallel(const TemplateSet& set, const std::vector<std::string>& languages) {
  ValidationReport report;
  std::set<std::string> ids;
  for (const auto& t : set.templates) {
    if (!ids.insert(t.template_id).second)
      report.findings.push_back({t.template_id, FindingKind::duplicate_template_id, "", std::nullopt,
                                 "template_id appears more than once"});
    for (const auto& lang : languages) {
      for (Gender g : kAllGenders) {
        ++report.variant_checks;
        auto n = std::count_if(t.variants.begin(), t.variants.end(),
                               [&](const TemplateVariant& v) { return v.language == lang && v.gender == g; });
        if (n == 0)
          report.findings.push_back({t.template_id, FindingKind::missing_variant, lang, g, "variant missing"});
        else if (n > 1)
          report.findings.push_back({t.template_id, FindingKind::duplicate_variant, lang, g,
                                     std::to_string(n) + " variants present"});
      }
    }
    std::optional<std::vector<Role>> reference;
    if (t.attribute == Attribute::gender) reference = std::vector<Role>{};
    for (const auto& v : t.variants) {
      if (std::find(languages.begin(), languages.end(), v.language) == languages.end()) continue;
      auto roles = placeholder_roles(v.text);
      if (!reference) {
        reference = roles;
      } else if (roles != *reference) {
        report.findings.push_back({t.template_id, FindingKind::placeholder_mismatch, v.language, v.gender,
                                   "placeholders " + detail::role_multiset_string(roles) + ", expected " +
                                       detail::role_multiset_string(*reference)});
      }
    }
  }
  return report;
}

}  // namespace biasprobe
