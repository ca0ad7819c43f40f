#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "biasprobe/error.hpp"

namespace biasprobe {

enum class Attribute { gender, race, religion, nationality };
enum class Gender { female, male };
enum class Label { positive, negative, neutral };
enum class Role { adj, noun };

inline constexpr std::array<Attribute, 4> kAllAttributes = {
    Attribute::gender, Attribute::race, Attribute::religion, Attribute::nationality};
inline constexpr std::array<Gender, 2> kAllGenders = {Gender::female, Gender::male};

constexpr std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::gender: return "gender";
    case Attribute::race: return "race";
    case Attribute::religion: return "religion";
    case Attribute::nationality: return "nationality";
  }
  return "";
}

constexpr std::string_view to_string(Gender g) {
  return g == Gender::female ? "female" : "male";
}

constexpr std::string_view to_string(Label l) {
  switch (l) {
    case Label::positive: return "positive";
    case Label::negative: return "negative";
    case Label::neutral: return "neutral";
  }
  return "";
}

constexpr std::string_view to_string(Role r) { return r == Role::adj ? "adj" : "noun"; }

inline std::optional<Attribute> try_parse_attribute(std::string_view s) {
  for (Attribute a : kAllAttributes)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

inline Attribute parse_attribute(std::string_view s) {
  if (auto a = try_parse_attribute(s)) return *a;
  throw Error(ErrorCode::UnknownAttribute, "unknown attribute '" + std::string(s) + "'");
}

inline std::optional<Gender> try_parse_gender(std::string_view s) {
  if (s == "female") return Gender::female;
  if (s == "male") return Gender::male;
  return std::nullopt;
}

inline std::optional<Label> try_parse_label(std::string_view s) {
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  if (s == "neutral") return Label::neutral;
  return std::nullopt;
}

inline std::optional<Role> try_parse_role(std::string_view s) {
  if (s == "adj") return Role::adj;
  if (s == "noun") return Role::noun;
  return std::nullopt;
}

constexpr std::string_view gender_letter(Gender g) { return g == Gender::female ? "F" : "M"; }

}  // namespace biasprobe
