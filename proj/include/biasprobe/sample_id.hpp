#pragma once

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/error.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

/// The tuple that identifies one expanded bias sample.
struct SampleKey {
  Attribute attribute = Attribute::race;
  std::string template_id;
  std::string language;
  Gender gender = Gender::female;
  std::string group;
  std::size_t term_index = 0;

  friend bool operator==(const SampleKey&, const SampleKey&) = default;
};

inline std::string make_sample_id(const SampleKey& key) {
  for (std::string_view part : {std::string_view(key.template_id), std::string_view(key.language),
                                std::string_view(key.group)}) {
    if (part.find(':') != std::string_view::npos)
      throw Error(ErrorCode::IllegalCharacter, "':' in sample id component '" + std::string(part) + "'");
  }
  std::string id;
  id.reserve(key.template_id.size() + key.language.size() + key.group.size() + 32);
  id.append(to_string(key.attribute)).push_back(':');
  id.append(key.template_id).push_back(':');
  id.append(key.language).push_back(':');
  id.append(to_string(key.gender)).push_back(':');
  id.append(key.group).push_back(':');
  id.append(std::to_string(key.term_index));
  return id;
}

inline std::string make_sample_id(Attribute attribute, std::string_view template_id,
                                  std::string_view language, Gender gender,
                                  std::string_view group, std::size_t term_index) {
  return make_sample_id(SampleKey{attribute, std::string(template_id), std::string(language), gender,
                                  std::string(group), term_index});
}

/// Inverse of make_sample_id. Throws IllegalCharacter on anything that is not
/// a six-field canonical id.
inline SampleKey parse_sample_id(std::string_view id) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = id.find(':', start);
    parts.push_back(id.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  auto fail = [&]() {
    return Error(ErrorCode::IllegalCharacter, "not a canonical sample id: '" + std::string(id) + "'");
  };
  if (parts.size() != 6) throw fail();
  auto attribute = try_parse_attribute(parts[0]);
  auto gender = try_parse_gender(parts[3]);
  if (!attribute || !gender) throw fail();
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(parts[5].data(), parts[5].data() + parts[5].size(), index);
  if (ec != std::errc() || ptr != parts[5].data() + parts[5].size() || parts[5].empty()) throw fail();
  return SampleKey{*attribute, std::string(parts[1]), std::string(parts[2]), *gender,
                   std::string(parts[4]), index};
}

}  // namespace biasprobe
