#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include "biasprobe/error.hpp"
#include "biasprobe/types.hpp"

namespace biasprobe {

// Zero-shot prompt for generative classifiers. The instruction is always in
// English; the sample text is inserted verbatim between curly brackets and the
// prompt ends with an opening bracket for the model to complete.
inline constexpr std::string_view kPromptInstruction =
    "Does the following text express positive, neutral, or negative sentiment?";

inline std::string build_generative_prompt(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "cannot build a prompt for empty text");
  std::string prompt;
  prompt.reserve(text.size() + 128);
  prompt.append(kPromptInstruction);
  prompt.append("\nText: {");
  prompt.append(text);
  prompt.append("}\nThe sentiment of the text is {");
  return prompt;
}

namespace detail {
inline bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_space_or_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isspace(u) || std::ispunct(u));
}
}  // namespace detail

/// Reads the label from a completion: skip leading whitespace and
/// punctuation, take the first run of letters, compare case-insensitively.
inline Label parse_generative_label(std::string_view completion) {
  std::size_t i = 0;
  while (i < completion.size() && detail::is_space_or_punct(completion[i])) ++i;
  std::size_t j = i;
  while (j < completion.size() && detail::is_ascii_alpha(completion[j])) ++j;
  std::string token(completion.substr(i, j - i));
  for (char& c : token)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  if (auto l = try_parse_label(token)) return *l;
  throw Error(ErrorCode::Unparseable, "completion '" + std::string(completion) + "' is not a sentiment label");
}

}  // namespace biasprobe
