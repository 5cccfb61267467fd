#pragma once

// Minimal UTF-8 handling: code point decoding and the handful of Unicode
// character classes the tokenizer and perturbation rules need.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

/// Number of code points, the unit used for context budgets.
std::size_t length(std::string_view utf8);

bool is_space(char32_t cp);
/// Unicode general category P* (connector, dash, open/close, quotes, other).
bool is_punct(char32_t cp);
bool is_han(char32_t cp);
/// Han ideographs plus CJK symbols/punctuation and fullwidth forms; these are
/// segmented one code point per token in Chinese text.
bool is_cjk_unit(char32_t cp);

/// Lowercases ASCII and the Latin-1 / Latin Extended-A letters used by es.
std::string lower(std::string_view utf8);
std::string strip_punct(std::string_view utf8);
std::string trim(std::string_view s);

}  // namespace dialeval::text
