#pragma once

// Unicode helpers shared by tokenization, case-folded comparisons and
// corpus loading. All strings are UTF-8.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scanalign::text {

/// Returns the byte offset of the first invalid sequence, or nullopt when
/// the whole buffer is well-formed UTF-8.
std::optional<std::size_t> find_invalid_utf8(std::string_view s);

inline bool is_valid_utf8(std::string_view s) { return !find_invalid_utf8(s); }

/// Canonical composition (NFC). Input must be valid UTF-8.
std::string nfc(std::string_view s);

/// Full Unicode case folding.
std::string fold_case(std::string_view s);

/// Decodes one code point starting at `pos`; advances `pos` past it. Input is
/// assumed valid (callers validate at the corpus boundary).
char32_t next_codepoint(std::string_view s, std::size_t& pos);

bool is_alpha(char32_t c);
bool is_digit(char32_t c);
bool is_space(char32_t c);
bool is_upper(char32_t c);

/// Apostrophes that may sit inside a word ("isn't", "o’clock").
inline bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

/// Characters that open a quotation.
inline bool is_opening_quote(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'`' || c == U'“' || c == U'‘' ||
         c == U'«';
}

/// Number of code points.
std::size_t codepoint_length(std::string_view s);

}  // namespace scanalign::text
