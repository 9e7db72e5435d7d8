// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace odar::text {

// Decodes UTF-8 into Unicode scalar values. Invalid byte sequences decode to
// U+FFFD, one replacement per rejected byte, so the mapping is total and
// deterministic.
std::vector<char32_t> decode_utf8(const std::string& s);

std::string encode_utf8(const std::vector<char32_t>& cps);

// Number of Unicode scalar values in s.
std::size_t count_codepoints(const std::string& s);

// Canonical composition for the common Latin/Greek combining-mark pairs
// (U+0300..U+0327 on ASCII bases). Precomposed input passes through
// unchanged; scripts outside the table are left as-is. Full NFC would need
// the Unicode composition tables (ICU/utf8proc); this subset keeps matching
// and character counts stable for the inputs this system sees.
std::string nfc(const std::string& s);

// Lower-cases ASCII plus Latin-1/Latin-Extended-A letters.
std::string casefold(const std::string& s);

bool is_space(char32_t cp);

// Letters and digits count as word characters for boundary checks; broad
// letter ranges (Latin, Greek, Cyrillic, CJK, kana) are included.
bool is_word_char(char32_t cp);

std::string trim(const std::string& s);

// Whitespace-separated tokens of s (Unicode whitespace).
std::vector<std::string> split_words(const std::string& s);

// True if `phrase` occurs in `haystack` delimited by non-word characters on
// both sides. Both inputs are expected pre-folded/normalized by the caller.
bool contains_phrase(const std::string& haystack, const std::string& phrase);

// Number of boundary-delimited occurrences of `phrase` in `haystack`.
std::size_t count_phrase(const std::string& haystack, const std::string& phrase);

// trim + NFC + collapse internal whitespace runs to one space + casefold;
// the canonical form used for answer-equality checks.
std::string normalize_answer(const std::string& s);

}  // namespace odar::text
