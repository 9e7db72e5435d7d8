// SPDX-License-Identifier: Apache-2.0
#include "odar/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace odar::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// (base, combining mark) -> precomposed. Covers the diacritics that show up
// in western-European text; anything else is passed through undecomposed.
struct Composition {
  char32_t base;
  char32_t mark;
  char32_t composed;
};

constexpr Composition kCompositions[] = {
    // U+0300 combining grave
    {U'A', 0x300, 0x00C0}, {U'E', 0x300, 0x00C8}, {U'I', 0x300, 0x00CC},
    {U'O', 0x300, 0x00D2}, {U'U', 0x300, 0x00D9}, {U'a', 0x300, 0x00E0},
    {U'e', 0x300, 0x00E8}, {U'i', 0x300, 0x00EC}, {U'o', 0x300, 0x00F2},
    {U'u', 0x300, 0x00F9},
    // U+0301 combining acute
    {U'A', 0x301, 0x00C1}, {U'E', 0x301, 0x00C9}, {U'I', 0x301, 0x00CD},
    {U'O', 0x301, 0x00D3}, {U'U', 0x301, 0x00DA}, {U'Y', 0x301, 0x00DD},
    {U'a', 0x301, 0x00E1}, {U'e', 0x301, 0x00E9}, {U'i', 0x301, 0x00ED},
    {U'o', 0x301, 0x00F3}, {U'u', 0x301, 0x00FA}, {U'y', 0x301, 0x00FD},
    {U'C', 0x301, 0x0106}, {U'c', 0x301, 0x0107}, {U'N', 0x301, 0x0143},
    {U'n', 0x301, 0x0144}, {U'S', 0x301, 0x015A}, {U's', 0x301, 0x015B},
    {U'Z', 0x301, 0x0179}, {U'z', 0x301, 0x017A},
    // U+0302 combining circumflex
    {U'A', 0x302, 0x00C2}, {U'E', 0x302, 0x00CA}, {U'I', 0x302, 0x00CE},
    {U'O', 0x302, 0x00D4}, {U'U', 0x302, 0x00DB}, {U'a', 0x302, 0x00E2},
    {U'e', 0x302, 0x00EA}, {U'i', 0x302, 0x00EE}, {U'o', 0x302, 0x00F4},
    {U'u', 0x302, 0x00FB},
    // U+0303 combining tilde
    {U'A', 0x303, 0x00C3}, {U'N', 0x303, 0x00D1}, {U'O', 0x303, 0x00D5},
    {U'a', 0x303, 0x00E3}, {U'n', 0x303, 0x00F1}, {U'o', 0x303, 0x00F5},
    // U+0304 combining macron
    {U'A', 0x304, 0x0100}, {U'a', 0x304, 0x0101}, {U'E', 0x304, 0x0112},
    {U'e', 0x304, 0x0113}, {U'I', 0x304, 0x012A}, {U'i', 0x304, 0x012B},
    {U'O', 0x304, 0x014C}, {U'o', 0x304, 0x014D}, {U'U', 0x304, 0x016A},
    {U'u', 0x304, 0x016B},
    // U+0307 combining dot above
    {U'Z', 0x307, 0x017B}, {U'z', 0x307, 0x017C},
    // U+0308 combining diaeresis
    {U'A', 0x308, 0x00C4}, {U'E', 0x308, 0x00CB}, {U'I', 0x308, 0x00CF},
    {U'O', 0x308, 0x00D6}, {U'U', 0x308, 0x00DC}, {U'a', 0x308, 0x00E4},
    {U'e', 0x308, 0x00EB}, {U'i', 0x308, 0x00EF}, {U'o', 0x308, 0x00F6},
    {U'u', 0x308, 0x00FC}, {U'y', 0x308, 0x00FF},
    // U+030A combining ring above
    {U'A', 0x30A, 0x00C5}, {U'a', 0x30A, 0x00E5},
    // U+030C combining caron
    {U'C', 0x30C, 0x010C}, {U'c', 0x30C, 0x010D}, {U'S', 0x30C, 0x0160},
    {U's', 0x30C, 0x0161}, {U'Z', 0x30C, 0x017D}, {U'z', 0x30C, 0x017E},
    // U+0327 combining cedilla
    {U'C', 0x327, 0x00C7}, {U'c', 0x327, 0x00E7},
};

char32_t compose(char32_t base, char32_t mark) {
  for (const auto& c : kCompositions) {
    if (c.base == base && c.mark == mark) return c.composed;
  }
  return 0;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp <= 0x7F) {
    out.push_back(static_cast<char>(cp));
  } else if (cp <= 0x7FF) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp <= 0xFFFF) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::vector<char32_t> decode_utf8(const std::string& s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto* bytes = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    unsigned char b = bytes[i];
    char32_t cp = 0;
    std::size_t len = 0;
    if (b < 0x80) {
      cp = b;
      len = 1;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      len = 2;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      len = 3;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      len = 4;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cont = bytes[i + k];
      if ((cont & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    // reject overlong encodings and surrogates
    if (ok) {
      if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
          (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
          (cp >= 0xD800 && cp <= 0xDFFF)) {
        ok = false;
      }
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::size_t count_codepoints(const std::string& s) {
  return decode_utf8(s).size();
}

std::string nfc(const std::string& s) {
  std::vector<char32_t> cps = decode_utf8(s);
  std::vector<char32_t> out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (!out.empty() && cp >= 0x0300 && cp <= 0x036F) {
      if (char32_t composed = compose(out.back(), cp)) {
        out.back() = composed;
        continue;
      }
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

namespace {

char32_t lower_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  // Latin-1 Supplement uppercase block, skipping the multiplication sign
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  // Latin Extended-A alternates upper/lower
  if (cp >= 0x0100 && cp <= 0x017F) {
    if (cp == 0x0178) return 0x00FF;
    if ((cp & 1) == 0) return cp + 1;
  }
  // Greek and Cyrillic basic blocks
  if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 32;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;
  return cp;
}

}  // namespace

std::string casefold(const std::string& s) {
  std::vector<char32_t> cps = decode_utf8(s);
  for (auto& cp : cps) cp = lower_cp(cp);
  return encode_utf8(cps);
}

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_word_char(char32_t cp) {
  if ((cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
      (cp >= U'A' && cp <= U'Z')) {
    return true;
  }
  if (cp < 0x80) return false;
  // broad letter ranges; symbols/punctuation blocks excluded
  if (cp >= 0x00C0 && cp <= 0x024F) return cp != 0x00D7 && cp != 0x00F7;
  if (cp >= 0x0370 && cp <= 0x03FF) return true;   // Greek
  if (cp >= 0x0400 && cp <= 0x04FF) return true;   // Cyrillic
  if (cp >= 0x0590 && cp <= 0x06FF) return true;   // Hebrew, Arabic
  if (cp >= 0x0900 && cp <= 0x0DFF) return true;   // Indic
  if (cp >= 0x3040 && cp <= 0x30FF) return true;   // kana
  if (cp >= 0x4E00 && cp <= 0x9FFF) return true;   // CJK unified
  if (cp >= 0xAC00 && cp <= 0xD7AF) return true;   // Hangul
  return false;
}

std::string trim(const std::string& s) {
  std::vector<char32_t> cps = decode_utf8(s);
  std::size_t begin = 0;
  std::size_t end = cps.size();
  while (begin < end && is_space(cps[begin])) ++begin;
  while (end > begin && is_space(cps[end - 1])) --end;
  return encode_utf8({cps.begin() + static_cast<std::ptrdiff_t>(begin),
                      cps.begin() + static_cast<std::ptrdiff_t>(end)});
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> words;
  std::vector<char32_t> cps = decode_utf8(s);
  std::vector<char32_t> current;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      if (!current.empty()) {
        words.push_back(encode_utf8(current));
        current.clear();
      }
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) words.push_back(encode_utf8(current));
  return words;
}

namespace {

// Boundary scan over decoded code points so multi-byte neighbours are
// classified correctly.
std::size_t count_phrase_impl(const std::vector<char32_t>& hay,
                              const std::vector<char32_t>& needle,
                              bool stop_at_first) {
  if (needle.empty() || needle.size() > hay.size()) return 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (hay[i + k] != needle[k]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    bool left_ok = i == 0 || !is_word_char(hay[i - 1]) || !is_word_char(needle.front());
    std::size_t after = i + needle.size();
    bool right_ok = after == hay.size() || !is_word_char(hay[after]) ||
                    !is_word_char(needle.back());
    if (left_ok && right_ok) {
      ++count;
      if (stop_at_first) return count;
      i = after - 1;
    }
  }
  return count;
}

}  // namespace

bool contains_phrase(const std::string& haystack, const std::string& phrase) {
  return count_phrase_impl(decode_utf8(haystack), decode_utf8(phrase), true) > 0;
}

std::size_t count_phrase(const std::string& haystack, const std::string& phrase) {
  return count_phrase_impl(decode_utf8(haystack), decode_utf8(phrase), false);
}

std::string normalize_answer(const std::string& s) {
  std::vector<char32_t> cps = decode_utf8(nfc(trim(s)));
  std::vector<char32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(lower_cp(cp));
  }
  return encode_utf8(out);
}

}  // namespace odar::text
