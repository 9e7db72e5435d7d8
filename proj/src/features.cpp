// SPDX-License-Identifier: Apache-2.0
#include "odar/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "odar/errors.hpp"
#include "odar/text.hpp"

namespace odar {

namespace {

const std::vector<std::string>& subordinating_conjunctions() {
  static const std::vector<std::string> kTerms = {
      "because", "although", "which", "that", "since", "while", "if", "when"};
  return kTerms;
}

const std::vector<std::string>& interrogative_leads() {
  static const std::vector<std::string> kTerms = {
      "what", "why",  "how",  "when",    "where",    "who",     "whom",
      "which", "is",  "are",  "do",      "does",     "can",     "could",
      "should", "would", "explain", "describe", "discuss", "define"};
  return kTerms;
}

const std::vector<std::string>& proof_keywords() {
  static const std::vector<std::string> kTerms = {
      "prove", "proof", "derive", "derivation", "show that", "demonstrate that"};
  return kTerms;
}

std::vector<std::string> sentences_of(const std::string& s) {
  std::vector<std::string> out;
  std::vector<char32_t> cps = text::decode_utf8(s);
  std::vector<char32_t> current;
  auto flush = [&] {
    std::string seg = text::trim(text::encode_utf8(current));
    if (!seg.empty()) out.push_back(seg);
    current.clear();
  };
  for (char32_t cp : cps) {
    if (cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x2026) {
      flush();
    } else {
      current.push_back(cp);
    }
  }
  flush();
  return out;
}

// $...$ spans and \commands become a placeholder word so syllable counting
// does not chew on math markup.
std::string replace_latex(const std::string& s) {
  static const std::string kPlaceholder = "expr";
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '$') {
      std::size_t close = s.find('$', i + 1);
      if (close != std::string::npos) {
        out += kPlaceholder;
        i = close + 1;
        continue;
      }
    }
    if (c == '\\' && i + 1 < s.size() && std::isalpha(static_cast<unsigned char>(s[i + 1]))) {
      i += 1;
      while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
      out += kPlaceholder;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

int syllables_in_word(const std::string& word) {
  std::string letters;
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (letters.empty()) return 1;
  int groups = 0;
  bool in_group = false;
  for (char c : letters) {
    if (is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }
  if (groups > 1 && letters.size() > 2 && letters.back() == 'e' &&
      !is_vowel(letters[letters.size() - 2])) {
    --groups;  // silent trailing e
  }
  return std::max(groups, 1);
}

// max nesting depth of (), [], {}; unmatched closers are ignored
int bracket_depth(const std::string& s) {
  int depth = 0;
  int max_depth = 0;
  for (char c : s) {
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
      max_depth = std::max(max_depth, depth);
    } else if (c == ')' || c == ']' || c == '}') {
      depth = std::max(depth - 1, 0);
    }
  }
  return max_depth;
}

int max_commas_per_sentence(const std::string& s) {
  int best = 0;
  for (const auto& sentence : sentences_of(s)) {
    int commas = static_cast<int>(std::count(sentence.begin(), sentence.end(), ','));
    best = std::max(best, commas);
  }
  return best;
}

bool matches_math_symbol(const std::string& nfc_text,
                         const std::string& symbol) {
  if (symbol.empty()) return false;
  if (symbol[0] == '\\') {
    // LaTeX command: literal backslash + name, name must end at a non-letter
    std::size_t pos = 0;
    while ((pos = nfc_text.find(symbol, pos)) != std::string::npos) {
      std::size_t after = pos + symbol.size();
      if (after >= nfc_text.size() ||
          !std::isalpha(static_cast<unsigned char>(nfc_text[after]))) {
        return true;
      }
      pos += 1;
    }
    return false;
  }
  return nfc_text.find(symbol) != std::string::npos;
}

bool detect_multiple_choice(const std::string& folded) {
  // enumerated options: at least two of (a)..(e), a)..e) or "A." style heads
  int found_mask = 0;
  std::vector<char32_t> cps = text::decode_utf8(folded);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t c = cps[i];
    if (c < U'a' || c > U'e') continue;
    int bit = 1 << (c - U'a');
    bool head = i == 0 || !text::is_word_char(cps[i - 1]);
    bool paren_open = i > 0 && cps[i - 1] == U'(';
    if (i + 1 < cps.size()) {
      char32_t next = cps[i + 1];
      if (paren_open && next == U')') found_mask |= bit;
      else if (head && (next == U')' || next == U'.') &&
               (i + 2 >= cps.size() || text::is_space(cps[i + 2]) || cps[i + 2] == U'\n'))
        found_mask |= bit;
    }
  }
  int count = 0;
  for (int b = 0; b < 5; ++b) count += (found_mask >> b) & 1;
  return count >= 2;
}

bool starts_with_interrogative(const std::string& folded) {
  auto words = text::split_words(folded);
  if (words.empty()) return false;
  std::string first;
  for (char c : words[0]) {
    if (std::isalpha(static_cast<unsigned char>(c))) first.push_back(c);
  }
  const auto& leads = interrogative_leads();
  return std::find(leads.begin(), leads.end(), first) != leads.end();
}

}  // namespace

double readability_grade(const std::string& raw) {
  std::string prepared = replace_latex(raw);
  auto sentences = sentences_of(prepared);
  auto words = text::split_words(prepared);
  double n_sentences = std::max<std::size_t>(sentences.size(), 1);
  double n_words = std::max<std::size_t>(words.size(), 1);
  double n_syllables = 0;
  for (const auto& w : words) n_syllables += syllables_in_word(w);
  n_syllables = std::max(n_syllables, 1.0);
  double grade = 0.39 * (n_words / n_sentences) + 11.8 * (n_syllables / n_words) - 15.59;
  return std::clamp(grade, 0.0, 20.0);
}

double difficulty_density(const QueryInput& q,
                          const std::vector<std::string>& markers) {
  std::string nfc_text = text::nfc(text::trim(q.text));
  auto words = text::split_words(nfc_text);
  if (words.empty()) throw ValidationError("difficulty_density on zero-word input");
  std::string folded = text::casefold(nfc_text);
  std::size_t present = 0;
  for (const auto& marker : markers) {
    if (text::contains_phrase(folded, marker)) ++present;
  }
  double density = static_cast<double>(present) / static_cast<double>(words.size());
  return std::clamp(density, 0.0, 1.0);
}

DomainScores domain_scores(const QueryInput& q, const VocabularyPack& v) {
  v.validate();
  std::string folded = text::casefold(text::nfc(text::trim(q.text)));
  DomainScores ds;
  auto sum_matched = [&](const std::map<std::string, double>& vocab) {
    double total = 0.0;
    for (const auto& [term, weight] : vocab) {
      if (text::contains_phrase(folded, term)) total += weight;
    }
    return total;
  };
  ds.math = sum_matched(v.math_vocab);
  ds.code = sum_matched(v.code_vocab);
  ds.logic = sum_matched(v.logic_vocab);

  // softmax over (math, code, logic, 0) at temperature 1
  double m = std::max({ds.math, ds.code, ds.logic, 0.0});
  double em = std::exp(ds.math - m);
  double ec = std::exp(ds.code - m);
  double el = std::exp(ds.logic - m);
  double eo = std::exp(0.0 - m);
  double z = em + ec + el + eo;
  ds.p_math = em / z;
  ds.p_code = ec / z;
  ds.p_logic = el / z;
  return ds;
}

FeatureVector extract_features(const QueryInput& q, const VocabularyPack& v) {
  v.validate();
  std::string trimmed = text::trim(q.text);
  if (trimmed.empty()) throw ValidationError("query text is empty");
  std::string nfc_text = text::nfc(trimmed);
  std::string folded = text::casefold(nfc_text);

  auto cps = text::decode_utf8(nfc_text);
  auto words = text::split_words(nfc_text);
  auto sentences = sentences_of(nfc_text);

  FeatureVector f{};

  f[feat::kCharLen] = static_cast<double>(cps.size());
  f[feat::kWordCount] = static_cast<double>(words.size());
  f[feat::kTokenCount] = std::ceil(static_cast<double>(cps.size()) / 4.0);

  double max_len = 0;
  double total_len = 0;
  for (const auto& w : words) {
    double len = static_cast<double>(text::count_codepoints(w));
    total_len += len;
    max_len = std::max(max_len, len);
  }
  f[feat::kAvgWordLen] = words.empty() ? 0.0 : total_len / static_cast<double>(words.size());
  f[feat::kMaxWordLen] = max_len;
  f[feat::kReadability] = readability_grade(nfc_text);

  bool has_digit = std::any_of(cps.begin(), cps.end(), [](char32_t c) {
    return c >= U'0' && c <= U'9';
  });
  f[feat::kHasDigit] = has_digit ? 1.0 : 0.0;

  bool has_math = std::any_of(
      v.math_symbols.begin(), v.math_symbols.end(),
      [&](const std::string& sym) { return matches_math_symbol(nfc_text, sym); });
  f[feat::kHasMathSymbol] = has_math ? 1.0 : 0.0;

  f[feat::kSentenceCount] =
      static_cast<double>(std::max<std::size_t>(sentences.size(), 1));

  double clause_count = 0;
  for (const auto& term : subordinating_conjunctions()) {
    clause_count += static_cast<double>(text::count_phrase(folded, term));
  }
  f[feat::kClauseCount] = clause_count;

  f[feat::kQuestionMarks] = static_cast<double>(
      std::count(cps.begin(), cps.end(), static_cast<char32_t>(U'?')));
  f[feat::kHasImage] = q.has_image ? 1.0 : 0.0;
  f[feat::kParseDepth] =
      static_cast<double>(bracket_depth(nfc_text) + max_commas_per_sentence(nfc_text));

  double connectives = 0;
  for (const auto& term : v.logical_connectives) {
    connectives += static_cast<double>(text::count_phrase(folded, term));
  }
  f[feat::kConnectiveCount] = connectives;

  DomainScores ds = domain_scores(q, v);
  f[feat::kTfidfMath] = ds.math;
  f[feat::kTfidfCode] = ds.code;
  f[feat::kTfidfLogic] = ds.logic;
  f[feat::kDifficultyDensity] = difficulty_density(q, v.difficulty_markers);

  bool multiple_choice = detect_multiple_choice(folded);
  f[feat::kIsMultipleChoice] = multiple_choice ? 1.0 : 0.0;
  f[feat::kIsOpenEnded] =
      (!multiple_choice && starts_with_interrogative(folded)) ? 1.0 : 0.0;
  bool proof = std::any_of(
      proof_keywords().begin(), proof_keywords().end(),
      [&](const std::string& kw) { return text::contains_phrase(folded, kw); });
  f[feat::kIsProofRequest] = proof ? 1.0 : 0.0;

  f[feat::kDomainMath] = ds.p_math;
  f[feat::kDomainCode] = ds.p_code;
  f[feat::kDomainLogic] = ds.p_logic;

  return f;
}

}  // namespace odar
