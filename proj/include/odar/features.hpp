// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <set>
#include <string>

#include "odar/vocab.hpp"

namespace odar {

struct QueryInput {
  std::string text;
  bool has_image = false;
};

// phi(x): 24 features, grouped lexical (0..7), structural (8..13) and
// semantic (14..23). Indices are zero-based; the named constants below give
// the layout.
using FeatureVector = std::array<double, 24>;

namespace feat {
inline constexpr int kCharLen = 0;          // character count
inline constexpr int kWordCount = 1;        // whitespace tokens
inline constexpr int kTokenCount = 2;       // ceil(chars / 4) approximation
inline constexpr int kAvgWordLen = 3;
inline constexpr int kMaxWordLen = 4;
inline constexpr int kReadability = 5;      // Flesch-Kincaid grade, [0, 20]
inline constexpr int kHasDigit = 6;
inline constexpr int kHasMathSymbol = 7;
inline constexpr int kSentenceCount = 8;
inline constexpr int kClauseCount = 9;      // subordinating conjunctions
inline constexpr int kQuestionMarks = 10;
inline constexpr int kHasImage = 11;
inline constexpr int kParseDepth = 12;      // bracket nesting + comma depth
inline constexpr int kConnectiveCount = 13;
inline constexpr int kTfidfMath = 14;
inline constexpr int kTfidfCode = 15;
inline constexpr int kTfidfLogic = 16;
inline constexpr int kDifficultyDensity = 17;
inline constexpr int kIsMultipleChoice = 18;
inline constexpr int kIsOpenEnded = 19;
inline constexpr int kIsProofRequest = 20;
inline constexpr int kDomainMath = 21;      // softmax over domain scores
inline constexpr int kDomainCode = 22;
inline constexpr int kDomainLogic = 23;
}  // namespace feat

struct DomainScores {
  double math = 0.0;   // raw summed idf weights over matched terms
  double code = 0.0;
  double logic = 0.0;
  // softmax of (math, code, logic, 0); the implicit zero logit absorbs the
  // "everything else" mass so the three probabilities sum to < 1.
  double p_math = 0.25;
  double p_code = 0.25;
  double p_logic = 0.25;
};

// Extracts all 24 features. Pure and deterministic: identical inputs give
// bit-identical outputs. Throws ValidationError on whitespace-only text and
// PackError if the pack fails validation.
FeatureVector extract_features(const QueryInput& q, const VocabularyPack& v);

// |{marker phrases present}| / word count, clamped to [0, 1]. Matching is
// case-insensitive on word boundaries after NFC normalization.
double difficulty_density(const QueryInput& q,
                          const std::vector<std::string>& markers);

DomainScores domain_scores(const QueryInput& q, const VocabularyPack& v);

// Flesch-Kincaid grade with vowel-group syllable counting; LaTeX spans are
// replaced by a placeholder word before counting. Clamped to [0, 20].
double readability_grade(const std::string& text);

}  // namespace odar
