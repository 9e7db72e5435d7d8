// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "odar/errors.hpp"
#include "odar/features.hpp"
#include "odar/text.hpp"

using namespace odar;

namespace {

VocabularyPack shipped_pack() {
  static VocabularyPack pack =
      VocabularyPack::load(std::string(ODAR_SOURCE_DIR) + "/data/vocab_pack.json");
  return pack;
}

VocabularyPack tiny_pack() {
  VocabularyPack p;
  p.schema_version = "test";
  p.math_vocab = {{"integral", 3.0}};
  p.code_vocab = {{"algorithm", 2.0}};
  p.logic_vocab = {{"premise", 1.5}};
  p.difficulty_markers = {"prove", "derive"};
  p.logical_connectives = {"if", "then", "therefore"};
  p.math_symbols = {"\xE2\x88\xAB", "+", "\\int"};  // ∫, +, \int
  return p;
}

}  // namespace

TEST_CASE("shipped pack loads with the documented set sizes") {
  VocabularyPack p = shipped_pack();
  CHECK(p.math_vocab.size() == 87);
  CHECK(p.code_vocab.size() == 92);
  CHECK(p.logic_vocab.size() == 73);
  CHECK(p.difficulty_markers.size() == 47);
  CHECK(p.logical_connectives.size() == 12);
}

TEST_CASE("pack validation rejects malformed packs") {
  CHECK_THROWS_AS(VocabularyPack::from_json_text("{"), PackError);
  CHECK_THROWS_AS(VocabularyPack::from_json_text("{\"schema_version\":\"1\"}"),
                  PackError);
  // non-positive weight
  std::string bad = R"({"schema_version":"1",
    "math_vocab":{"theorem":0.0},"code_vocab":{"loop":1.0},
    "logic_vocab":{"premise":1.0},
    "difficulty_markers":["prove"],"logical_connectives":["if"],
    "math_symbols":["+"]})";
  CHECK_THROWS_AS(VocabularyPack::from_json_text(bad), PackError);
}

TEST_CASE("word and question-mark counts on a plain question") {
  FeatureVector f =
      extract_features({"Is Paris the capital of France?", false}, tiny_pack());
  CHECK(f[feat::kWordCount] == 6.0);
  CHECK(f[feat::kQuestionMarks] == 1.0);
  CHECK(f[feat::kHasDigit] == 0.0);
  CHECK(f[feat::kHasMathSymbol] == 0.0);
  CHECK(f[feat::kIsOpenEnded] == 1.0);  // leads with "Is", no options
}

TEST_CASE("math symbol indicator fires on symbols and latex commands") {
  CHECK(extract_features({"\xE2\x88\xAB x dx", false}, tiny_pack())[feat::kHasMathSymbol] == 1.0);
  CHECK(extract_features({"2+2", false}, tiny_pack())[feat::kHasMathSymbol] == 1.0);
  CHECK(extract_features({"evaluate \\int_0^1 f", false}, tiny_pack())[feat::kHasMathSymbol] == 1.0);
  // \integral is a different command than \int, but "integral" alone is none
  CHECK(extract_features({"the integral of f", false}, tiny_pack())[feat::kHasMathSymbol] == 0.0);
}

TEST_CASE("difficulty density matches hand counts") {
  VocabularyPack p = tiny_pack();
  CHECK(difficulty_density({"prove and derive the bound", false},
                           p.difficulty_markers) == doctest::Approx(0.4));
  CHECK(difficulty_density({"a plain question", false}, p.difficulty_markers) == 0.0);
  CHECK(difficulty_density({"prove", false}, p.difficulty_markers) == 1.0);
  CHECK_THROWS_AS(difficulty_density({"   ", false}, p.difficulty_markers),
                  ValidationError);
}

TEST_CASE("density counts distinct markers, case-insensitively") {
  VocabularyPack p = tiny_pack();
  // "Prove prove PROVE" is one distinct marker over three words
  CHECK(difficulty_density({"Prove prove PROVE", false}, p.difficulty_markers) ==
        doctest::Approx(1.0 / 3.0));
}

TEST_CASE("domain scores: no match gives uniform quarter softmax") {
  DomainScores ds = domain_scores({"hello there world", false}, tiny_pack());
  CHECK(ds.math == 0.0);
  CHECK(ds.code == 0.0);
  CHECK(ds.logic == 0.0);
  CHECK(ds.p_math == doctest::Approx(0.25));
  CHECK(ds.p_code == doctest::Approx(0.25));
  CHECK(ds.p_logic == doctest::Approx(0.25));
}

TEST_CASE("domain scores: matched weights sum and softmax normalizes") {
  DomainScores ds = domain_scores({"compute the integral now", false}, tiny_pack());
  CHECK(ds.math == doctest::Approx(3.0));
  CHECK(ds.code == 0.0);
  CHECK(ds.logic == 0.0);
  double other = std::exp(0.0 - 3.0) /
                 (std::exp(0.0) + 2.0 * std::exp(-3.0) + std::exp(-3.0));
  // probabilities plus the implicit other logit sum to exactly 1
  double z = std::exp(3.0) + 3.0;  // e^3 + e^0 + e^0 + e^0
  CHECK(ds.p_math == doctest::Approx(std::exp(3.0) / z));
  CHECK(ds.p_math + ds.p_code + ds.p_logic + (1.0 - ds.p_math - ds.p_code - ds.p_logic) ==
        doctest::Approx(1.0));
  CHECK(ds.p_math + ds.p_code + ds.p_logic <= 1.0);
  (void)other;
}

TEST_CASE("question type indicators") {
  VocabularyPack p = tiny_pack();
  CHECK(extract_features({"Pick one: (A) apples (B) pears", false}, p)[feat::kIsMultipleChoice] == 1.0);
  CHECK(extract_features({"What is the answer?", false}, p)[feat::kIsMultipleChoice] == 0.0);
  // enumerated options suppress the open-ended flag
  FeatureVector mc = extract_features({"Which holds: (A) x>0 (B) x<0", false}, p);
  CHECK(mc[feat::kIsMultipleChoice] == 1.0);
  CHECK(mc[feat::kIsOpenEnded] == 0.0);
  CHECK(extract_features({"Prove that the sum converges", false}, p)[feat::kIsProofRequest] == 1.0);
  CHECK(extract_features({"Show that x is even", false}, p)[feat::kIsProofRequest] == 1.0);
  CHECK(extract_features({"List three fruits", false}, p)[feat::kIsProofRequest] == 0.0);
}

TEST_CASE("image flag, connectives and clause counts") {
  VocabularyPack p = tiny_pack();
  CHECK(extract_features({"describe the chart", true}, p)[feat::kHasImage] == 1.0);
  CHECK(extract_features({"describe the chart", false}, p)[feat::kHasImage] == 0.0);
  FeatureVector f = extract_features(
      {"If x then y because z, therefore w", false}, p);
  CHECK(f[feat::kConnectiveCount] == 3.0);  // if, then, therefore
  CHECK(f[feat::kClauseCount] == 2.0);      // if, because
}

TEST_CASE("parse depth counts bracket nesting plus comma stacking") {
  VocabularyPack p = tiny_pack();
  CHECK(extract_features({"f(g(h(x)))", false}, p)[feat::kParseDepth] == 3.0);
  CHECK(extract_features({"a, b, c", false}, p)[feat::kParseDepth] == 2.0);
  CHECK(extract_features({"plain words here", false}, p)[feat::kParseDepth] == 0.0);
}

TEST_CASE("readability is clamped and latex-safe") {
  double g1 = readability_grade("The cat sat.");
  CHECK(g1 >= 0.0);
  CHECK(g1 <= 20.0);
  double g2 = readability_grade(
      "Characterization of quasi-equivalent homeomorphisms necessitates "
      "extraordinarily sophisticated terminological disambiguation");
  CHECK(g2 == 20.0);  // clamp
  CHECK_NOTHROW(readability_grade("$\\int_0^1 x dx$ evaluates to one half"));
}

TEST_CASE("empty text is rejected") {
  CHECK_THROWS_AS(extract_features({"", false}, tiny_pack()), ValidationError);
  CHECK_THROWS_AS(extract_features({"   \t\n", false}, tiny_pack()), ValidationError);
}

TEST_CASE("token count approximation is ceil(chars / 4)") {
  FeatureVector f = extract_features({"abcd", false}, tiny_pack());
  CHECK(f[feat::kTokenCount] == 1.0);
  f = extract_features({"abcde", false}, tiny_pack());
  CHECK(f[feat::kTokenCount] == 2.0);
}

TEST_CASE("determinism: identical inputs give bit-identical vectors") {
  QueryInput q{"Prove that \xE2\x88\xAB f = 0 when f is odd, for all f", false};
  FeatureVector a = extract_features(q, shipped_pack());
  FeatureVector b = extract_features(q, shipped_pack());
  CHECK(a == b);
}

TEST_CASE("monotonicity: appending a math symbol never clears f8") {
  VocabularyPack p = tiny_pack();
  std::string base = "some plain text";
  double before = extract_features({base, false}, p)[feat::kHasMathSymbol];
  double after =
      extract_features({base + " \xE2\x88\xAB", false}, p)[feat::kHasMathSymbol];
  CHECK(after >= before);
  CHECK(after == 1.0);
}

TEST_CASE("monotonicity: appending a marker never lowers the marker count") {
  VocabularyPack p = tiny_pack();
  std::mt19937 rng(7);
  const std::vector<std::string> fillers = {"alpha", "beta", "gamma", "delta",
                                            "prove", "derive", "epsilon"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string t;
    int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      t += fillers[rng() % fillers.size()];
      t.push_back(' ');
    }
    auto count_markers = [&](const std::string& s) {
      std::string folded = text::casefold(text::nfc(s));
      int c = 0;
      for (const auto& m : p.difficulty_markers) {
        if (text::contains_phrase(folded, m)) ++c;
      }
      return c;
    };
    int before = count_markers(t);
    int after = count_markers(t + " prove");
    CHECK(after >= before);
  }
}

TEST_CASE("range property over random unicode text") {
  VocabularyPack p = shipped_pack();
  std::mt19937 rng(42);
  auto random_text = [&] {
    std::vector<char32_t> cps;
    int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      switch (rng() % 6) {
        case 0: cps.push_back(U'a' + rng() % 26); break;
        case 1: cps.push_back(U'0' + rng() % 10); break;
        case 2: cps.push_back(U' '); break;
        case 3: cps.push_back(0x4E00 + rng() % 500); break;   // CJK
        case 4: cps.push_back(0x1F600 + rng() % 60); break;   // emoji
        default: {
          const char32_t punct[] = {U'?', U'!', U'.', U',', U'(', U')', U'$',
                                    0x222B, 0x2264};
          cps.push_back(punct[rng() % 9]);
        }
      }
    }
    return text::encode_utf8(cps);
  };

  const std::vector<int> binary = {feat::kHasDigit, feat::kHasMathSymbol,
                                   feat::kHasImage, feat::kIsMultipleChoice,
                                   feat::kIsOpenEnded, feat::kIsProofRequest};
  const std::vector<int> counts = {feat::kCharLen, feat::kWordCount,
                                   feat::kTokenCount, feat::kSentenceCount,
                                   feat::kClauseCount, feat::kQuestionMarks,
                                   feat::kParseDepth, feat::kConnectiveCount};
  int tested = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::string t = random_text();
    QueryInput q{t, (rng() % 2) == 0};
    FeatureVector f;
    try {
      f = extract_features(q, p);
    } catch (const ValidationError&) {
      continue;  // whitespace-only draw
    }
    ++tested;
    for (double v : f) {
      CHECK(std::isfinite(v));
    }
    for (int i : binary) {
      CHECK((f[i] == 0.0 || f[i] == 1.0));
    }
    for (int i : counts) {
      CHECK(f[i] >= 0.0);
      CHECK(f[i] == std::floor(f[i]));
    }
    CHECK(f[feat::kReadability] >= 0.0);
    CHECK(f[feat::kReadability] <= 20.0);
    CHECK(f[feat::kDifficultyDensity] >= 0.0);
    CHECK(f[feat::kDifficultyDensity] <= 1.0);
    CHECK(f[feat::kTfidfMath] >= 0.0);
    CHECK(f[feat::kTfidfCode] >= 0.0);
    CHECK(f[feat::kTfidfLogic] >= 0.0);
    CHECK(f[feat::kDomainMath] + f[feat::kDomainCode] + f[feat::kDomainLogic] <=
          1.0 + 1e-12);
  }
  CHECK(tested > 400);
}

TEST_CASE("vocab file order does not change outputs") {
  // same pack content, opposite key insertion order in the JSON text
  std::string a = R"({"schema_version":"1",
    "math_vocab":{"integral":3.0,"matrix":2.0},
    "code_vocab":{"loop":1.0},"logic_vocab":{"premise":1.0},
    "difficulty_markers":["prove","derive"],
    "logical_connectives":["if"],"math_symbols":["+"]})";
  std::string b = R"({"schema_version":"1",
    "math_vocab":{"matrix":2.0,"integral":3.0},
    "code_vocab":{"loop":1.0},"logic_vocab":{"premise":1.0},
    "difficulty_markers":["derive","prove"],
    "logical_connectives":["if"],"math_symbols":["+"]})";
  QueryInput q{"prove the integral and matrix identity", false};
  FeatureVector fa = extract_features(q, VocabularyPack::from_json_text(a));
  FeatureVector fb = extract_features(q, VocabularyPack::from_json_text(b));
  CHECK(fa == fb);
}
