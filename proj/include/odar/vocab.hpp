// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

namespace odar {

// Term lists backing the semantic features. The pack is data, versioned in
// the repo (data/vocab_pack.json); terms are stored casefolded so lookups
// against folded query text are direct. std::map keeps iteration order
// independent of file order.
struct VocabularyPack {
  std::map<std::string, double> math_vocab;   // term -> idf weight
  std::map<std::string, double> code_vocab;
  std::map<std::string, double> logic_vocab;
  std::vector<std::string> difficulty_markers;
  std::vector<std::string> logical_connectives;
  std::vector<std::string> math_symbols;  // single code points or \commands
  std::string schema_version;

  // Throws PackError on schema violations, non-positive weights or empty sets.
  void validate() const;

  static VocabularyPack from_json_text(const std::string& json_text);
  static VocabularyPack load(const std::string& path);
};

}  // namespace odar
