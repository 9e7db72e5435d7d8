// SPDX-License-Identifier: Apache-2.0
#include "odar/vocab.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "odar/errors.hpp"
#include "odar/text.hpp"

namespace odar {

namespace {

std::map<std::string, double> parse_vocab(const nlohmann::json& j,
                                          const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw PackError("missing or non-object key '" + key + "'");
  }
  std::map<std::string, double> out;
  for (const auto& [term, weight] : j.at(key).items()) {
    if (!weight.is_number()) {
      throw PackError("weight for term '" + term + "' in " + key +
                      " is not a number");
    }
    out[text::casefold(text::nfc(term))] = weight.get<double>();
  }
  return out;
}

std::vector<std::string> parse_terms(const nlohmann::json& j,
                                     const std::string& key, bool fold) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw PackError("missing or non-array key '" + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& item : j.at(key)) {
    if (!item.is_string()) throw PackError("non-string entry in " + key);
    std::string term = text::nfc(item.get<std::string>());
    out.push_back(fold ? text::casefold(term) : term);
  }
  return out;
}

}  // namespace

void VocabularyPack::validate() const {
  if (schema_version.empty()) throw PackError("schema_version missing");
  for (const auto* vocab : {&math_vocab, &code_vocab, &logic_vocab}) {
    if (vocab->empty()) throw PackError("empty vocabulary map");
    for (const auto& [term, weight] : *vocab) {
      if (term.empty()) throw PackError("empty vocabulary term");
      if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw PackError("non-positive weight for term '" + term + "'");
      }
    }
  }
  if (difficulty_markers.empty()) throw PackError("difficulty_markers empty");
  if (logical_connectives.empty()) throw PackError("logical_connectives empty");
  if (math_symbols.empty()) throw PackError("math_symbols empty");
}

VocabularyPack VocabularyPack::from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw PackError(std::string("invalid JSON: ") + e.what());
  }
  VocabularyPack pack;
  if (j.contains("schema_version")) {
    pack.schema_version = j.at("schema_version").is_string()
                              ? j.at("schema_version").get<std::string>()
                              : j.at("schema_version").dump();
  }
  pack.math_vocab = parse_vocab(j, "math_vocab");
  pack.code_vocab = parse_vocab(j, "code_vocab");
  pack.logic_vocab = parse_vocab(j, "logic_vocab");
  pack.difficulty_markers = parse_terms(j, "difficulty_markers", true);
  pack.logical_connectives = parse_terms(j, "logical_connectives", true);
  // math symbols stay case-sensitive: \Sum and \sum are different commands
  pack.math_symbols = parse_terms(j, "math_symbols", false);
  pack.validate();
  return pack;
}

VocabularyPack VocabularyPack::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary pack: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

}  // namespace odar
