// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace odar {

// Base error with a stable machine-readable kind; the CLI prints
// "<kind>: <message>" and maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed or out-of-contract input (empty text, bad ranges, schema holes).
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

// Unusable configuration or config file.
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// Vocabulary pack failed schema or invariant checks.
struct PackError : Error {
  explicit PackError(const std::string& m) : Error("vocab_pack", m) {}
};

// Candidate has no usable tokens; caller decides on fallback.
struct NotScorableError : Error {
  explicit NotScorableError(const std::string& m) : Error("not_scorable", m) {}
};

struct CalibrationError : Error {
  explicit CalibrationError(const std::string& m) : Error("calibration", m) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& m) : Error("training", m) {}
};

// Backend failure taxonomy: network, auth and response-shape problems are
// distinct; timeouts are reported in-band via FinishReason, not thrown.
struct NetworkError : Error {
  explicit NetworkError(const std::string& m) : Error("network", m) {}
};

struct AuthError : Error {
  explicit AuthError(const std::string& m) : Error("auth", m) {}
};

struct MalformedResponseError : Error {
  explicit MalformedResponseError(const std::string& m)
      : Error("malformed_response", m) {}
};

// End-to-end routing failed (e.g. every backend call errored out).
struct RoutingError : Error {
  explicit RoutingError(const std::string& m) : Error("routing", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace odar
