#pragma once

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "actowl/core/errors.hpp"
#include "actowl/core/types.hpp"

namespace actowl::dialogue {

/// Transport or protocol failure talking to a remote model. Carries the raw
/// payload (response body, or the exception text) for diagnosis.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string payload) : Error(what), payload_(std::move(payload)) {}
  const std::string& payload() const { return payload_; }

 private:
  std::string payload_;
};

/// A completion arrived but did not have the expected shape.
class ParseError : public BackendError {
 public:
  using BackendError::BackendError;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// The answer text could not be mapped to a user or to Shared.
class InterpretationError : public Error {
 public:
  InterpretationError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_text() const { return raw_; }

 private:
  std::string raw_;
};

enum class EnvironmentContext { Household, Laboratory };

inline const char* to_string(EnvironmentContext c) {
  return c == EnvironmentContext::Laboratory ? "laboratory" : "household";
}

/// One line of object context: [class, attribute, point.x, point.y, observed user].
struct ObjectRow {
  std::size_t object_id = 0;
  std::string class_name;
  std::string color;  ///< human-readable color, used by template questions
  std::vector<int> attributes;
  double x = 0.0;
  double y = 0.0;
  std::string observed_user = "unknown";  ///< owner name, "Shared" or "unknown"

  bool labeled() const { return observed_user != "unknown"; }
};

/// "-Backpack, [1,0,...], 6.325937769, 2.471300272, hashimoto"
inline std::string format_row(const ObjectRow& row) {
  std::string out = "-" + row.class_name + ", [";
  for (std::size_t i = 0; i < row.attributes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(row.attributes[i]);
  }
  char coords[96];
  std::snprintf(coords, sizeof coords, "], %.9f, %.9f, ", row.x, row.y);
  return out + coords + row.observed_user;
}

inline std::string format_rows(const std::vector<ObjectRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += '\n';
    out += format_row(rows[i]);
  }
  return out;
}

struct QuestionRecord {
  std::size_t target_object_id = 0;
  std::string question_text;
  ObjectRow target;
  std::vector<ObjectRow> context_objects;
};

struct Classification {
  std::set<std::string> shared;
  std::set<std::string> owned;
};

/// The three language-facing capabilities plus the one-shot owner prediction
/// used by the LLM-only baseline.
class DialogueBackend {
 public:
  virtual ~DialogueBackend() = default;

  virtual Classification classify_shared_owned(const std::vector<std::string>& classes,
                                               EnvironmentContext context) = 0;

  virtual QuestionRecord generate_question(const ObjectRow& target, const std::vector<ObjectRow>& others) = 0;

  /// Returns Owner(name) with name in `users`, or Shared. Throws InterpretationError.
  virtual AnswerLabel interpret_answer(const QuestionRecord& question, const std::string& answer_text,
                                       const std::string& responding_user, const std::vector<std::string>& users) = 0;

  /// One label per row, in order.
  virtual std::vector<AnswerLabel> predict_owners(const std::vector<ObjectRow>& rows,
                                                  const std::vector<std::string>& users) = 0;

  virtual std::string name() const = 0;
};

}  // namespace actowl::dialogue
