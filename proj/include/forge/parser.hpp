// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parses generated text into typed answers. Failures are values, never
// exceptions; a failed parse scores 0 downstream.
//
// Permissive mode (the default) applies these recoveries and records each
// one in ParseOutcome::recoveries:
//   answer_prefix         leading "Answer:" (repeated, case-insensitive)
//   trailing_punctuation  trailing . ; ! ? : , and whitespace
//   brackets              one enclosing [...] or (...) around a list
//   letter_option         lone letter A..Z for multiple choice (A -> 0)
//   duplicate_ids         repeated ids in a list (always dropped)
// Strict mode rejects any input that needs one of the first four.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "forge/task.hpp"

namespace forge {

struct Choice {
  int64_t index = 0;
  bool operator==(const Choice&) const = default;
};
struct RankedList {
  std::vector<int64_t> ids;
  bool operator==(const RankedList&) const = default;
};
struct EntitySet {
  std::vector<std::string> spans;
  bool operator==(const EntitySet&) const = default;
};
struct RetrievedSet {
  std::vector<int64_t> ids;  // first-occurrence order, unique
  bool operator==(const RetrievedSet&) const = default;
};
struct FreeText {
  std::string text;
  bool operator==(const FreeText&) const = default;
};

using ParsedAnswer = std::variant<Choice, RankedList, EntitySet, RetrievedSet, FreeText>;

struct ParseOutcome {
  std::optional<ParsedAnswer> answer;
  std::string failure_reason;
  std::vector<std::string> recoveries;

  bool ok() const { return answer.has_value(); }
};

struct ParseOptions {
  std::optional<int64_t> num_candidates;
  bool strict = false;
  size_t max_retrieved = 3;
};

ParseOutcome parse(TaskType type, std::string_view generated, const ParseOptions& options = {});

// Canonical text form; parse(type, format_answer(a)) reproduces a.
std::string format_answer(const ParsedAnswer& answer);

TaskType answer_task_type(const ParsedAnswer& answer);

nlohmann::json answer_to_json(const ParsedAnswer& answer);
ParsedAnswer answer_from_json(const nlohmann::json& j);

}  // namespace forge
