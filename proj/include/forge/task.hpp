// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace forge {

enum class TaskType { kMultipleChoice, kRanking, kNamedEntityRecognition, kRetrieval, kGeneration };

inline constexpr TaskType kAllTaskTypes[] = {
    TaskType::kMultipleChoice, TaskType::kRanking, TaskType::kNamedEntityRecognition,
    TaskType::kRetrieval, TaskType::kGeneration};

// Wire name, e.g. "multiple_choice".
std::string_view task_type_name(TaskType type);
std::optional<TaskType> parse_task_type(std::string_view name);
// Phrase substituted into the system prompt, e.g. "multiple choice".
std::string_view task_type_phrase(TaskType type);

enum class GenerationMetric { kRougeL, kBleu, kCosine };

std::string_view generation_metric_name(GenerationMetric metric);
std::optional<GenerationMetric> parse_generation_metric(std::string_view name);

struct GoldChoice {
  int64_t index = 0;
  bool operator==(const GoldChoice&) const = default;
};
struct GoldRanking {
  std::map<int64_t, double> grades;  // candidate id -> relevance
  bool operator==(const GoldRanking&) const = default;
};
struct GoldEntities {
  std::vector<std::string> spans;
  bool operator==(const GoldEntities&) const = default;
};
struct GoldRetrieval {
  std::vector<int64_t> ids;
  bool operator==(const GoldRetrieval&) const = default;
};
struct GoldText {
  std::string text;
  GenerationMetric metric = GenerationMetric::kRougeL;
  bool operator==(const GoldText&) const = default;
};

using GoldAnswer = std::variant<GoldChoice, GoldRanking, GoldEntities, GoldRetrieval, GoldText>;

TaskType gold_task_type(const GoldAnswer& gold);

struct Question {
  std::string id;
  std::string instruction;
  std::string input_field;
  std::optional<TaskType> task_type;  // nullopt = unrouted
  int track = 1;
  std::optional<GoldAnswer> gold;
  std::optional<int64_t> num_candidates;

  bool operator==(const Question&) const = default;
};

// Throws Error(kInvalidArgument) on a violated invariant.
void validate_question(const Question& q);

nlohmann::json gold_to_json(const GoldAnswer& gold);
GoldAnswer gold_from_json(const nlohmann::json& j);

nlohmann::json question_to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);

std::vector<Question> read_questions(const std::filesystem::path& path);
void write_questions(const std::vector<Question>& questions, const std::filesystem::path& path);

// Reads a JSON-lines file; blank lines are skipped. Parse errors carry the
// line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::vector<nlohmann::json>& rows, const std::filesystem::path& path);

}  // namespace forge
