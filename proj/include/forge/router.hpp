// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Heuristic task-type router and the system/user prompt template.

#pragma once

#include <regex>
#include <string>
#include <vector>

#include "forge/task.hpp"

namespace forge {

/// One ordered routing rule. A rule fires when at least one `any` pattern
/// matches, no `exclude` pattern matches and, if requested, the text holds
/// an enumerated option list. Patterns are case-insensitive ECMAScript
/// regexes applied to instruction + "\n" + input_field.
struct RouteRuleSpec {
  TaskType type = TaskType::kGeneration;
  std::vector<std::string> any;
  std::vector<std::string> exclude;
  bool requires_options = false;
};

struct RouterRules {
  int version = 1;
  int min_option_lines = 2;
  std::vector<RouteRuleSpec> rules;
  TaskType fallback = TaskType::kGeneration;

  static RouterRules defaults();
  static RouterRules from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class Router {
 public:
  explicit Router(RouterRules rules = RouterRules::defaults());

  TaskType route(const Question& question) const;
  const RouterRules& rules() const { return rules_; }

 private:
  struct Compiled {
    TaskType type;
    std::vector<std::regex> any;
    std::vector<std::regex> exclude;
    bool requires_options;
  };
  RouterRules rules_;
  std::vector<Compiled> compiled_;
};

// Lines of the form "0. x", "1) x", "[2] x", "A. x", "b) x".
int count_option_lines(std::string_view text);

// Routes with the default rule set.
TaskType route(const Question& question);

struct PromptPair {
  std::string system;
  std::string user;
  bool operator==(const PromptPair&) const = default;
};

inline constexpr std::string_view kSystemPromptPrefix =
    "You are a helpful online shopping assistant. Your task is ";

/// Requires a routed task type; throws Errc::kUnrouted otherwise.
PromptPair build_prompt(const Question& question);

// Single text the toy LM conditions on: system + "\n" + user.
std::string flatten_prompt(const PromptPair& prompt);

}  // namespace forge
