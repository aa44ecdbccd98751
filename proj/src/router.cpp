// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/router.hpp"

#include <cctype>
#include <span>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

namespace {

const char* const kRankPatterns[] = {R"(\b(re-?)?rank(s|ed|ing)?\b)", R"(\border the\b)",
                                     R"(\bsort the\b)"};
const char* const kRetrievalPatterns[] = {R"(\bselect\s+(\d+|two|three|four|five)\b)",
                                          R"(\b(three|3)\b[^\n]*\bids?\b)",
                                          R"(\bcandidates?\b)"};

std::vector<std::string> to_vec(std::initializer_list<std::span<const char* const>> groups) {
  std::vector<std::string> out;
  for (auto g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool is_option_line(std::string_view line) {
  line = trim_left(line);
  size_t i = 0;
  if (!line.empty() && line[0] == '[') {
    size_t j = 1;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    return j > 1 && j < line.size() && line[j] == ']' && j + 1 < line.size() &&
           line.substr(j + 1).find_first_not_of(" \t") != std::string_view::npos;
  }
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0) {
    if (line.size() < 2 || !std::isalpha(static_cast<unsigned char>(line[0]))) return false;
    i = 1;
    if (line[i] != '.' && line[i] != ')') return false;
  } else if (i >= line.size() || (line[i] != '.' && line[i] != ')' && line[i] != ':')) {
    return false;
  }
  ++i;
  // Needs whitespace then content, so "3.5 inch" and "e.g." do not count.
  if (i >= line.size() || (line[i] != ' ' && line[i] != '\t')) return false;
  return line.substr(i).find_first_not_of(" \t") != std::string_view::npos;
}

std::regex compile(const std::string& pattern) {
  try {
    return std::regex(pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw Error(Errc::kConfiguration, "bad routing pattern '" + pattern + "': " + e.what());
  }
}

}  // namespace

int count_option_lines(std::string_view text) {
  int count = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    if (is_option_line(text.substr(start, end - start))) ++count;
    start = end + 1;
  }
  return count;
}

RouterRules RouterRules::defaults() {
  RouterRules r;
  r.version = 1;
  r.min_option_lines = 2;
  r.rules = {
      {TaskType::kMultipleChoice,
       {R"(\b(select|choose|answer)\b)"},
       to_vec({kRankPatterns, kRetrievalPatterns}),
       true},
      {TaskType::kRanking, to_vec({kRankPatterns}), {}, true},
      {TaskType::kNamedEntityRecognition, {R"(\bextract)", R"(named entit)", R"(\bentities\b)"}, {},
       false},
      {TaskType::kRetrieval, to_vec({kRetrievalPatterns}), to_vec({kRankPatterns}), false},
  };
  r.fallback = TaskType::kGeneration;
  return r;
}

json RouterRules::to_json() const {
  json rs = json::array();
  for (const RouteRuleSpec& spec : rules) {
    rs.push_back({{"type", task_type_name(spec.type)},
                  {"any", spec.any},
                  {"exclude", spec.exclude},
                  {"requires_options", spec.requires_options}});
  }
  return {{"version", version},
          {"min_option_lines", min_option_lines},
          {"rules", rs},
          {"fallback", task_type_name(fallback)}};
}

RouterRules RouterRules::from_json(const json& j) {
  RouterRules r;
  try {
    r.version = j.at("version").get<int>();
    r.min_option_lines = j.value("min_option_lines", 2);
    for (const json& spec : j.at("rules")) {
      RouteRuleSpec s;
      auto t = parse_task_type(spec.at("type").get<std::string>());
      if (!t) throw Error(Errc::kConfiguration, "unknown task type in routing rules");
      s.type = *t;
      s.any = spec.at("any").get<std::vector<std::string>>();
      s.exclude = spec.value("exclude", std::vector<std::string>{});
      s.requires_options = spec.value("requires_options", false);
      r.rules.push_back(std::move(s));
    }
    if (j.contains("fallback")) {
      auto t = parse_task_type(j["fallback"].get<std::string>());
      if (!t) throw Error(Errc::kConfiguration, "unknown fallback task type");
      r.fallback = *t;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kConfiguration, std::string("bad routing rules: ") + e.what());
  }
  return r;
}

Router::Router(RouterRules rules) : rules_(std::move(rules)) {
  for (const RouteRuleSpec& spec : rules_.rules) {
    Compiled c{spec.type, {}, {}, spec.requires_options};
    for (const auto& p : spec.any) c.any.push_back(compile(p));
    for (const auto& p : spec.exclude) c.exclude.push_back(compile(p));
    compiled_.push_back(std::move(c));
  }
}

TaskType Router::route(const Question& question) const {
  std::string text = question.instruction;
  if (!question.input_field.empty()) {
    text += '\n';
    text += question.input_field;
  }
  const int options = count_option_lines(text);
  auto matches = [&](const std::regex& re) { return std::regex_search(text, re); };
  for (const Compiled& rule : compiled_) {
    if (rule.requires_options && options < rules_.min_option_lines) continue;
    if (std::none_of(rule.any.begin(), rule.any.end(), matches)) continue;
    if (std::any_of(rule.exclude.begin(), rule.exclude.end(), matches)) continue;
    return rule.type;
  }
  return rules_.fallback;
}

TaskType route(const Question& question) {
  static const Router router;
  return router.route(question);
}

PromptPair build_prompt(const Question& question) {
  if (!question.task_type) {
    throw Error(Errc::kUnrouted, "question '" + question.id + "' has no task type");
  }
  PromptPair p;
  p.system = std::string(kSystemPromptPrefix) + std::string(task_type_phrase(*question.task_type)) + ".";
  p.user = question.instruction;
  if (!question.input_field.empty()) {
    p.user += '\n';
    p.user += question.input_field;
  }
  return p;
}

std::string flatten_prompt(const PromptPair& prompt) { return prompt.system + "\n" + prompt.user; }

}  // namespace forge
