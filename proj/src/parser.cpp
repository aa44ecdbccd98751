// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/parser.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

namespace {

constexpr std::string_view kAnswerPrefix = "answer:";
constexpr std::string_view kTrailingPunct = ".;!?:,";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

void note(std::vector<std::string>& recoveries, std::string_view what) {
  if (std::find(recoveries.begin(), recoveries.end(), what) == recoveries.end()) {
    recoveries.emplace_back(what);
  }
}

// Strips whitespace, "Answer:" prefixes, leading commas and trailing
// punctuation until nothing changes. For NER only separators are stripped
// from the end, so "Inc." survives.
std::string_view normalize(std::string_view s, bool entity_mode, std::vector<std::string>& rec) {
  for (;;) {
    const std::string_view before = s;
    s = trim(s);
    while (!s.empty() && (s.front() == ',' || is_space(s.front()))) s.remove_prefix(1);
    if (starts_with_icase(s, kAnswerPrefix)) {
      s.remove_prefix(kAnswerPrefix.size());
      note(rec, "answer_prefix");
    }
    while (!s.empty()) {
      const char c = s.back();
      if (is_space(c) || c == ',') {
        if (c == ',' && !entity_mode) note(rec, "trailing_punctuation");
        s.remove_suffix(1);
      } else if (!entity_mode && kTrailingPunct.find(c) != std::string_view::npos) {
        note(rec, "trailing_punctuation");
        s.remove_suffix(1);
      } else {
        break;
      }
    }
    if (s.size() == before.size()) return s;
  }
}

std::optional<int64_t> to_int(std::string_view digits) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

ParseOutcome fail(std::string reason, std::vector<std::string> rec) {
  ParseOutcome out;
  out.failure_reason = std::move(reason);
  out.recoveries = std::move(rec);
  return out;
}

ParseOutcome succeed(ParsedAnswer answer, std::vector<std::string> rec) {
  ParseOutcome out;
  out.answer = std::move(answer);
  out.recoveries = std::move(rec);
  return out;
}

// Strict mode tolerates only the always-on duplicate handling.
std::optional<std::string> strict_violation(const std::vector<std::string>& rec) {
  for (const std::string& r : rec) {
    if (r != "duplicate_ids") return "strict mode rejects recovery '" + r + "'";
  }
  return std::nullopt;
}

ParseOutcome parse_choice(std::string_view text, const ParseOptions& opt) {
  std::vector<std::string> rec;
  std::string_view s = normalize(text, false, rec);
  std::optional<int64_t> index;
  size_t i = 0;
  while (i < s.size() && !is_digit(s[i])) ++i;
  if (i < s.size()) {
    size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    index = to_int(s.substr(i, j - i));
    if (!index) return fail("integer out of range", std::move(rec));
  } else {
    std::string_view letter = s;
    if (letter.size() == 2 && (letter[1] == ')' || letter[1] == '.')) letter.remove_suffix(1);
    if (letter.size() == 1 && ((letter[0] >= 'A' && letter[0] <= 'Z') ||
                               (letter[0] >= 'a' && letter[0] <= 'z'))) {
      const char up = letter[0] >= 'a' ? static_cast<char>(letter[0] - 'a' + 'A') : letter[0];
      index = up - 'A';
      note(rec, "letter_option");
    }
  }
  if (!index) return fail("no option index found", std::move(rec));
  if (opt.strict) {
    if (auto v = strict_violation(rec)) return fail(*v, std::move(rec));
  }
  if (opt.num_candidates && *index >= *opt.num_candidates) {
    return fail("choice " + std::to_string(*index) + " out of range", std::move(rec));
  }
  return succeed(Choice{*index}, std::move(rec));
}

ParseOutcome parse_id_list(TaskType type, std::string_view text, const ParseOptions& opt) {
  std::vector<std::string> rec;
  std::string_view s = normalize(text, false, rec);
  if (s.size() >= 2 && ((s.front() == '[' && s.back() == ']') || (s.front() == '(' && s.back() == ')'))) {
    s = normalize(s.substr(1, s.size() - 2), false, rec);
    note(rec, "brackets");
  }
  std::vector<int64_t> ids;
  std::unordered_set<int64_t> seen;
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ',' || is_space(s[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < s.size() && s[j] != ',' && !is_space(s[j])) ++j;
    const std::string_view token = s.substr(i, j - i);
    i = j;
    if (!std::all_of(token.begin(), token.end(), is_digit)) {
      std::string shown(token.substr(0, 32));
      return fail("non-integer token '" + shown + "'", std::move(rec));
    }
    const auto id = to_int(token);
    if (!id) return fail("integer out of range", std::move(rec));
    if (opt.num_candidates && *id >= *opt.num_candidates) {
      return fail("id " + std::to_string(*id) + " out of range", std::move(rec));
    }
    if (!seen.insert(*id).second) {
      note(rec, "duplicate_ids");
      continue;
    }
    ids.push_back(*id);
  }
  if (ids.empty()) return fail("no ids found", std::move(rec));
  if (opt.strict) {
    if (auto v = strict_violation(rec)) return fail(*v, std::move(rec));
  }
  if (type == TaskType::kRetrieval) {
    if (ids.size() > opt.max_retrieved) {
      return fail("retrieved " + std::to_string(ids.size()) + " ids, at most " +
                      std::to_string(opt.max_retrieved) + " allowed",
                  std::move(rec));
    }
    return succeed(RetrievedSet{std::move(ids)}, std::move(rec));
  }
  return succeed(RankedList{std::move(ids)}, std::move(rec));
}

ParseOutcome parse_entities(std::string_view text, const ParseOptions& opt) {
  std::vector<std::string> rec;
  std::string_view s = normalize(text, true, rec);
  if (opt.strict) {
    if (auto v = strict_violation(rec)) return fail(*v, std::move(rec));
  }
  EntitySet set;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find_first_of(",\n", start);
    if (end == std::string_view::npos) end = s.size();
    const std::string_view span = trim(s.substr(start, end - start));
    if (!span.empty()) set.spans.emplace_back(span);
    start = end + 1;
  }
  return succeed(std::move(set), std::move(rec));
}

std::string join_ids(const std::vector<int64_t>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

ParseOutcome parse(TaskType type, std::string_view generated, const ParseOptions& options) {
  switch (type) {
    case TaskType::kMultipleChoice: return parse_choice(generated, options);
    case TaskType::kRanking:
    case TaskType::kRetrieval: return parse_id_list(type, generated, options);
    case TaskType::kNamedEntityRecognition: return parse_entities(generated, options);
    case TaskType::kGeneration: return succeed(FreeText{std::string(trim(generated))}, {});
  }
  return fail("unknown task type", {});
}

std::string format_answer(const ParsedAnswer& answer) {
  struct Visitor {
    std::string operator()(const Choice& c) const { return std::to_string(c.index); }
    std::string operator()(const RankedList& r) const { return join_ids(r.ids); }
    std::string operator()(const RetrievedSet& r) const { return join_ids(r.ids); }
    std::string operator()(const EntitySet& e) const {
      std::string out;
      for (size_t i = 0; i < e.spans.size(); ++i) {
        if (i) out += ", ";
        out += e.spans[i];
      }
      return out;
    }
    std::string operator()(const FreeText& f) const { return f.text; }
  };
  return std::visit(Visitor{}, answer);
}

TaskType answer_task_type(const ParsedAnswer& answer) {
  struct Visitor {
    TaskType operator()(const Choice&) const { return TaskType::kMultipleChoice; }
    TaskType operator()(const RankedList&) const { return TaskType::kRanking; }
    TaskType operator()(const EntitySet&) const { return TaskType::kNamedEntityRecognition; }
    TaskType operator()(const RetrievedSet&) const { return TaskType::kRetrieval; }
    TaskType operator()(const FreeText&) const { return TaskType::kGeneration; }
  };
  return std::visit(Visitor{}, answer);
}

json answer_to_json(const ParsedAnswer& answer) {
  struct Visitor {
    json operator()(const Choice& c) const { return {{"type", "choice"}, {"index", c.index}}; }
    json operator()(const RankedList& r) const { return {{"type", "ranked_list"}, {"ids", r.ids}}; }
    json operator()(const EntitySet& e) const { return {{"type", "entity_set"}, {"spans", e.spans}}; }
    json operator()(const RetrievedSet& r) const { return {{"type", "retrieved_set"}, {"ids", r.ids}}; }
    json operator()(const FreeText& f) const { return {{"type", "free_text"}, {"text", f.text}}; }
  };
  return std::visit(Visitor{}, answer);
}

ParsedAnswer answer_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "choice") return Choice{j.at("index").get<int64_t>()};
    if (type == "ranked_list") return RankedList{j.at("ids").get<std::vector<int64_t>>()};
    if (type == "entity_set") return EntitySet{j.at("spans").get<std::vector<std::string>>()};
    if (type == "retrieved_set") return RetrievedSet{j.at("ids").get<std::vector<int64_t>>()};
    if (type == "free_text") return FreeText{j.at("text").get<std::string>()};
    throw Error(Errc::kInvalidArgument, "unknown parsed answer type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad parsed answer: ") + e.what());
  }
}

}  // namespace forge
