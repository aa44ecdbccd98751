// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/task.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

std::string_view task_type_name(TaskType type) {
  switch (type) {
    case TaskType::kMultipleChoice: return "multiple_choice";
    case TaskType::kRanking: return "ranking";
    case TaskType::kNamedEntityRecognition: return "named_entity_recognition";
    case TaskType::kRetrieval: return "retrieval";
    case TaskType::kGeneration: return "generation";
  }
  return "?";
}

std::optional<TaskType> parse_task_type(std::string_view name) {
  for (TaskType t : kAllTaskTypes) {
    if (task_type_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string_view task_type_phrase(TaskType type) {
  switch (type) {
    case TaskType::kMultipleChoice: return "multiple choice";
    case TaskType::kRanking: return "ranking";
    case TaskType::kNamedEntityRecognition: return "named entity recognition";
    case TaskType::kRetrieval: return "retrieval";
    case TaskType::kGeneration: return "generation";
  }
  return "?";
}

std::string_view generation_metric_name(GenerationMetric metric) {
  switch (metric) {
    case GenerationMetric::kRougeL: return "rouge_l";
    case GenerationMetric::kBleu: return "bleu";
    case GenerationMetric::kCosine: return "cosine";
  }
  return "?";
}

std::optional<GenerationMetric> parse_generation_metric(std::string_view name) {
  if (name == "rouge_l") return GenerationMetric::kRougeL;
  if (name == "bleu") return GenerationMetric::kBleu;
  if (name == "cosine") return GenerationMetric::kCosine;
  return std::nullopt;
}

TaskType gold_task_type(const GoldAnswer& gold) {
  struct Visitor {
    TaskType operator()(const GoldChoice&) const { return TaskType::kMultipleChoice; }
    TaskType operator()(const GoldRanking&) const { return TaskType::kRanking; }
    TaskType operator()(const GoldEntities&) const { return TaskType::kNamedEntityRecognition; }
    TaskType operator()(const GoldRetrieval&) const { return TaskType::kRetrieval; }
    TaskType operator()(const GoldText&) const { return TaskType::kGeneration; }
  };
  return std::visit(Visitor{}, gold);
}

void validate_question(const Question& q) {
  if (q.instruction.empty()) {
    throw Error(Errc::kInvalidArgument, "question '" + q.id + "' has an empty instruction");
  }
  if (q.track < 1 || q.track > 5) {
    throw Error(Errc::kInvalidArgument, "question '" + q.id + "' track must be in 1..5");
  }
  if (q.num_candidates && *q.num_candidates <= 0) {
    throw Error(Errc::kInvalidArgument, "question '" + q.id + "' num_candidates must be positive");
  }
  if (q.gold) {
    if (const auto* r = std::get_if<GoldRanking>(&*q.gold)) {
      bool positive = false;
      for (const auto& [id, g] : r->grades) {
        if (!std::isfinite(g) || g < 0) {
          throw Error(Errc::kInvalidArgument, "question '" + q.id + "' has a bad relevance grade");
        }
        positive = positive || g > 0;
      }
      if (!positive) {
        throw Error(Errc::kInvalidArgument,
                    "question '" + q.id + "' ranking gold needs a positive grade");
      }
    }
  }
}

json gold_to_json(const GoldAnswer& gold) {
  struct Visitor {
    json operator()(const GoldChoice& g) const { return {{"type", "choice"}, {"index", g.index}}; }
    json operator()(const GoldRanking& g) const {
      json grades = json::object();
      for (const auto& [id, grade] : g.grades) grades[std::to_string(id)] = grade;
      return {{"type", "ranking"}, {"grades", grades}};
    }
    json operator()(const GoldEntities& g) const { return {{"type", "entities"}, {"spans", g.spans}}; }
    json operator()(const GoldRetrieval& g) const { return {{"type", "retrieval"}, {"ids", g.ids}}; }
    json operator()(const GoldText& g) const {
      return {{"type", "text"}, {"text", g.text}, {"metric", generation_metric_name(g.metric)}};
    }
  };
  return std::visit(Visitor{}, gold);
}

GoldAnswer gold_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "choice") return GoldChoice{j.at("index").get<int64_t>()};
    if (type == "ranking") {
      GoldRanking r;
      for (auto it = j.at("grades").begin(); it != j.at("grades").end(); ++it) {
        r.grades[std::stoll(it.key())] = it->get<double>();
      }
      return r;
    }
    if (type == "entities") return GoldEntities{j.at("spans").get<std::vector<std::string>>()};
    if (type == "retrieval") return GoldRetrieval{j.at("ids").get<std::vector<int64_t>>()};
    if (type == "text") {
      GoldText t{j.at("text").get<std::string>(), GenerationMetric::kRougeL};
      if (j.contains("metric")) {
        auto m = parse_generation_metric(j.at("metric").get<std::string>());
        if (!m) throw Error(Errc::kInvalidArgument, "unknown generation metric");
        t.metric = *m;
      }
      return t;
    }
    throw Error(Errc::kInvalidArgument, "unknown gold type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad gold answer: ") + e.what());
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(Errc::kInvalidArgument, std::string("bad gold answer: ") + e.what());
  }
}

json question_to_json(const Question& q) {
  json j = {{"id", q.id},
            {"instruction", q.instruction},
            {"input_field", q.input_field},
            {"track", q.track}};
  j["task_type"] = q.task_type ? json(task_type_name(*q.task_type)) : json(nullptr);
  if (q.gold) j["gold"] = gold_to_json(*q.gold);
  if (q.num_candidates) j["num_candidates"] = *q.num_candidates;
  return j;
}

Question question_from_json(const json& j) {
  static const char* kKnown[] = {"id",   "instruction", "input_field",   "task_type",
                                 "track", "gold",       "num_candidates"};
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "question is not a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown)) {
      throw Error(Errc::kInvalidArgument, "unknown question field '" + it.key() + "'");
    }
  }
  Question q;
  try {
    q.id = j.at("id").get<std::string>();
    q.instruction = j.at("instruction").get<std::string>();
    if (j.contains("input_field")) q.input_field = j["input_field"].get<std::string>();
    if (j.contains("track")) q.track = j["track"].get<int>();
    if (j.contains("task_type") && !j["task_type"].is_null()) {
      auto t = parse_task_type(j["task_type"].get<std::string>());
      if (!t) throw Error(Errc::kInvalidArgument, "unknown task_type in question '" + q.id + "'");
      q.task_type = t;
    }
    if (j.contains("gold") && !j["gold"].is_null()) q.gold = gold_from_json(j["gold"]);
    if (j.contains("num_candidates") && !j["num_candidates"].is_null()) {
      q.num_candidates = j["num_candidates"].get<int64_t>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("bad question: ") + e.what());
  }
  validate_question(q);
  return q;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  std::vector<json> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

void write_jsonl(const std::vector<json>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for writing");
  for (const json& row : rows) {
    out << row.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
  if (!out) throw Error(Errc::kIo, "write failure on '" + path.string() + "'");
}

std::vector<Question> read_questions(const std::filesystem::path& path) {
  std::vector<Question> out;
  size_t lineno = 0;
  for (const json& j : read_jsonl(path)) {
    ++lineno;
    try {
      out.push_back(question_from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + " record " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_questions(const std::vector<Question>& questions, const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(questions.size());
  for (const Question& q : questions) rows.push_back(question_to_json(q));
  write_jsonl(rows, path);
}

}  // namespace forge
