// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "forge/adapter.hpp"
#include "forge/decode.hpp"
#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/quant.hpp"
#include "forge/rng.hpp"

namespace forge {

using nlohmann::json;

DecodeRun decode_questions(const std::vector<Question>& questions, const DecodeOptions& options) {
  if (options.max_new < 1) throw Error(Errc::kInvalidArgument, "max_new must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const Router router(options.rules);
  std::vector<TaskType> types;
  std::vector<std::string> prompts;
  types.reserve(questions.size());
  prompts.reserve(questions.size());
  for (const Question& q : questions) {
    Question routed = q;
    if (!routed.task_type) routed.task_type = router.route(q);
    types.push_back(*routed.task_type);
    prompts.push_back(flatten_prompt(build_prompt(routed)));
  }

  const ToyTokenizer tokenizer = ToyTokenizer::from_corpus(prompts);
  const ToyLM lm(options.seed, tokenizer.size());
  std::map<TaskType, LogitsProcessorChain> chains;
  for (TaskType t : std::set<TaskType>(types.begin(), types.end())) {
    chains.emplace(t, build_chain(options.chain.for_task(t), tokenizer.vocab()));
  }

  DecodeRun run;
  run.answers.resize(questions.size());
  parallel_for(questions.size(), options.jobs, [&](size_t i) {
    const Question& q = questions[i];
    const DecodeResult d = greedy_decode(lm, tokenizer, prompts[i], chains.at(types[i]), options.max_new);
    ParseOptions popt;
    popt.num_candidates = q.num_candidates;
    popt.strict = options.strict_parse;
    ParseOutcome parsed = parse(types[i], d.text, popt);
    AnswerRecord& rec = run.answers[i];
    rec.id = q.id;
    rec.raw = d.text;
    rec.parsed = parsed.answer;
    if (!parsed.ok()) rec.failure_reason = std::move(parsed.failure_reason);
  });

  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.questions_per_minute =
      run.seconds > 0.0 ? static_cast<double>(questions.size()) * 60.0 / run.seconds : 0.0;
  return run;
}

void write_answers(const std::vector<AnswerRecord>& answers, const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(answers.size());
  for (const AnswerRecord& a : answers) rows.push_back(a.to_json());
  write_jsonl(rows, path);
}

std::vector<AnswerRecord> read_answers(const std::filesystem::path& path) {
  std::vector<AnswerRecord> out;
  for (const json& j : read_jsonl(path)) out.push_back(AnswerRecord::from_json(j));
  return out;
}

namespace {

const std::set<std::string> kConfigKeys = {
    "questions", "output_dir", "seed",     "max_new",   "jobs",     "chain",
    "strict_parse", "token_level_f1", "base", "adapters", "wise_ft", "quantize",
    "report_throughput"};

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return path;
}

void require_keys(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  if (!j.is_object()) throw Error(Errc::kConfiguration, std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error(Errc::kConfiguration, "unknown key '" + it.key() + "' in " + std::string(where));
    }
  }
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(Errc::kIo, "write failure on '" + path.string() + "'");
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  require_keys(j, kConfigKeys, "pipeline config");
  PipelineConfig c;
  try {
    c.questions = resolve(base_dir, j.at("questions").get<std::string>());
    c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", uint64_t{0});
    c.max_new = j.value("max_new", 16);
    const int jobs = j.value("jobs", 1);
    if (jobs < 1) throw Error(Errc::kConfiguration, "jobs must be >= 1");
    c.jobs = static_cast<unsigned>(jobs);
    if (c.max_new < 1) throw Error(Errc::kConfiguration, "max_new must be >= 1");
    if (j.contains("chain")) c.chain = ChainConfig::from_json(j["chain"]);
    c.strict_parse = j.value("strict_parse", false);
    c.metrics.token_level_f1 = j.value("token_level_f1", false);
    c.report_throughput = j.value("report_throughput", false);
    if (j.contains("base")) c.base = resolve(base_dir, j["base"].get<std::string>());
    if (j.contains("adapters")) {
      if (!c.base) throw Error(Errc::kConfiguration, "adapters given without a base archive");
      for (const json& a : j["adapters"]) {
        require_keys(a, {"path", "weight"}, "adapter entry");
        MergeConfigEntry e;
        e.path = resolve(base_dir, a.at("path").get<std::string>());
        e.weight = a.value("weight", 1.0);
        if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
          throw Error(Errc::kConfiguration, "adapter weight must be finite and non-negative");
        }
        c.adapters.push_back(std::move(e));
      }
    }
    c.wise_ft = j.value("wise_ft", 1.0);
    if (!(c.wise_ft >= 0.0 && c.wise_ft <= 1.0)) throw Error(Errc::kConfiguration, "wise_ft must lie in [0, 1]");
    if (j.contains("quantize")) {
      const json& q = j["quantize"];
      require_keys(q, {"group_size", "symmetric"}, "quantize");
      if (!c.base) throw Error(Errc::kConfiguration, "quantize given without a base archive");
      c.quantize_group_size = q.value("group_size", int64_t{128});
      c.quantize_symmetric = q.value("symmetric", false);
      QuantConfig qc;
      qc.group_size = *c.quantize_group_size;
      validate_quant_config(qc);
    }
  } catch (const Error& e) {
    throw Error(Errc::kConfiguration, e.what());
  } catch (const json::exception& e) {
    throw Error(Errc::kConfiguration, std::string("bad pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfiguration, "cannot open config '" + path.string() + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::kConfiguration, path.string() + ": invalid JSON");
  return from_json(j, path.parent_path());
}

uint64_t archive_fingerprint(const TensorArchive& archive) {
  return derive_seed(0, serialize_archive(archive));
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  const auto questions = stage("load", [&] { return read_questions(config.questions); });
  stage("output", [&] {
    std::filesystem::create_directories(config.output_dir);
    return 0;
  });

  std::optional<TensorArchive> model;
  if (config.base) {
    model = stage("merge", [&] {
      const TensorArchive base = read_archive(*config.base);
      MergePlan plan;
      for (const MergeConfigEntry& e : config.adapters) {
        LoraAdapter a = read_adapter(e.path);
        if (config.wise_ft != 1.0) a = wise_ft_rescale(a, config.wise_ft);
        plan.steps.push_back(MergeStep{std::move(a), e.weight, std::nullopt});
      }
      TensorArchive merged = execute_merge(base, plan, config.jobs);
      write_archive(merged, config.output_dir / "model.fta");
      return merged;
    });
    if (config.quantize_group_size) {
      model = stage("quantize", [&] {
        QuantConfig qc;
        qc.group_size = *config.quantize_group_size;
        qc.symmetric = config.quantize_symmetric;
        ArchiveQuantResult q = quantize_archive(*model, qc, config.jobs);
        write_archive(q.archive, config.output_dir / "model.int4.fta");
        return std::move(q.archive);
      });
    }
    result.model_fingerprint = archive_fingerprint(*model);
  }

  DecodeOptions dopt;
  dopt.seed = result.model_fingerprint
                  ? derive_seed(config.seed, std::to_string(*result.model_fingerprint))
                  : config.seed;
  dopt.max_new = config.max_new;
  dopt.jobs = config.jobs;
  dopt.chain = config.chain;
  dopt.strict_parse = config.strict_parse;
  const DecodeRun run = stage("decode", [&] {
    DecodeRun r = decode_questions(questions, dopt);
    write_answers(r.answers, config.output_dir / "answers.jsonl");
    return r;
  });
  result.questions = questions.size();
  result.decode_seconds = run.seconds;
  result.questions_per_minute = run.questions_per_minute;

  result.report = stage("evaluate", [&] {
    MetricReport report = evaluate(questions, run.answers, config.metrics);
    json j = report.to_json();
    if (config.report_throughput) {
      j["throughput"] = {{"questions", result.questions},
                         {"decode_seconds", result.decode_seconds},
                         {"questions_per_minute", result.questions_per_minute}};
    }
    write_text(config.output_dir / "report.json", j.dump(2) + "\n");
    return report;
  });
  return result;
}

}  // namespace forge
