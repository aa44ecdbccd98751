// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end composition: merge, optional quantization, routing, decoding,
// parsing and scoring. Every stage reads and writes files so it can be
// re-run on its own.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/logits.hpp"
#include "forge/metrics.hpp"
#include "forge/router.hpp"
#include "forge/task.hpp"
#include "forge/tensor_archive.hpp"

namespace forge {

inline constexpr std::string_view kRulesetVersion = "router-rules-v1";

struct DecodeOptions {
  uint64_t seed = 0;
  int max_new = 16;
  unsigned jobs = 1;
  ChainConfig chain;
  RouterRules rules = RouterRules::defaults();
  bool strict_parse = false;
};

struct DecodeRun {
  std::vector<AnswerRecord> answers;  // question order
  double seconds = 0.0;
  double questions_per_minute = 0.0;
};

/// Routes unrouted questions, renders prompts, decodes each one with the toy
/// LM on up to `jobs` workers and parses the output. The tokenizer vocabulary
/// is built from every rendered prompt in question order, so results do not
/// depend on the worker count.
DecodeRun decode_questions(const std::vector<Question>& questions, const DecodeOptions& options);

void write_answers(const std::vector<AnswerRecord>& answers, const std::filesystem::path& path);
std::vector<AnswerRecord> read_answers(const std::filesystem::path& path);

struct MergeConfigEntry {
  std::filesystem::path path;
  double weight = 1.0;
};

struct PipelineConfig {
  std::filesystem::path questions;
  std::filesystem::path output_dir;
  uint64_t seed = 0;
  int max_new = 16;
  unsigned jobs = 1;
  ChainConfig chain;
  bool strict_parse = false;
  MetricOptions metrics;
  std::optional<std::filesystem::path> base;
  std::vector<MergeConfigEntry> adapters;
  double wise_ft = 1.0;
  std::optional<int64_t> quantize_group_size;
  bool quantize_symmetric = false;
  // Adds a "throughput" object to report.json, which then differs per run.
  bool report_throughput = false;

  /// Unknown keys, wrong types and invalid values throw
  /// Errc::kConfiguration. Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
};

struct PipelineResult {
  MetricReport report;
  size_t questions = 0;
  double decode_seconds = 0.0;
  double questions_per_minute = 0.0;
  std::optional<uint64_t> model_fingerprint;
};

/// Thrown for a failing stage; `stage` names it ("merge", "decode", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Writes answers.jsonl and report.json (plus model.fta and, when
/// quantizing, model.int4.fta) under output_dir. Unless report_throughput
/// is set the report is byte-stable for a fixed config.
PipelineResult run_pipeline(const PipelineConfig& config);

// 64-bit FNV-1a over the serialized archive; keys the toy LM to the model.
uint64_t archive_fingerprint(const TensorArchive& archive);

}  // namespace forge
