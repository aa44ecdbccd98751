// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/pipeline.hpp"

#include <gtest/gtest.h>

#include "forge/adapter.hpp"
#include "forge/error.hpp"
#include "forge/synthetic.hpp"
#include "test_support.hpp"

namespace forge {
namespace {

using forge::testing::slurp;
using forge::testing::spit;
using forge::testing::TempDir;
using nlohmann::json;

std::vector<Question> questions(size_t n, uint64_t seed = 3) {
  SyntheticOptions o;
  o.count = n;
  o.seed = seed;
  return synthetic_questions(o);
}

Errc config_error(const json& j) {
  try {
    PipelineConfig::from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kIo;
}

TEST(Synthetic, LargeBatchesAreValid) {
  for (const Question& q : questions(20000, 10)) ASSERT_NO_THROW(validate_question(q)) << q.id;
}

TEST(PipelineConfig, ParsesAndResolvesRelativePaths) {
  const json j = {{"questions", "q.jsonl"}, {"output_dir", "/abs/out"}, {"seed", 9}, {"jobs", 2}};
  const PipelineConfig c = PipelineConfig::from_json(j, "/cfg");
  EXPECT_EQ(c.questions, std::filesystem::path("/cfg/q.jsonl"));
  EXPECT_EQ(c.output_dir, std::filesystem::path("/abs/out"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.jobs, 2u);
  EXPECT_FALSE(c.base);
}

TEST(PipelineConfig, RejectsBadInput) {
  const json ok = {{"questions", "q"}, {"output_dir", "o"}};
  json unknown = ok;
  unknown["temperature"] = 0.7;
  EXPECT_EQ(config_error(unknown), Errc::kConfiguration);
  EXPECT_EQ(config_error(json{{"questions", "q"}}), Errc::kConfiguration);
  json jobs = ok;
  jobs["jobs"] = 0;
  EXPECT_EQ(config_error(jobs), Errc::kConfiguration);
  json adapters = ok;
  adapters["adapters"] = json::array({{{"path", "a"}, {"weight", 1.0}}});
  EXPECT_EQ(config_error(adapters), Errc::kConfiguration);
  json neg = ok;
  neg["base"] = "b";
  neg["adapters"] = json::array({{{"path", "a"}, {"weight", -1.0}}});
  EXPECT_EQ(config_error(neg), Errc::kConfiguration);
  json wise = ok;
  wise["wise_ft"] = 1.5;
  EXPECT_EQ(config_error(wise), Errc::kConfiguration);
  json group = ok;
  group["base"] = "b";
  group["quantize"] = {{"group_size", 0}};
  EXPECT_EQ(config_error(group), Errc::kConfiguration);
  EXPECT_EQ(config_error(json{{"questions", 1}, {"output_dir", "o"}}), Errc::kConfiguration);
}

TEST(Pipeline, MinimalConfigScoresEveryQuestion) {
  const TempDir dir;
  write_questions(questions(3), dir / "q.jsonl");
  const json cfg = {{"questions", "q.jsonl"}, {"output_dir", "out"}};
  spit(dir / "config.json", cfg.dump());
  const PipelineResult r = run_pipeline(PipelineConfig::load(dir / "config.json"));
  EXPECT_EQ(r.questions, 3u);
  EXPECT_EQ(r.report.per_question.size(), 3u);
  for (const auto& [id, score] : r.report.per_question) {
    EXPECT_GE(score, 0.0) << id;
    EXPECT_LE(score, 1.0) << id;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "answers.jsonl"));
  EXPECT_EQ(read_answers(dir / "out" / "answers.jsonl").size(), 3u);
  const MetricReport again = MetricReport::from_json(json::parse(slurp(dir / "out" / "report.json")));
  EXPECT_EQ(again.per_question, r.report.per_question);
}

TEST(Pipeline, ReportIsByteStable) {
  const TempDir dir;
  write_questions(questions(40), dir / "q.jsonl");
  PipelineConfig c;
  c.questions = dir / "q.jsonl";
  c.output_dir = dir / "a";
  run_pipeline(c);
  c.output_dir = dir / "b";
  c.jobs = 3;
  run_pipeline(c);
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
  EXPECT_EQ(slurp(dir / "a" / "answers.jsonl"), slurp(dir / "b" / "answers.jsonl"));
}

TEST(Pipeline, ThroughputOnlyWhenRequested) {
  const TempDir dir;
  write_questions(questions(5), dir / "q.jsonl");
  PipelineConfig c;
  c.questions = dir / "q.jsonl";
  c.output_dir = dir / "out";
  run_pipeline(c);
  EXPECT_FALSE(json::parse(slurp(dir / "out" / "report.json")).contains("throughput"));
  c.report_throughput = true;
  const PipelineResult r = run_pipeline(c);
  const json j = json::parse(slurp(dir / "out" / "report.json"));
  ASSERT_TRUE(j.contains("throughput"));
  EXPECT_EQ(j["throughput"]["questions"], 5);
  EXPECT_GT(r.questions_per_minute, 0.0);
}

TEST(Pipeline, FailingStageIsNamed) {
  const TempDir dir;
  PipelineConfig c;
  c.questions = dir / "missing.jsonl";
  c.output_dir = dir / "out";
  try {
    run_pipeline(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
  }
  write_questions(questions(2), dir / "q.jsonl");
  c.questions = dir / "q.jsonl";
  c.base = dir / "missing.fta";
  try {
    run_pipeline(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "merge");
  }
}

TEST(Pipeline, MergeAndQuantizeStagesWriteModels) {
  const TempDir dir;
  const TensorArchive base = random_base(toy_layout(16, 32, 1), 5);
  write_archive(base, dir / "base.fta");
  write_adapter(random_adapter(base, "a", 4, 8.0, 6), dir / "a.fta");
  write_questions(questions(6), dir / "q.jsonl");
  const json cfg = {{"questions", "q.jsonl"},
                    {"output_dir", "out"},
                    {"base", "base.fta"},
                    {"adapters", json::array({{{"path", "a.fta"}, {"weight", 0.56}}})},
                    {"wise_ft", 0.25},
                    {"quantize", {{"group_size", 16}}}};
  const PipelineResult r = run_pipeline(PipelineConfig::from_json(cfg, dir.path()));
  ASSERT_TRUE(r.model_fingerprint);
  const TensorArchive merged = read_archive(dir / "out" / "model.fta");
  const TensorArchive quant = read_archive(dir / "out" / "model.int4.fta");
  EXPECT_EQ(merged.tensors.size(), base.tensors.size());
  EXPECT_EQ(quant.tensors.size(), base.tensors.size());
  EXPECT_EQ(*r.model_fingerprint, archive_fingerprint(quant));
  EXPECT_NE(archive_fingerprint(merged), archive_fingerprint(base));
}

TEST(DecodeQuestions, IndependentOfWorkerCount) {
  const auto qs = questions(30, 8);
  DecodeOptions o;
  o.seed = 4;
  const DecodeRun a = decode_questions(qs, o);
  o.jobs = 4;
  const DecodeRun b = decode_questions(qs, o);
  ASSERT_EQ(a.answers.size(), qs.size());
  for (size_t i = 0; i < qs.size(); ++i) {
    EXPECT_EQ(a.answers[i].id, qs[i].id);
    EXPECT_EQ(a.answers[i].to_json(), b.answers[i].to_json());
  }
  o.seed = 5;
  const DecodeRun c = decode_questions(qs, o);
  bool differs = false;
  for (size_t i = 0; i < qs.size(); ++i) differs |= a.answers[i].raw != c.answers[i].raw;
  EXPECT_TRUE(differs);
}

TEST(DecodeQuestions, AnswersRoundTrip) {
  const TempDir dir;
  const DecodeRun r = decode_questions(questions(10), DecodeOptions{});
  write_answers(r.answers, dir / "a.jsonl");
  const auto back = read_answers(dir / "a.jsonl");
  ASSERT_EQ(back.size(), r.answers.size());
  for (size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].to_json(), r.answers[i].to_json());
}

}  // namespace
}  // namespace forge
