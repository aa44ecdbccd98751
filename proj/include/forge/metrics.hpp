// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-question metrics for the five task types and the two-level scoring
// protocol: arithmetic mean per track, then rank-sum across tracks.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/parser.hpp"
#include "forge/task.hpp"

namespace forge {

// Lowercased ASCII alphanumeric runs; bytes >= 0x80 are kept inside words.
std::vector<std::string> metric_tokens(std::string_view text);

double accuracy(const Choice& pred, const GoldChoice& gold);

/// DCG/IDCG with linear gain and log2(i+1) discount. Ids without a grade add
/// nothing; repeated ids count once. All-zero grades score 1.
double ndcg(const std::vector<int64_t>& pred, const std::map<int64_t, double>& grades);

/// Span-level F1 with multiplicity: 2TP / (2TP + FP + FN) over normalized
/// (case-folded, whitespace-collapsed) spans. With token_level, spans are
/// split into tokens first. Both empty scores 1.
double micro_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                bool token_level = false);

std::string normalize_span(std::string_view span);

/// |pred ∩ gold| / min(3, |gold|). Requires |pred| <= 3 after de-duplication.
/// Empty gold scores 0 and warns.
double hit_at_3(const std::vector<int64_t>& pred, const std::vector<int64_t>& gold);

// Token-sequence forms used by the text metrics.
double rouge_l_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref);
double bleu_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref);
double cosine_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref);

/// LCS F-measure. Empty vs empty is 1, one side empty is 0.
double rouge_l(std::string_view pred, std::string_view ref);

/// Sentence BLEU-4: clipped n-gram precisions, add-one smoothing for n >= 2,
/// brevity penalty exp(1 - r/c) when c < r. Empty prediction scores 0.
double bleu(std::string_view pred, std::string_view ref);

/// Bag-of-tokens cosine, a stand-in for sentence-embedding similarity.
/// Both empty scores 1.
double embedding_cosine(std::string_view pred, std::string_view ref);

struct MetricOptions {
  bool token_level_f1 = false;
};

/// Score of one question in [0, 1]. A missing answer or a task-type mismatch
/// scores 0.
double score_answer(const GoldAnswer& gold, const std::optional<ParsedAnswer>& answer,
                    const MetricOptions& options = {});

/// Arithmetic mean. Throws Errc::kEmptyInput on an empty set.
double track_score(const std::vector<double>& scores);

/// Per track, rank systems by descending score (ties share the better rank)
/// and sum each system's ranks over the tracks it entered.
std::map<std::string, int> rank_sum(const std::map<std::string, std::map<int, double>>& systems);

struct MetricReport {
  std::map<std::string, double> per_question;
  std::map<int, double> per_track;
  std::map<std::string, std::string> notes;
  std::optional<std::map<std::string, int>> rank_table;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

struct AnswerRecord {
  std::string id;
  std::string raw;
  std::optional<ParsedAnswer> parsed;
  std::optional<std::string> failure_reason;

  nlohmann::json to_json() const;
  static AnswerRecord from_json(const nlohmann::json& j);
};

/// Scores every question that has a gold answer. Questions without a
/// matching answer record score 0.
MetricReport evaluate(const std::vector<Question>& questions, const std::vector<AnswerRecord>& answers,
                      const MetricOptions& options = {});

}  // namespace forge
