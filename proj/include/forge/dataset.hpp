// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic instruction-tuning samples built from seed records. Every
// recipe is a pure function of (records, rng seed); loss is computed on the
// answer tokens only.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "forge/task.hpp"

namespace forge {

inline constexpr std::string_view kPromptsVersion = "prompts-v1";
inline constexpr std::string_view kRecipesVersion = "recipes-v1";

enum class EsciLabel { kExact, kSubstitute, kComplement, kIrrelevant };

char esci_label_char(EsciLabel label);
std::optional<EsciLabel> parse_esci_label(std::string_view s);

struct EsciRow {
  std::string query;
  std::string product_id;
  std::string title;
  std::string description;
  std::string brand;
  EsciLabel label = EsciLabel::kIrrelevant;
  std::string locale = "us";
};

struct ReviewRow {
  std::string product_title;
  std::string review_text;
  int rating = 5;
  int helpful_votes = 0;
};

struct SessionRow {
  std::vector<std::string> clicked_titles;  // oldest first
  std::string purchased_title;
};

struct TrainingSample {
  std::string prompt;
  std::string answer;
  TaskType task_type = TaskType::kMultipleChoice;
  int recipe_id = 0;
  bool loss_on_answer_only = true;

  bool operator==(const TrainingSample&) const = default;
};

// A recipe declines an input group that does not meet its preconditions.
struct RecipeSkip {
  std::string reason;
};

using RecipeResult = std::variant<TrainingSample, RecipeSkip>;

/// MC: pick the title of one E row among distractors drawn from S/C/I rows
/// of the same query. Options are shuffled.
RecipeResult build_esci_mc(std::span<const EsciRow> group, uint64_t rng_seed, int num_options = 4);

/// Ranking: gold order by label priority E > S > C > I, ties broken by the
/// seeded rng. Presentation order is shuffled.
RecipeResult build_esci_ranking(std::span<const EsciRow> group, uint64_t rng_seed);

// Gold order (candidate indices) for labels in presentation order.
std::vector<size_t> esci_gold_order(std::span<const EsciLabel> presented, uint64_t rng_seed);

/// MC with options "1".."5"; answer index = rating - 1. Throws on a rating
/// outside 1..5.
TrainingSample build_review_rating_mc(const ReviewRow& row);

/// Retrieval: given the purchase, pick 3 previously clicked titles among
/// the shuffled true clicks and `num_distractors` pool titles. Throws
/// Errc::kInvalidArgument if the pool (minus the session's own titles) is too
/// small; skips sessions with fewer than 3 clicks.
RecipeResult build_session_retrieval(const SessionRow& row, std::span<const std::string> distractor_pool,
                                     uint64_t rng_seed, int num_distractors = 5);

// MC: pick the brand for a product title; distractor brands from `brands`.
RecipeResult build_esci_brand_mc(const EsciRow& row, std::span<const std::string> brands,
                                 uint64_t rng_seed, int num_options = 4);

// MC: the E/S/C/I relationship of one query-product pair.
TrainingSample build_esci_relation_mc(const EsciRow& row);

// Retrieval: pick up to three exact matches for a query.
RecipeResult build_esci_exact_retrieval(std::span<const EsciRow> group, uint64_t rng_seed,
                                        int num_candidates = 6);

// Ranking: reviews of one product by helpful votes, most helpful first.
RecipeResult build_review_helpfulness_ranking(std::span<const ReviewRow> reviews, uint64_t rng_seed);

enum class RecipeStatus { kImplemented, kRequiresGenerator, kRequiresSource };

struct RecipeInfo {
  int id;
  std::string_view source;
  std::string_view task;
  TaskType task_type;
  std::string_view adapters;
  int size;  // samples in the reference training mix
  bool llm;
  std::string_view description;
  RecipeStatus status;
};

// All 38 recipes of the reference training mix, in id order.
std::span<const RecipeInfo> recipe_registry();
const RecipeInfo& recipe_info(int id);

struct SeedData {
  std::vector<EsciRow> esci;
  std::vector<ReviewRow> reviews;
  std::vector<SessionRow> sessions;
};

struct DatasetBuildOptions {
  std::vector<int> recipes;
  uint64_t seed = 42;
  int mc_options = 4;
  int session_distractors = 5;
  int retrieval_candidates = 6;
};

struct DatasetBuildResult {
  std::vector<TrainingSample> samples;
  std::map<int, size_t> skipped;  // recipe id -> declined groups
};

/// Runs the requested recipes, ordered by (recipe id, group key). Throws
/// Errc::kRecipeUnavailable for recipes that need an external generator or a
/// source dataset not present in SeedData.
DatasetBuildResult build_dataset(const SeedData& data, const DatasetBuildOptions& options);

nlohmann::json sample_to_json(const TrainingSample& sample);

/// One {"prompt","answer","task_type","recipe_id"} object per line.
void emit_jsonl(std::span<const TrainingSample> samples, const std::filesystem::path& path);

std::vector<EsciRow> read_esci_csv(const std::filesystem::path& path);
std::vector<ReviewRow> read_reviews_csv(const std::filesystem::path& path);
std::vector<SessionRow> read_sessions_csv(const std::filesystem::path& path);

// RFC 4180 subset: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace forge
