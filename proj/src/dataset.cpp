// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <tuple>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge {

using nlohmann::json;

namespace {

constexpr size_t kMaxRankingCandidates = 10;
constexpr int kPairRankingSize = 5;
constexpr std::string_view kAnswerNumber = "Answer with the option number only.";

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i) + ". " + items[i] + "\n";
  }
  return out;
}

std::string join_indices(const std::vector<size_t>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

int label_priority(EsciLabel l) { return static_cast<int>(l); }

// Indices sorted by ascending priority; equal priorities are ordered by
// random keys drawn in index order.
std::vector<size_t> priority_order(const std::vector<int>& priority, Pcg32& rng) {
  std::vector<uint32_t> keys(priority.size());
  for (auto& k : keys) k = rng.next();
  std::vector<size_t> order(priority.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::tie(priority[a], keys[a], a) < std::tie(priority[b], keys[b], b);
  });
  return order;
}

// Rows of a group with duplicate titles removed; the first occurrence wins,
// except that an E row always beats a non-E row with the same title.
std::vector<EsciRow> unique_titles(std::span<const EsciRow> group) {
  std::vector<EsciRow> out;
  for (const EsciRow& r : group) {
    auto it = std::find_if(out.begin(), out.end(), [&](const EsciRow& o) { return o.title == r.title; });
    if (it == out.end()) {
      out.push_back(r);
    } else if (r.label == EsciLabel::kExact && it->label != EsciLabel::kExact) {
      *it = r;
    }
  }
  return out;
}

template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k, Pcg32& rng) {
  rng.shuffle(pool);
  pool.resize(std::min(k, pool.size()));
  return pool;
}

TrainingSample make_sample(std::string prompt, std::string answer, TaskType type, int recipe) {
  return TrainingSample{std::move(prompt), std::move(answer), type, recipe, true};
}

}  // namespace

char esci_label_char(EsciLabel label) {
  switch (label) {
    case EsciLabel::kExact: return 'E';
    case EsciLabel::kSubstitute: return 'S';
    case EsciLabel::kComplement: return 'C';
    case EsciLabel::kIrrelevant: return 'I';
  }
  return '?';
}

std::optional<EsciLabel> parse_esci_label(std::string_view s) {
  if (s == "E") return EsciLabel::kExact;
  if (s == "S") return EsciLabel::kSubstitute;
  if (s == "C") return EsciLabel::kComplement;
  if (s == "I") return EsciLabel::kIrrelevant;
  return std::nullopt;
}

RecipeResult build_esci_mc(std::span<const EsciRow> group, uint64_t rng_seed, int num_options) {
  if (num_options < 2) throw Error(Errc::kInvalidArgument, "num_options must be >= 2");
  if (group.empty()) return RecipeSkip{"empty group"};
  const std::vector<EsciRow> rows = unique_titles(group);
  std::vector<const EsciRow*> exact;
  std::vector<const EsciRow*> others;
  for (const EsciRow& r : rows) (r.label == EsciLabel::kExact ? exact : others).push_back(&r);
  if (exact.empty()) return RecipeSkip{"no E rows"};
  if (others.size() < static_cast<size_t>(num_options - 1)) return RecipeSkip{"too few S/C/I rows"};

  Pcg32 rng(rng_seed);
  const EsciRow* answer = exact[rng.bounded(static_cast<uint32_t>(exact.size()))];
  std::vector<const EsciRow*> options =
      sample_without_replacement(others, static_cast<size_t>(num_options - 1), rng);
  options.push_back(answer);
  rng.shuffle(options);

  std::vector<std::string> titles;
  size_t answer_index = 0;
  for (size_t i = 0; i < options.size(); ++i) {
    titles.push_back(options[i]->title);
    if (options[i] == answer) answer_index = i;
  }
  std::string prompt = "Select the product title for the user query.\nQuery: " + group.front().query +
                       "\n" + numbered(titles) + std::string(kAnswerNumber);
  return make_sample(std::move(prompt), std::to_string(answer_index), TaskType::kMultipleChoice, 29);
}

std::vector<size_t> esci_gold_order(std::span<const EsciLabel> presented, uint64_t rng_seed) {
  Pcg32 rng(rng_seed);
  std::vector<int> priority;
  for (EsciLabel l : presented) priority.push_back(label_priority(l));
  return priority_order(priority, rng);
}

RecipeResult build_esci_ranking(std::span<const EsciRow> group, uint64_t rng_seed) {
  std::vector<EsciRow> rows = unique_titles(group);
  std::set<EsciLabel> labels;
  for (const EsciRow& r : rows) labels.insert(r.label);
  if (labels.size() < 2) return RecipeSkip{"fewer than two distinct labels"};

  Pcg32 rng(rng_seed);
  if (rows.size() > kMaxRankingCandidates) {
    rows = sample_without_replacement(std::move(rows), kMaxRankingCandidates, rng);
    labels.clear();
    for (const EsciRow& r : rows) labels.insert(r.label);
    if (labels.size() < 2) return RecipeSkip{"sampled candidates share one label"};
  }
  rng.shuffle(rows);
  std::vector<EsciLabel> presented;
  std::vector<std::string> titles;
  for (const EsciRow& r : rows) {
    presented.push_back(r.label);
    titles.push_back(r.title);
  }
  const std::vector<size_t> order = esci_gold_order(presented, rng.next());
  std::string prompt =
      "Rank the following products by relevance to the user query, from most to least relevant.\n"
      "Query: " + group.front().query + "\n" + numbered(titles) +
      "Return the product numbers in ranked order, separated by a comma.";
  return make_sample(std::move(prompt), join_indices(order), TaskType::kRanking, 5);
}

TrainingSample build_review_rating_mc(const ReviewRow& row) {
  if (row.rating < 1 || row.rating > 5) {
    throw Error(Errc::kInvalidArgument, "review rating " + std::to_string(row.rating) + " outside 1..5");
  }
  std::string prompt = "Given a product review, estimate the rating of the review.\nProduct: " +
                       row.product_title + "\nReview: " + row.review_text + "\n" +
                       numbered({"1", "2", "3", "4", "5"}) + std::string(kAnswerNumber);
  return make_sample(std::move(prompt), std::to_string(row.rating - 1), TaskType::kMultipleChoice, 7);
}

RecipeResult build_session_retrieval(const SessionRow& row, std::span<const std::string> distractor_pool,
                                     uint64_t rng_seed, int num_distractors) {
  if (num_distractors < 0) throw Error(Errc::kInvalidArgument, "num_distractors must be >= 0");
  std::vector<std::string> clicks;
  for (const std::string& t : row.clicked_titles) {
    if (t != row.purchased_title && std::find(clicks.begin(), clicks.end(), t) == clicks.end()) {
      clicks.push_back(t);
    }
  }
  if (clicks.size() < 3) return RecipeSkip{"fewer than three distinct clicks"};

  std::vector<std::string> pool;
  for (const std::string& t : distractor_pool) {
    const bool own = t == row.purchased_title ||
                     std::find(row.clicked_titles.begin(), row.clicked_titles.end(), t) !=
                         row.clicked_titles.end();
    if (!own && std::find(pool.begin(), pool.end(), t) == pool.end()) pool.push_back(t);
  }
  if (pool.size() < static_cast<size_t>(num_distractors)) {
    throw Error(Errc::kInvalidArgument, "distractor pool holds " + std::to_string(pool.size()) +
                                            " titles, need " + std::to_string(num_distractors));
  }

  Pcg32 rng(rng_seed);
  std::vector<std::string> truth = sample_without_replacement(clicks, 3, rng);
  std::vector<std::string> distractors =
      sample_without_replacement(pool, static_cast<size_t>(num_distractors), rng);
  std::vector<std::pair<std::string, bool>> candidates;
  for (auto& t : truth) candidates.emplace_back(t, true);
  for (auto& t : distractors) candidates.emplace_back(t, false);
  rng.shuffle(candidates);

  std::vector<std::string> titles;
  std::vector<size_t> answer;
  for (size_t i = 0; i < candidates.size(); ++i) {
    titles.push_back(candidates[i].first);
    if (candidates[i].second) answer.push_back(i);
  }
  std::string prompt =
      "A user purchased the product below. Select 3 products the user clicked on before the purchase.\n"
      "Purchased: " + row.purchased_title + "\n" + numbered(titles) +
      "Return the 3 candidate numbers separated by a comma.";
  return make_sample(std::move(prompt), join_indices(answer), TaskType::kRetrieval, 31);
}

RecipeResult build_esci_brand_mc(const EsciRow& row, std::span<const std::string> brands,
                                 uint64_t rng_seed, int num_options) {
  if (row.brand.empty()) return RecipeSkip{"no brand"};
  std::vector<std::string> others;
  for (const std::string& b : brands) {
    if (b != row.brand && !b.empty() && std::find(others.begin(), others.end(), b) == others.end()) {
      others.push_back(b);
    }
  }
  if (others.size() < static_cast<size_t>(num_options - 1)) return RecipeSkip{"too few other brands"};
  Pcg32 rng(rng_seed);
  std::vector<std::string> options =
      sample_without_replacement(others, static_cast<size_t>(num_options - 1), rng);
  options.push_back(row.brand);
  rng.shuffle(options);
  const auto answer = static_cast<size_t>(
      std::find(options.begin(), options.end(), row.brand) - options.begin());
  std::string prompt = "Given the product title, choose the brand of the product.\nTitle: " + row.title +
                       "\n" + numbered(options) + std::string(kAnswerNumber);
  return make_sample(std::move(prompt), std::to_string(answer), TaskType::kMultipleChoice, 32);
}

TrainingSample build_esci_relation_mc(const EsciRow& row) {
  std::string prompt =
      "Given a user query and a product, choose the relationship between them.\nQuery: " + row.query +
      "\nProduct: " + row.title + "\n" +
      numbered({"Exact", "Substitute", "Complement", "Irrelevant"}) + std::string(kAnswerNumber);
  return make_sample(std::move(prompt), std::to_string(label_priority(row.label)),
                     TaskType::kMultipleChoice, 33);
}

RecipeResult build_esci_exact_retrieval(std::span<const EsciRow> group, uint64_t rng_seed,
                                        int num_candidates) {
  if (num_candidates < 2) throw Error(Errc::kInvalidArgument, "num_candidates must be >= 2");
  const std::vector<EsciRow> rows = unique_titles(group);
  std::vector<const EsciRow*> exact;
  std::vector<const EsciRow*> others;
  for (const EsciRow& r : rows) (r.label == EsciLabel::kExact ? exact : others).push_back(&r);
  if (exact.empty()) return RecipeSkip{"no E rows"};
  if (others.empty()) return RecipeSkip{"no non-E rows"};

  Pcg32 rng(rng_seed);
  const size_t n_exact = std::min<size_t>({3, exact.size(), static_cast<size_t>(num_candidates - 1)});
  std::vector<const EsciRow*> picked = sample_without_replacement(exact, n_exact, rng);
  const size_t n_other = std::min(others.size(), static_cast<size_t>(num_candidates) - n_exact);
  for (const EsciRow* r : sample_without_replacement(others, n_other, rng)) picked.push_back(r);
  rng.shuffle(picked);

  std::vector<std::string> titles;
  std::vector<size_t> answer;
  for (size_t i = 0; i < picked.size(); ++i) {
    titles.push_back(picked[i]->title);
    if (picked[i]->label == EsciLabel::kExact) answer.push_back(i);
  }
  std::string prompt =
      "Given the user query, select the products that are an exact match, not a substitute, "
      "complement, or irrelevant product.\nQuery: " + group.front().query + "\n" + numbered(titles) +
      "Return at most 3 candidate numbers separated by a comma.";
  return make_sample(std::move(prompt), join_indices(answer), TaskType::kRetrieval, 35);
}

RecipeResult build_review_helpfulness_ranking(std::span<const ReviewRow> reviews, uint64_t rng_seed) {
  std::vector<ReviewRow> rows(reviews.begin(), reviews.end());
  if (rows.size() < 2) return RecipeSkip{"fewer than two reviews"};
  Pcg32 rng(rng_seed);
  if (rows.size() > kMaxRankingCandidates) {
    rows = sample_without_replacement(std::move(rows), kMaxRankingCandidates, rng);
  }
  std::set<int> votes;
  for (const ReviewRow& r : rows) votes.insert(r.helpful_votes);
  if (votes.size() < 2) return RecipeSkip{"all reviews equally helpful"};
  rng.shuffle(rows);
  std::vector<int> priority;
  std::vector<std::string> texts;
  for (const ReviewRow& r : rows) {
    priority.push_back(-r.helpful_votes);
    texts.push_back(r.review_text);
  }
  const std::vector<size_t> order = priority_order(priority, rng);
  std::string prompt =
      "Given a product title and multiple reviews, rank the reviews by helpfulness, most helpful "
      "first.\nProduct: " + rows.front().product_title + "\n" + numbered(texts) +
      "Return the review numbers in ranked order, separated by a comma.";
  return make_sample(std::move(prompt), join_indices(order), TaskType::kRanking, 36);
}

namespace {

RecipeResult build_esci_query_ranking(std::span<const EsciRow> rows_for_product, uint64_t rng_seed) {
  std::vector<EsciRow> rows;
  for (const EsciRow& r : rows_for_product) {
    if (std::none_of(rows.begin(), rows.end(), [&](const EsciRow& o) { return o.query == r.query; })) {
      rows.push_back(r);
    }
  }
  std::set<EsciLabel> labels;
  for (const EsciRow& r : rows) labels.insert(r.label);
  if (rows.size() < 2 || labels.size() < 2) return RecipeSkip{"fewer than two distinct labels"};
  Pcg32 rng(rng_seed);
  if (rows.size() > kMaxRankingCandidates) {
    rows = sample_without_replacement(std::move(rows), kMaxRankingCandidates, rng);
  }
  rng.shuffle(rows);
  std::vector<int> priority;
  std::vector<std::string> queries;
  for (const EsciRow& r : rows) {
    priority.push_back(label_priority(r.label));
    queries.push_back(r.query);
  }
  const std::vector<size_t> order = priority_order(priority, rng);
  std::string prompt =
      "Given the product, rank the following user queries from most to least relevant.\nProduct: " +
      rows.front().title + "\n" + numbered(queries) +
      "Return the query numbers in ranked order, separated by a comma.";
  return make_sample(std::move(prompt), join_indices(order), TaskType::kRanking, 30);
}

RecipeResult build_esci_pair_ranking(std::span<const EsciRow> pairs, uint64_t rng_seed) {
  std::set<EsciLabel> labels;
  for (const EsciRow& r : pairs) labels.insert(r.label);
  if (pairs.size() < 2 || labels.size() < 2) return RecipeSkip{"fewer than two distinct labels"};
  Pcg32 rng(rng_seed);
  std::vector<int> priority;
  std::vector<std::string> lines;
  for (const EsciRow& r : pairs) {
    priority.push_back(label_priority(r.label));
    lines.push_back("Query: " + r.query + " | Product: " + r.title);
  }
  const std::vector<size_t> order = priority_order(priority, rng);
  std::string prompt =
      "Rank the following query and product pairs from most related to least related.\n" +
      numbered(lines) + "Return the pair numbers in ranked order, separated by a comma.";
  return make_sample(std::move(prompt), join_indices(order), TaskType::kRanking, 34);
}

using TT = TaskType;
constexpr auto MC = TT::kMultipleChoice;
constexpr auto RK = TT::kRanking;
constexpr auto NER = TT::kNamedEntityRecognition;
constexpr auto RT = TT::kRetrieval;
constexpr auto GEN = TT::kGeneration;
constexpr auto OK = RecipeStatus::kImplemented;
constexpr auto LLM = RecipeStatus::kRequiresGenerator;
constexpr auto SRC = RecipeStatus::kRequiresSource;

constexpr RecipeInfo kRegistry[] = {
    {1, "Amazon-M2", "KDD Cup2024 Task 2", MC, "v7, v8", 2350, true, "Select product categories given product attributes", LLM},
    {2, "Amazon Reviews 2023", "KDD Cup2024 Task 3", RT, "v7, v7b, v8", 7373, true, "Given a product type and sentiment, select 3 likely review snippets", LLM},
    {3, "Amazon Reviews 2023", "KDD Cup2024 Task 7", RT, "v7, v7b, v8", 3608, true, "Given a product type and a review, select 3 aspects covered by the review", LLM},
    {4, "Amazon Reviews 2023", "KDD Cup2024 Task 10", MC, "v7, v7b, v8", 10000, true, "Which category complements the product type best", LLM},
    {5, "ESCI-data", "KDD Cup2024 Task 12", RK, "v7, v8", 16728, false, "Rank products for a query by E > S > C > I", OK},
    {6, "Amazon Reviews 2023", "KDD Cup2024 Task 14", RK, "v7, v7b, v8", 5815, false, "Given a title a customer buys, rank other titles they will like", SRC},
    {7, "Amazon Reviews 2023", "KDD Cup2024 Task 15", MC, "v7, v7b, v8", 10000, false, "Given a product review, estimate the rating", OK},
    {8, "ESCI-data", "KDD Cup2024 Task 16", MC, "v7, v8", 10000, false, "Task definition not published", SRC},
    {9, "Amazon-M2", "KDD Cup2024 Task 17", GEN, "v7, v8", 10000, false, "Needs Amazon-M2 product metadata", SRC},
    {10, "Amazon-M2", "KDD Cup2024 Task 18", MC, "v7, v8", 10000, false, "Needs Amazon-M2 product metadata", SRC},
    {11, "NingLab/ECInstruct", "Attribute Value Extraction", NER, "v7, v8", 19622, true, "", LLM},
    {12, "NingLab/ECInstruct", "Multiclass Product Classification", MC, "v7, v8", 10000, true, "", LLM},
    {13, "NingLab/ECInstruct", "Product Relation Prediction", MC, "v7, v8", 10000, true, "", LLM},
    {14, "NingLab/ECInstruct", "Query Product Rank", RT, "v7, v8", 10000, true, "", LLM},
    {15, "NingLab/ECInstruct", "Sequential Recommendation", MC, "v7, v8", 10000, true, "", LLM},
    {16, "NingLab/ECInstruct", "Answerability Prediction", MC, "v7, v8", 10000, false, "Needs ECInstruct", SRC},
    {17, "NingLab/ECInstruct", "Product Matching", MC, "v7, v8", 4044, false, "Needs ECInstruct", SRC},
    {18, "NingLab/ECInstruct", "Product Substitute Identification", MC, "v7, v8", 10000, false, "Needs ECInstruct", SRC},
    {19, "NingLab/ECInstruct", "Sentiment Analysis", MC, "v7, v8", 10000, false, "Needs ECInstruct", SRC},
    {20, "Amazon-M2", "New Idea", GEN, "v7, v8", 10000, true, "Explain product type given title and description", LLM},
    {21, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the user query that matches the product description", LLM},
    {22, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the user query that matches the product features", LLM},
    {23, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the user query that matches the product title", LLM},
    {24, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the title for the product description", LLM},
    {25, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the title for the product features", LLM},
    {26, "ESCI-data", "New Idea", MC, "v7, v8", 10000, true, "Select the product title for the user query", LLM},
    {27, "ESCI-data", "New Idea", RT, "v8", 10000, false, "Pick 3 bullet points to match product; needs bullet points", SRC},
    {28, "NingLab/ECInstruct", "New Idea", RK, "v8", 5000, false, "Rank product reviews positive to negative; needs ECInstruct", SRC},
    {29, "ESCI-data", "New Idea", MC, "v8", 5435, false, "Pick product to match query", OK},
    {30, "ESCI-data", "New Idea", RK, "v8", 5000, false, "Given product, rank queries", OK},
    {31, "KDD Cup 2023", "New Idea", RT, "v8", 10000, false, "Given purchase pick previous clicks", OK},
    {32, "ESCI-data", "New Idea", MC, "v8", 10000, false, "Given title pick brand", OK},
    {33, "ESCI-data", "New Idea", MC, "v9b", 10000, false, "Given query product pair, pick E/S/C/I relationship", OK},
    {34, "ESCI-data", "New Idea", RK, "v9b", 10000, false, "Rank query product pairs from most to least related", OK},
    {35, "ESCI-data", "New Idea", RT, "v9b", 10000, false, "Given query, select exact-match products", OK},
    {36, "Amazon Reviews 2023", "New Idea", RK, "v9b", 10000, false, "Rank reviews of a product by helpfulness", OK},
    {37, "Alpaca Cleaned", "No Changes", GEN, "v7, v8", 51760, false, "Needs Alpaca-Cleaned", SRC},
    {38, "MMLU", "No Changes", MC, "v7, v7b, v8", 115700, false, "Needs MMLU", SRC},
};

void collect(DatasetBuildResult& out, int recipe, RecipeResult r) {
  if (auto* s = std::get_if<TrainingSample>(&r)) {
    out.samples.push_back(std::move(*s));
  } else {
    ++out.skipped[recipe];
  }
}

uint64_t group_seed(uint64_t seed, int recipe, std::string_view key) {
  return derive_seed(seed, std::to_string(recipe) + ":" + std::string(key));
}

}  // namespace

std::span<const RecipeInfo> recipe_registry() { return kRegistry; }

const RecipeInfo& recipe_info(int id) {
  for (const RecipeInfo& r : kRegistry) {
    if (r.id == id) return r;
  }
  throw Error(Errc::kInvalidArgument, "no recipe " + std::to_string(id));
}

DatasetBuildResult build_dataset(const SeedData& data, const DatasetBuildOptions& options) {
  std::vector<int> recipes = options.recipes;
  std::sort(recipes.begin(), recipes.end());
  recipes.erase(std::unique(recipes.begin(), recipes.end()), recipes.end());

  for (int id : recipes) {
    const RecipeInfo& info = recipe_info(id);
    if (info.status == RecipeStatus::kRequiresGenerator) {
      throw Error(Errc::kRecipeUnavailable,
                  "recipe " + std::to_string(id) + " requires external generator");
    }
    if (info.status == RecipeStatus::kRequiresSource) {
      throw Error(Errc::kRecipeUnavailable, "recipe " + std::to_string(id) + " requires source dataset " +
                                                std::string(info.source) + " (" +
                                                std::string(info.description) + ")");
    }
  }

  std::map<std::string, std::vector<EsciRow>> by_query;
  std::map<std::string, std::vector<EsciRow>> by_product;
  for (const EsciRow& r : data.esci) {
    by_query[r.query].push_back(r);
    by_product[r.product_id].push_back(r);
  }

  DatasetBuildResult out;
  const uint64_t seed = options.seed;
  for (int id : recipes) {
    switch (id) {
      case 5:
        for (const auto& [q, rows] : by_query) collect(out, id, build_esci_ranking(rows, group_seed(seed, id, q)));
        break;
      case 7:
        for (const ReviewRow& r : data.reviews) out.samples.push_back(build_review_rating_mc(r));
        break;
      case 29:
        for (const auto& [q, rows] : by_query) {
          collect(out, id, build_esci_mc(rows, group_seed(seed, id, q), options.mc_options));
        }
        break;
      case 30:
        for (const auto& [p, rows] : by_product) {
          collect(out, id, build_esci_query_ranking(rows, group_seed(seed, id, p)));
        }
        break;
      case 31: {
        std::set<std::string> titles;
        for (const SessionRow& s : data.sessions) {
          titles.insert(s.clicked_titles.begin(), s.clicked_titles.end());
          titles.insert(s.purchased_title);
        }
        const std::vector<std::string> pool(titles.begin(), titles.end());
        for (size_t i = 0; i < data.sessions.size(); ++i) {
          collect(out, id, build_session_retrieval(data.sessions[i], pool,
                                                   group_seed(seed, id, std::to_string(i)),
                                                   options.session_distractors));
        }
        break;
      }
      case 32: {
        std::set<std::string> brand_set;
        for (const EsciRow& r : data.esci) {
          if (!r.brand.empty()) brand_set.insert(r.brand);
        }
        const std::vector<std::string> brands(brand_set.begin(), brand_set.end());
        for (const auto& [p, rows] : by_product) {
          collect(out, id, build_esci_brand_mc(rows.front(), brands, group_seed(seed, id, p),
                                               options.mc_options));
        }
        break;
      }
      case 33: {
        std::vector<const EsciRow*> rows;
        for (const EsciRow& r : data.esci) rows.push_back(&r);
        std::stable_sort(rows.begin(), rows.end(), [](const EsciRow* a, const EsciRow* b) {
          return std::tie(a->query, a->product_id) < std::tie(b->query, b->product_id);
        });
        for (const EsciRow* r : rows) out.samples.push_back(build_esci_relation_mc(*r));
        break;
      }
      case 34: {
        std::vector<EsciRow> rows = data.esci;
        Pcg32 rng(group_seed(seed, id, "pairs"));
        rng.shuffle(rows);
        for (size_t start = 0; start + kPairRankingSize <= rows.size(); start += kPairRankingSize) {
          const std::span<const EsciRow> chunk(rows.data() + start, kPairRankingSize);
          collect(out, id, build_esci_pair_ranking(chunk, group_seed(seed, id, std::to_string(start))));
        }
        break;
      }
      case 35:
        for (const auto& [q, rows] : by_query) {
          collect(out, id, build_esci_exact_retrieval(rows, group_seed(seed, id, q),
                                                      options.retrieval_candidates));
        }
        break;
      case 36: {
        std::map<std::string, std::vector<ReviewRow>> by_title;
        for (const ReviewRow& r : data.reviews) by_title[r.product_title].push_back(r);
        for (const auto& [t, rows] : by_title) {
          collect(out, id, build_review_helpfulness_ranking(rows, group_seed(seed, id, t)));
        }
        break;
      }
      default:
        throw Error(Errc::kRecipeUnavailable, "recipe " + std::to_string(id) + " is not implemented");
    }
  }
  return out;
}

json sample_to_json(const TrainingSample& sample) {
  return {{"prompt", sample.prompt},
          {"answer", sample.answer},
          {"task_type", task_type_name(sample.task_type)},
          {"recipe_id", sample.recipe_id}};
}

void emit_jsonl(std::span<const TrainingSample> samples, const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(samples.size());
  for (const TrainingSample& s : samples) rows.push_back(sample_to_json(s));
  write_jsonl(rows, path);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error(Errc::kInvalidArgument, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct CsvTable {
  std::map<std::string, size_t> columns;
  std::vector<std::vector<std::string>> rows;
  std::string path;

  const std::string& get(size_t r, const std::string& col) const {
    return rows[r][columns.at(col)];
  }
};

CsvTable load_csv(const std::filesystem::path& path, std::initializer_list<const char*> required) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto rows = parse_csv(text);
  if (rows.empty()) throw Error(Errc::kInvalidArgument, path.string() + ": missing CSV header");
  CsvTable table;
  table.path = path.string();
  for (size_t i = 0; i < rows[0].size(); ++i) table.columns[rows[0][i]] = i;
  for (const char* col : required) {
    if (!table.columns.count(col)) {
      throw Error(Errc::kInvalidArgument, path.string() + ": missing column '" + col + "'");
    }
  }
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw Error(Errc::kInvalidArgument, path.string() + ": record " + std::to_string(r) + " has " +
                                              std::to_string(rows[r].size()) + " fields, expected " +
                                              std::to_string(rows[0].size()));
    }
    table.rows.push_back(std::move(rows[r]));
  }
  return table;
}

int to_int_field(const CsvTable& t, size_t r, const char* col) {
  const std::string& s = t.get(r, col);
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(Errc::kInvalidArgument,
                t.path + ": record " + std::to_string(r + 1) + " column '" + col + "' is not an integer");
  }
}

}  // namespace

std::vector<EsciRow> read_esci_csv(const std::filesystem::path& path) {
  const CsvTable t =
      load_csv(path, {"query", "product_id", "title", "description", "brand", "esci_label", "locale"});
  std::vector<EsciRow> out;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    EsciRow row;
    row.query = t.get(r, "query");
    row.product_id = t.get(r, "product_id");
    row.title = t.get(r, "title");
    row.description = t.get(r, "description");
    row.brand = t.get(r, "brand");
    row.locale = t.get(r, "locale");
    const auto label = parse_esci_label(t.get(r, "esci_label"));
    if (!label) {
      throw Error(Errc::kInvalidArgument, path.string() + ": record " + std::to_string(r + 1) +
                                              " has an esci_label outside {E,S,C,I}");
    }
    row.label = *label;
    if (row.title.empty() || row.query.empty()) {
      throw Error(Errc::kInvalidArgument,
                  path.string() + ": record " + std::to_string(r + 1) + " has an empty query or title");
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ReviewRow> read_reviews_csv(const std::filesystem::path& path) {
  const CsvTable t = load_csv(path, {"product_title", "review_text", "rating", "helpful_votes"});
  std::vector<ReviewRow> out;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    ReviewRow row;
    row.product_title = t.get(r, "product_title");
    row.review_text = t.get(r, "review_text");
    row.rating = to_int_field(t, r, "rating");
    row.helpful_votes = to_int_field(t, r, "helpful_votes");
    if (row.rating < 1 || row.rating > 5) {
      throw Error(Errc::kInvalidArgument,
                  path.string() + ": record " + std::to_string(r + 1) + " rating outside 1..5");
    }
    if (row.product_title.empty()) {
      throw Error(Errc::kInvalidArgument,
                  path.string() + ": record " + std::to_string(r + 1) + " has an empty product title");
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<SessionRow> read_sessions_csv(const std::filesystem::path& path) {
  const CsvTable t = load_csv(path, {"clicked_titles", "purchased_title"});
  std::vector<SessionRow> out;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    SessionRow row;
    row.purchased_title = t.get(r, "purchased_title");
    const std::string& clicks = t.get(r, "clicked_titles");
    size_t start = 0;
    while (start <= clicks.size()) {
      size_t end = clicks.find('|', start);
      if (end == std::string::npos) end = clicks.size();
      std::string title = clicks.substr(start, end - start);
      const size_t b = title.find_first_not_of(' ');
      const size_t e = title.find_last_not_of(' ');
      if (b != std::string::npos) row.clicked_titles.push_back(title.substr(b, e - b + 1));
      start = end + 1;
    }
    if (row.purchased_title.empty()) {
      throw Error(Errc::kInvalidArgument,
                  path.string() + ": record " + std::to_string(r + 1) + " has an empty purchased title");
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace forge
