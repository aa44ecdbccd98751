// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/dataset.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "forge/error.hpp"
#include "forge/parser.hpp"
#include "forge/rng.hpp"
#include "test_support.hpp"

namespace forge {
namespace {

const std::filesystem::path kData = FORGE_DATA_DIR;

SeedData fixture_data() {
  return {read_esci_csv(kData / "esci.csv"), read_reviews_csv(kData / "reviews.csv"),
          read_sessions_csv(kData / "sessions.csv")};
}

std::vector<int> implemented_recipes() {
  std::vector<int> out;
  for (const RecipeInfo& r : recipe_registry()) {
    if (r.status == RecipeStatus::kImplemented) out.push_back(r.id);
  }
  return out;
}

EsciRow esci(std::string query, std::string title, EsciLabel label, std::string brand = "Acme") {
  EsciRow r;
  r.query = std::move(query);
  r.product_id = "P-" + title;
  r.title = std::move(title);
  r.brand = std::move(brand);
  r.label = label;
  return r;
}

TrainingSample sample_of(const RecipeResult& r) {
  EXPECT_TRUE(std::holds_alternative<TrainingSample>(r));
  return std::get<TrainingSample>(r);
}

// Option lines "i. text" in prompt order.
std::vector<std::string> option_lines(const std::string& prompt) {
  std::vector<std::string> out;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    const std::string prefix = std::to_string(out.size()) + ". ";
    if (line.rfind(prefix, 0) == 0) out.push_back(line.substr(prefix.size()));
  }
  return out;
}

TEST(GoldOrder, PriorityExamples) {
  using L = EsciLabel;
  const std::vector<L> ies = {L::kIrrelevant, L::kExact, L::kSubstitute};
  EXPECT_EQ(esci_gold_order(ies, 1), (std::vector<size_t>{1, 2, 0}));
  const std::vector<L> ei = {L::kExact, L::kIrrelevant};
  EXPECT_EQ(esci_gold_order(ei, 9), (std::vector<size_t>{0, 1}));
}

TEST(GoldOrder, PresentationPermutesAnswerConsistently) {
  using L = EsciLabel;
  const std::vector<L> labels = {L::kComplement, L::kExact, L::kIrrelevant, L::kSubstitute};
  const auto base = esci_gold_order(labels, 3);
  std::vector<size_t> perm(labels.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<L> shown(labels.size());
    for (size_t i = 0; i < perm.size(); ++i) shown[i] = labels[perm[i]];
    const auto order = esci_gold_order(shown, 3);
    for (size_t k = 0; k < order.size(); ++k) ASSERT_EQ(perm[order[k]], base[k]);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(EsciRanking, SkipsSingleLabelGroups) {
  const std::vector<EsciRow> g = {esci("q", "a", EsciLabel::kExact), esci("q", "b", EsciLabel::kExact)};
  EXPECT_TRUE(std::holds_alternative<RecipeSkip>(build_esci_ranking(g, 1)));
}

TEST(EsciRanking, AnswerFollowsLabelsInPrompt) {
  const std::vector<EsciRow> g = {esci("q", "irr", EsciLabel::kIrrelevant),
                                  esci("q", "exact", EsciLabel::kExact),
                                  esci("q", "sub", EsciLabel::kSubstitute)};
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const TrainingSample s = sample_of(build_esci_ranking(g, seed));
    const auto titles = option_lines(s.prompt);
    const auto parsed = parse(TaskType::kRanking, s.answer);
    ASSERT_TRUE(parsed.ok());
    const auto& ids = std::get<RankedList>(*parsed.answer).ids;
    ASSERT_EQ(ids.size(), 3u);
    EXPECT_EQ(titles[size_t(ids[0])], "exact");
    EXPECT_EQ(titles[size_t(ids[1])], "sub");
    EXPECT_EQ(titles[size_t(ids[2])], "irr");
  }
}

TEST(EsciMc, SkipsWithoutExactOrDistractors) {
  const std::vector<EsciRow> no_e = {esci("q", "a", EsciLabel::kSubstitute),
                                     esci("q", "b", EsciLabel::kIrrelevant),
                                     esci("q", "c", EsciLabel::kComplement)};
  EXPECT_TRUE(std::holds_alternative<RecipeSkip>(build_esci_mc(no_e, 1)));
  const std::vector<EsciRow> thin = {esci("q", "a", EsciLabel::kExact), esci("q", "b", EsciLabel::kIrrelevant)};
  EXPECT_TRUE(std::holds_alternative<RecipeSkip>(build_esci_mc(thin, 1)));
}

TEST(EsciMc, ReproducibleAndLabelSound) {
  const std::vector<EsciRow> g = {esci("q", "e1", EsciLabel::kExact), esci("q", "s1", EsciLabel::kSubstitute),
                                  esci("q", "c1", EsciLabel::kComplement), esci("q", "i1", EsciLabel::kIrrelevant)};
  const TrainingSample a = sample_of(build_esci_mc(g, 77));
  EXPECT_EQ(a, sample_of(build_esci_mc(g, 77)));
  const auto titles = option_lines(a.prompt);
  ASSERT_EQ(titles.size(), 4u);
  EXPECT_EQ(titles[std::stoul(a.answer)], "e1");
  EXPECT_EQ(a.prompt.rfind("Select the product title for the user query.", 0), 0u);
}

TEST(ReviewRating, AnswerIsRatingMinusOne) {
  ReviewRow r;
  r.product_title = "Lamp";
  r.review_text = "Fine";
  r.rating = 5;
  EXPECT_EQ(build_review_rating_mc(r).answer, "4");
  r.rating = 1;
  EXPECT_EQ(build_review_rating_mc(r).answer, "0");
  r.rating = 6;
  EXPECT_THROW(build_review_rating_mc(r), Error);
}

TEST(ReviewRating, HistogramMatchesSeedRatings) {
  const SeedData d = fixture_data();
  std::map<int, int> seeds;
  std::map<int, int> answers;
  for (const ReviewRow& r : d.reviews) {
    ++seeds[r.rating];
    ++answers[std::stoi(build_review_rating_mc(r).answer) + 1];
  }
  EXPECT_EQ(seeds, answers);
  EXPECT_GT(seeds.size(), 3u);
}

TEST(SessionRetrieval, ZeroDistractorsSelectsEverything) {
  SessionRow s{{"a", "b", "c"}, "z"};
  const TrainingSample t = sample_of(build_session_retrieval(s, {}, 4, 0));
  EXPECT_EQ(t.answer, "0, 1, 2");
  s.clicked_titles = {"a", "b"};
  EXPECT_TRUE(std::holds_alternative<RecipeSkip>(build_session_retrieval(s, {}, 4, 0)));
}

TEST(SessionRetrieval, DeterministicAndInRange) {
  const SessionRow s{{"a", "b", "c", "d", "e"}, "z"};
  const std::vector<std::string> pool = {"p", "q", "r", "s", "t", "u", "a", "z"};
  const TrainingSample one = sample_of(build_session_retrieval(s, pool, 5));
  EXPECT_EQ(one, sample_of(build_session_retrieval(s, pool, 5)));
  const auto titles = option_lines(one.prompt);
  EXPECT_EQ(titles.size(), 8u);
  const auto parsed = parse(TaskType::kRetrieval, one.answer);
  ASSERT_TRUE(parsed.ok());
  for (int64_t id : std::get<RetrievedSet>(*parsed.answer).ids) {
    ASSERT_LT(size_t(id), titles.size());
    EXPECT_TRUE(std::count(s.clicked_titles.begin(), s.clicked_titles.end(), titles[size_t(id)]));
  }
  EXPECT_THROW(build_session_retrieval(s, std::vector<std::string>{"p"}, 5, 5), Error);
}

TEST(Registry, CoversEveryPublishedRow) {
  const auto reg = recipe_registry();
  ASSERT_EQ(reg.size(), 38u);
  long total = 0;
  for (size_t i = 0; i < reg.size(); ++i) {
    EXPECT_EQ(reg[i].id, int(i) + 1);
    total += reg[i].size;
    if (reg[i].llm) {
      EXPECT_EQ(reg[i].status, RecipeStatus::kRequiresGenerator);
    }
  }
  EXPECT_EQ(total, 502435);
}

TEST(Registry, UnavailableRecipesExplainThemselves) {
  DatasetBuildOptions o;
  o.recipes = {1};
  try {
    build_dataset({}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kRecipeUnavailable);
    EXPECT_NE(std::string(e.what()).find("requires external generator"), std::string::npos);
  }
  o.recipes = {38};
  EXPECT_THROW(build_dataset({}, o), Error);
  o.recipes = {99};
  EXPECT_THROW(build_dataset({}, o), Error);
}

TEST(BuildDataset, EverySampleParsesUnderItsType) {
  DatasetBuildOptions o;
  o.recipes = implemented_recipes();
  const DatasetBuildResult r = build_dataset(fixture_data(), o);
  ASSERT_GT(r.samples.size(), 1000u);
  std::set<int> seen;
  for (const TrainingSample& s : r.samples) {
    seen.insert(s.recipe_id);
    EXPECT_FALSE(s.answer.empty());
    EXPECT_TRUE(s.loss_on_answer_only);
    EXPECT_EQ(recipe_info(s.recipe_id).task_type, s.task_type);
    ParseOptions po;
    po.num_candidates = static_cast<int64_t>(option_lines(s.prompt).size());
    po.strict = true;
    const ParseOutcome p = parse(s.task_type, s.answer, po);
    ASSERT_TRUE(p.ok()) << s.recipe_id << ": " << s.answer << " " << p.failure_reason;
  }
  EXPECT_EQ(seen.size(), o.recipes.size());
}

TEST(BuildDataset, EsciMcLabelSoundnessOnFixtures) {
  const SeedData d = fixture_data();
  std::map<std::pair<std::string, std::string>, std::set<EsciLabel>> labels;
  for (const EsciRow& r : d.esci) labels[{r.query, r.title}].insert(r.label);
  DatasetBuildOptions o;
  o.recipes = {29};
  const DatasetBuildResult r = build_dataset(d, o);
  ASSERT_FALSE(r.samples.empty());
  for (const TrainingSample& s : r.samples) {
    const auto q0 = s.prompt.find("Query: ") + 7;
    const std::string query = s.prompt.substr(q0, s.prompt.find('\n', q0) - q0);
    const auto titles = option_lines(s.prompt);
    const size_t answer = std::stoul(s.answer);
    for (size_t i = 0; i < titles.size(); ++i) {
      const bool exact = labels.at({query, titles[i]}).count(EsciLabel::kExact) > 0;
      EXPECT_EQ(exact, i == answer) << query << " / " << titles[i];
    }
  }
}

TEST(BuildDataset, SeedChangesOutputAndOrderIsFixed) {
  const SeedData d = fixture_data();
  DatasetBuildOptions a;
  a.recipes = {35, 5, 29};
  DatasetBuildOptions b = a;
  b.recipes = {29, 5, 35, 5};
  const auto ra = build_dataset(d, a).samples;
  EXPECT_EQ(ra, build_dataset(d, b).samples);
  EXPECT_EQ(ra.front().recipe_id, 5);
  b.seed = 43;
  EXPECT_NE(ra, build_dataset(d, b).samples);
}

TEST(EmitJsonl, EmptyAndByteStable) {
  testing::TempDir dir;
  emit_jsonl({}, dir / "empty.jsonl");
  EXPECT_EQ(testing::slurp(dir / "empty.jsonl"), "");

  DatasetBuildOptions o;
  o.recipes = {7, 33};
  const auto samples = build_dataset(fixture_data(), o).samples;
  emit_jsonl(samples, dir / "a.jsonl");
  emit_jsonl(samples, dir / "b.jsonl");
  const std::string a = testing::slurp(dir / "a.jsonl");
  EXPECT_EQ(a, testing::slurp(dir / "b.jsonl"));
  const auto first = nlohmann::json::parse(a.substr(0, a.find('\n')));
  EXPECT_EQ(first.size(), 4u);
  EXPECT_EQ(first.at("task_type"), "multiple_choice");
  EXPECT_THROW(emit_jsonl(samples, "/nonexistent-dir/x.jsonl"), Error);
}

TEST(Csv, QuotedFieldsAndLoaders) {
  const auto rows = parse_csv("a,\"b, c\",\"say \"\"hi\"\"\"\r\n1,,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b, c", "say \"hi\""}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "", "3"}));

  testing::TempDir dir;
  testing::spit(dir / "s.csv", "clicked_titles,purchased_title\n a | b |c ,z\n");
  const auto sessions = read_sessions_csv(dir / "s.csv");
  ASSERT_EQ(sessions.size(), 1u);
  EXPECT_EQ(sessions[0].clicked_titles, (std::vector<std::string>{"a", "b", "c"}));
  testing::spit(dir / "e.csv", "query,title\nq,t\n");
  EXPECT_THROW(read_esci_csv(dir / "e.csv"), Error);
  EXPECT_THROW(read_reviews_csv(dir / "missing.csv"), Error);
}

}  // namespace
}  // namespace forge
