// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/logits.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/synthetic.hpp"

namespace forge {
namespace {

Vocab small_vocab() { return Vocab{{"</s>", "1", "2", ",", "cat"}, 0}; }

std::vector<float> random_logits(Pcg32& rng, size_t n) {
  std::vector<float> v(n);
  for (float& x : v) x = uniform_float(rng, -4, 4);
  return v;
}

TEST(Whitelist, MasksOnlyDisallowedSurfaces) {
  const auto p = whitelist_processor(small_vocab(), kDigitsAndComma);
  const std::vector<float> in = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f};
  const auto out = p({}, {}, in);
  EXPECT_EQ(out[0], 0.1f);
  EXPECT_EQ(out[1], 0.2f);
  EXPECT_EQ(out[2], 0.3f);
  EXPECT_EQ(out[3], 0.4f);
  EXPECT_TRUE(is_masked(out[4]));
}

TEST(Whitelist, SpaceAlwaysAllowed) {
  const Vocab v{{"</s>", " ", "1 2", "a b"}, 0};
  const auto out = whitelist_processor(v, "12")({}, {}, std::vector<float>{0, 1, 2, 3});
  EXPECT_EQ(out[1], 1.0f);
  EXPECT_EQ(out[2], 2.0f);
  EXPECT_TRUE(is_masked(out[3]));
}

TEST(Whitelist, AllAllowedIsIdentity) {
  const auto p = whitelist_processor(small_vocab(), "12,cat");
  Pcg32 rng(1);
  const auto in = random_logits(rng, 5);
  EXPECT_EQ(p({}, {}, in), in);
}

TEST(Whitelist, ConfigurationErrors) {
  EXPECT_THROW(whitelist_processor(small_vocab(), ""), Error);
  const Vocab letters{{"</s>", "cat", "dog"}, 0};
  try {
    whitelist_processor(letters, kDigitsAndComma);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kConfiguration);
  }
  EXPECT_THROW(whitelist_processor(Vocab{{"a"}, 3}, "a"), Error);
}

TEST(PromptBoost, ZeroIsIdentity) {
  Pcg32 rng(2);
  const auto in = random_logits(rng, 12);
  const std::vector<TokenId> prompt = {1, 4, 4, 7};
  EXPECT_EQ(prompt_boost_processor(0.0f)(prompt, {}, in), in);
}

TEST(PromptBoost, AddsOncePerPromptToken) {
  std::vector<float> in(12);
  for (size_t i = 0; i < in.size(); ++i) in[i] = 0.25f * static_cast<float>(i);
  const std::vector<TokenId> prompt = {5, 9, 5};
  const auto out = prompt_boost_processor(2.5f)(prompt, {}, in);
  for (size_t i = 0; i < in.size(); ++i) {
    const float expect = (i == 5 || i == 9) ? in[i] + 2.5f : in[i];
    EXPECT_EQ(out[i], expect) << i;
  }
}

TEST(PromptBoost, NeverLowersPromptTokenRank) {
  Pcg32 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_logits(rng, 20);
    const std::vector<TokenId> prompt = {TokenId(rng.bounded(20)), TokenId(rng.bounded(20))};
    const auto out = prompt_boost_processor(1.5f)(prompt, {}, in);
    for (TokenId t : prompt) {
      const auto rank = [&](const std::vector<float>& v) {
        return std::count_if(v.begin(), v.end(), [&](float x) { return x > v[size_t(t)]; });
      };
      EXPECT_LE(rank(out), rank(in));
    }
  }
}

TEST(PromptBoost, NonFiniteRejected) {
  EXPECT_THROW(prompt_boost_processor(INFINITY), Error);
}

TEST(Chain, EmptyChainIsIdentity) {
  Pcg32 rng(4);
  const auto in = random_logits(rng, 7);
  EXPECT_EQ(apply_chain({}, {}, {}, in), in);
}

TEST(Chain, WhitelistAndBoostCommuteOnAllowedPrompt) {
  const Vocab v{{"</s>", "1", "2", "3", ",", "cat", "dog", " "}, 0};
  Pcg32 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto in = random_logits(rng, v.size());
    const std::vector<TokenId> prompt = {TokenId(1 + rng.bounded(4)), TokenId(1 + rng.bounded(4))};
    const LogitsProcessorChain wb{{whitelist_processor(v, kDigitsAndComma), prompt_boost_processor(3)}};
    const LogitsProcessorChain bw{{prompt_boost_processor(3), whitelist_processor(v, kDigitsAndComma)}};
    EXPECT_EQ(apply_chain(wb, prompt, {}, in), apply_chain(bw, prompt, {}, in));
  }
}

TEST(Chain, MaskedTokenNeverWinsArgmax) {
  const Vocab v{{"</s>", "1", "2", "3", ",", "cat", "dog", "7x"}, 0};
  const LogitsProcessorChain chain{{whitelist_processor(v, kDigitsAndComma), prompt_boost_processor(8)}};
  Pcg32 rng(6);
  const std::vector<TokenId> prompt = {5, 6, 7};
  for (int trial = 0; trial < 10000; ++trial) {
    const auto out = apply_chain(chain, prompt, {}, random_logits(rng, v.size()));
    const auto best = std::max_element(out.begin(), out.end()) - out.begin();
    ASSERT_TRUE(best <= 4) << best;
    for (float x : out) ASSERT_FALSE(std::isnan(x));
  }
}

TEST(Chain, LengthChangeRejected) {
  const LogitsProcessor shrink = [](std::span<const TokenId>, std::span<const TokenId>,
                                    std::span<const float> l) {
    return std::vector<float>(l.begin(), l.end() - 1);
  };
  try {
    apply_chain({{shrink}}, {}, {}, std::vector<float>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
  }
}

TEST(ChainConfig, ParsesDocumentedJson) {
  const auto j = nlohmann::json::parse(
      R"([{"type":"whitelist","chars":"0123456789,"},{"type":"prompt_boost","boost":5.0}])");
  const ChainSpec spec = chain_spec_from_json(j);
  ASSERT_EQ(spec.size(), 2u);
  EXPECT_EQ(spec[0].kind, StageSpec::Kind::kWhitelist);
  EXPECT_EQ(spec[0].chars, "0123456789,");
  EXPECT_EQ(spec[1].kind, StageSpec::Kind::kPromptBoost);
  EXPECT_EQ(spec[1].boost, 5.0f);
  EXPECT_EQ(chain_spec_from_json(chain_spec_to_json(spec)), spec);
}

TEST(ChainConfig, PerTaskObjectAndErrors) {
  const auto j = nlohmann::json::parse(
      R"({"default":[],"ranking":[{"type":"whitelist"}],"named_entity_recognition":[{"type":"prompt_boost"}]})");
  const ChainConfig c = ChainConfig::from_json(j);
  EXPECT_TRUE(c.for_task(TaskType::kGeneration).empty());
  EXPECT_EQ(c.for_task(TaskType::kRanking)[0].chars, std::string(kDigitsAndComma));
  EXPECT_EQ(c.for_task(TaskType::kNamedEntityRecognition)[0].boost, kDefaultPromptBoost);
  EXPECT_EQ(ChainConfig::from_json(c.to_json()).to_json(), c.to_json());

  EXPECT_THROW(ChainConfig::from_json(nlohmann::json::parse(R"({"poetry":[]})")), Error);
  EXPECT_THROW(chain_spec_from_json(nlohmann::json::parse(R"([{"type":"beam"}])")), Error);
  EXPECT_THROW(chain_spec_from_json(nlohmann::json::parse(R"([{"type":"whitelist","boost":1}])")),
               Error);
  EXPECT_THROW(chain_spec_from_json(nlohmann::json::parse(R"({"type":"whitelist"})")), Error);
}

TEST(ChainConfig, RecommendedDefaults) {
  const ChainConfig c = recommended_chain_config();
  EXPECT_EQ(c.for_task(TaskType::kMultipleChoice)[0].chars, std::string(kDigitsAndComma));
  EXPECT_EQ(c.for_task(TaskType::kNamedEntityRecognition)[0].kind, StageSpec::Kind::kPromptBoost);
  EXPECT_TRUE(c.for_task(TaskType::kGeneration).empty());
}

}  // namespace
}  // namespace forge
