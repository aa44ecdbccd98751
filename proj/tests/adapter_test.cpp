// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/adapter.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "forge/error.hpp"
#include "forge/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace forge {
namespace {

Matrix random_matrix(Pcg32& rng, int64_t r, int64_t c, float range = 1.0f) {
  Matrix m(r, c);
  for (float& v : m.data) v = uniform_float(rng, -range, range);
  return m;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double d = 0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(double(a[i]) - double(b[i])));
  return d;
}

TEST(ApplyDelta, ZeroScaleReturnsBaseBitwise) {
  Pcg32 rng(1);
  const Matrix base = random_matrix(rng, 5, 7);
  const LoraFactors f{random_matrix(rng, 5, 2), random_matrix(rng, 2, 7)};
  EXPECT_EQ(apply_delta(base, f, 0.0f, 0.5f), base);
}

TEST(ApplyDelta, ScalarExample) {
  const Matrix base(1, 1, {0.0f});
  const LoraFactors f{Matrix(1, 1, {2.0f}), Matrix(1, 1, {3.0f})};
  EXPECT_EQ(apply_delta(base, f, 1.0f, 1.0f).data[0], 6.0f);
}

TEST(ApplyDelta, MatchesDenseOracle) {
  Pcg32 rng(2);
  const Matrix base = random_matrix(rng, 8, 8);
  const LoraFactors f{random_matrix(rng, 8, 2), random_matrix(rng, 2, 8)};
  const float s_lora = 32.0f / 64.0f;
  const Matrix out = apply_delta(base, f, 0.56f, s_lora);
  const auto ab = oracle::matmul(f.a.data, f.b.data, 8, 2, 8);
  for (size_t i = 0; i < ab.size(); ++i) {
    EXPECT_NEAR(out.data[i], base.data[i] + 0.56 * s_lora * ab[i], 1e-6);
  }
}

TEST(ApplyDelta, ShapeMismatchAndNonFinite) {
  const Matrix base(2, 2);
  EXPECT_THROW(apply_delta(base, {Matrix(3, 1), Matrix(1, 2)}, 1.0f, 1.0f), Error);
  const LoraFactors huge{Matrix(2, 1, {3e38f, 3e38f}), Matrix(1, 2, {10.0f, 10.0f})};
  try {
    apply_delta(base, huge, 1.0f, 1.0f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNonFinite);
  }
}

TEST(WiseFt, UnitAlphaIsIdentity) {
  const TensorArchive base = random_base(toy_layout(8, 16, 1), 4);
  const LoraAdapter a = random_adapter(base, "v8", 4, 8, 5);
  const LoraAdapter r = wise_ft_rescale(a, 1.0);
  for (const auto& [t, f] : a.targets) {
    EXPECT_EQ(r.targets.at(t).a, f.a);
    EXPECT_EQ(r.targets.at(t).b, f.b);
  }
}

TEST(WiseFt, QuarterAlphaHalvesFactors) {
  LoraAdapter a;
  a.rank = 1;
  a.alpha = 1;
  a.targets["w"] = {Matrix(1, 1, {2.0f}), Matrix(1, 1, {3.0f})};
  const LoraAdapter r = wise_ft_rescale(a, 0.25);
  EXPECT_EQ(r.targets.at("w").a.data[0], 1.0f);
  EXPECT_EQ(r.targets.at("w").b.data[0], 1.5f);
  EXPECT_EQ(apply_delta(Matrix(1, 1), r.targets.at("w"), 1.0f, 1.0f).data[0], 1.5f);
}

TEST(WiseFt, RescaledAtOneEqualsOriginalAtAlpha) {
  Pcg32 rng(6);
  const Matrix base = random_matrix(rng, 16, 12);
  LoraAdapter a;
  a.rank = 4;
  a.alpha = 8;
  a.targets["w"] = {random_matrix(rng, 16, 4, 0.2f), random_matrix(rng, 4, 12, 0.2f)};
  const float s = static_cast<float>(a.lora_scale());
  const Matrix direct = apply_delta(base, a.targets.at("w"), 0.56f, s);
  const Matrix rescaled = apply_delta(base, wise_ft_rescale(a, 0.56).targets.at("w"), 1.0f, s);
  EXPECT_LE(max_abs_diff(direct.data, rescaled.data), 1e-6);
}

TEST(WiseFt, NegativeAlphaRejected) {
  LoraAdapter a;
  EXPECT_THROW(wise_ft_rescale(a, -0.1), Error);
}

class MergeTest : public ::testing::Test {
 protected:
  TensorArchive base = random_base(toy_layout(16, 24, 2), 11);
  LoraAdapter v8 = random_adapter(base, "v8", 8, 16, 12);
  LoraAdapter v9b = random_adapter(base, "v9b", 8, 16, 13);
};

TEST_F(MergeTest, EmptyPlanCopiesBase) {
  const TensorArchive out = execute_merge(base, MergePlan{});
  EXPECT_TRUE(bitwise_equal(out, base));
}

TEST_F(MergeTest, ZeroWeightsAreBitwiseBase) {
  MergePlan plan{{{v8, 0.0, std::nullopt}, {v9b, 0.0, std::nullopt}}};
  const TensorArchive out = execute_merge(base, plan, 3);
  for (const auto& [name, t] : base.tensors) EXPECT_TRUE(bitwise_equal(out.tensors.at(name), t)) << name;
}

TEST_F(MergeTest, MatchesOneShotOracleAndCommutes) {
  MergePlan forward{{{v8, 0.56, std::nullopt}, {v9b, 0.25, std::nullopt}}};
  MergePlan reverse{{{v9b, 0.25, std::nullopt}, {v8, 0.56, std::nullopt}}};
  const TensorArchive a = execute_merge(base, forward, 2);
  const TensorArchive b = execute_merge(base, reverse, 1);
  for (const auto& [name, t] : base.tensors) {
    const Tensor& out = a.tensors.at(name);
    if (!v8.targets.count(name)) {
      EXPECT_TRUE(bitwise_equal(out, t));
      continue;
    }
    const auto& f1 = v8.targets.at(name);
    const auto& f2 = v9b.targets.at(name);
    const auto d1 = oracle::matmul(f1.a.data, f1.b.data, f1.a.rows, f1.a.cols, f1.b.cols);
    const auto d2 = oracle::matmul(f2.a.data, f2.b.data, f2.a.rows, f2.a.cols, f2.b.cols);
    for (size_t i = 0; i < t.values.size(); ++i) {
      const double expect = t.values[i] + 0.56 * v8.lora_scale() * d1[i] + 0.25 * v9b.lora_scale() * d2[i];
      ASSERT_NEAR(out.values[i], expect, 1e-6) << name << "[" << i << "]";
    }
    EXPECT_LE(max_abs_diff(out.values, b.tensors.at(name).values), 1e-6);
  }
}

TEST_F(MergeTest, MergeIsLinear) {
  const TensorArchive both = execute_merge(base, {{{v8, 0.7, std::nullopt}, {v9b, 0.3, std::nullopt}}});
  const TensorArchive first = execute_merge(base, {{{v8, 0.7, std::nullopt}}});
  const TensorArchive then = execute_merge(first, {{{v9b, 0.3, std::nullopt}}});
  for (const auto& [name, t] : both.tensors) {
    EXPECT_LE(max_abs_diff(t.values, then.tensors.at(name).values), 1e-6) << name;
  }
}

TEST_F(MergeTest, ContinuousInAlpha) {
  const double alpha = 0.4;
  const TensorArchive a = execute_merge(base, {{{wise_ft_rescale(v8, alpha), 1.0, std::nullopt}}});
  const TensorArchive b = execute_merge(base, {{{wise_ft_rescale(v8, alpha + 1e-8), 1.0, std::nullopt}}});
  for (const auto& [name, t] : a.tensors) EXPECT_LE(max_abs_diff(t.values, b.tensors.at(name).values), 1e-6);
}

TEST_F(MergeTest, ProvenanceRecorded) {
  const TensorArchive out = execute_merge(base, {{{v8, 0.56, std::nullopt}, {v9b, 0.25, 1.0}}});
  const auto j = nlohmann::json::parse(out.metadata.at(std::string(kMergeMetadataKey)));
  ASSERT_EQ(j["steps"].size(), 2u);
  EXPECT_EQ(j["steps"][0]["adapter"], "v8");
  EXPECT_DOUBLE_EQ(j["steps"][0]["weight"].get<double>(), 0.56);
  EXPECT_DOUBLE_EQ(j["steps"][0]["lora_scale"].get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(j["steps"][1]["lora_scale"].get<double>(), 1.0);
}

TEST_F(MergeTest, RejectsBadPlans) {
  EXPECT_THROW(execute_merge(base, {{{v8, -0.1, std::nullopt}}}), Error);
  EXPECT_THROW(execute_merge(base, {{{v8, std::nan(""), std::nullopt}}}), Error);
  LoraAdapter stray = v8;
  stray.targets["missing.weight"] = stray.targets.begin()->second;
  try {
    execute_merge(base, {{{stray, 0.5, std::nullopt}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
  }
  LoraAdapter wrong_rank = v8;
  wrong_rank.rank = 3;
  EXPECT_THROW(execute_merge(base, {{{wrong_rank, 0.5, std::nullopt}}}), Error);
}

TEST_F(MergeTest, HeavyWeightWarns) {
  std::vector<std::string> seen;
  auto previous = set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  execute_merge(base, {{{v8, 1.6, std::nullopt}}});
  execute_merge(base, {{{v8, 1.2, std::nullopt}}});
  set_warning_handler(previous);
  EXPECT_EQ(seen.size(), 1u);
}

TEST_F(MergeTest, AdapterArchiveRoundTrip) {
  testing::TempDir dir;
  write_adapter(v8, dir / "v8.fta");
  const LoraAdapter back = read_adapter(dir / "v8.fta");
  EXPECT_EQ(back.name, "v8");
  EXPECT_EQ(back.rank, 8);
  EXPECT_DOUBLE_EQ(back.alpha, 16.0);
  ASSERT_EQ(back.targets.size(), v8.targets.size());
  for (const auto& [t, f] : v8.targets) {
    EXPECT_EQ(back.targets.at(t).a, f.a);
    EXPECT_EQ(back.targets.at(t).b, f.b);
  }
}

TEST(QloraDefaults, ScaleIsOneHalf) {
  LoraAdapter a;
  EXPECT_EQ(a.rank, 64);
  EXPECT_DOUBLE_EQ(a.alpha, 32.0);
  EXPECT_DOUBLE_EQ(a.lora_scale(), 0.5);
  EXPECT_DOUBLE_EQ(QloraDefaults::kLearningRate, 0.0002);
  EXPECT_EQ(QloraDefaults::kGradientAccumulation, 4);
}

}  // namespace
}  // namespace forge
