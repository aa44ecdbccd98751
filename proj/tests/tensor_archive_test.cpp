// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/tensor_archive.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <json.hpp>

#include "forge/error.hpp"
#include "forge/quant.hpp"
#include "forge/rng.hpp"
#include "forge/synthetic.hpp"
#include "test_support.hpp"

namespace forge {
namespace {

using nlohmann::json;

// Builds raw archive bytes from a hand-written header and data section.
std::string raw_archive(const json& header, const std::string& data) {
  const std::string text = header.dump();
  std::string out(8, '\0');
  uint64_t n = text.size();
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((n >> (8 * i)) & 0xff);
  return out + text + data;
}

Errc read_error(const std::string& bytes) {
  try {
    deserialize_archive(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "archive was accepted";
  return Errc::kIo;
}

TEST(TensorArchive, RoundTripPreservesEverything) {
  TensorArchive a;
  a.tensors["w"] = Tensor::f32({2, 3}, {1, -2, 3.5f, 0, -0.0f, 1e-30f});
  a.tensors["h"] = Tensor::f16({4}, {1.0f, 0.5f, -2.0f, 65504.0f});
  a.metadata["note"] = "unit";
  testing::TempDir dir;
  write_archive(a, dir / "a.fta");
  const TensorArchive b = read_archive(dir / "a.fta");
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_EQ(b.metadata.at("note"), "unit");
  EXPECT_EQ(b.tensors.at("h").dtype, DType::kFloat16);
}

TEST(TensorArchive, ZeroMatrixReadsBackAsZeros) {
  TensorArchive a;
  a.tensors["z"] = Tensor::f32({2, 2}, {0, 0, 0, 0});
  const TensorArchive b = deserialize_archive(serialize_archive(a));
  EXPECT_EQ(b.tensors.at("z").shape, (Shape{2, 2}));
  for (float v : b.tensors.at("z").values) EXPECT_EQ(v, 0.0f);
}

TEST(TensorArchive, SerializationIsByteStable) {
  const TensorArchive a = random_base(toy_layout(8, 16, 1), 3);
  const std::string s = serialize_archive(a);
  EXPECT_EQ(s, serialize_archive(deserialize_archive(s)));
  // Data section starts 8-byte aligned.
  uint64_t n = 0;
  std::memcpy(&n, s.data(), 8);
  EXPECT_EQ((8 + n) % 8, 0u);
}

TEST(TensorArchive, HeaderDeclaringMoreDataThanPresentIsTruncated) {
  const json h = {{"x", {{"dtype", "F32"}, {"shape", {16}}, {"data_offsets", {0, 64}}}}};
  EXPECT_EQ(read_error(raw_archive(h, std::string(32, '\0'))), Errc::kTruncatedData);
}

TEST(TensorArchive, DistinctErrorPerFailureMode) {
  EXPECT_EQ(read_error("abc"), Errc::kMalformedHeader);
  EXPECT_EQ(read_error(raw_archive(json::array(), "")), Errc::kMalformedHeader);
  std::string bad_json = raw_archive(json::object(), "");
  bad_json[8] = '[';
  EXPECT_EQ(read_error(bad_json), Errc::kMalformedHeader);

  const json unknown = {{"x", {{"dtype", "BF16"}, {"shape", {2}}, {"data_offsets", {0, 4}}}}};
  EXPECT_EQ(read_error(raw_archive(unknown, std::string(4, '\0'))), Errc::kUnknownDtype);

  const json overlap = {{"a", {{"dtype", "F32"}, {"shape", {2}}, {"data_offsets", {0, 8}}}},
                        {"b", {{"dtype", "F32"}, {"shape", {2}}, {"data_offsets", {4, 12}}}}};
  EXPECT_EQ(read_error(raw_archive(overlap, std::string(12, '\0'))), Errc::kOverlappingOffsets);

  const json mismatch = {{"a", {{"dtype", "F32"}, {"shape", {3}}, {"data_offsets", {0, 8}}}}};
  EXPECT_EQ(read_error(raw_archive(mismatch, std::string(8, '\0'))), Errc::kMalformedHeader);

  const json gap = {{"a", {{"dtype", "F32"}, {"shape", {1}}, {"data_offsets", {4, 8}}}}};
  EXPECT_EQ(read_error(raw_archive(gap, std::string(8, '\0'))), Errc::kMalformedHeader);

  const json ok = {{"a", {{"dtype", "F32"}, {"shape", {1}}, {"data_offsets", {0, 4}}}}};
  EXPECT_EQ(read_error(raw_archive(ok, std::string(6, '\0'))), Errc::kMalformedHeader);
  EXPECT_NO_THROW(deserialize_archive(raw_archive(ok, std::string(4, '\0'))));
}

TEST(TensorArchive, WriteRejectsDegenerateShapes) {
  TensorArchive a;
  a.tensors["empty"] = Tensor::f32({0, 4}, {});
  EXPECT_THROW(serialize_archive(a), Error);
  TensorArchive b;
  b.tensors["scalar"] = Tensor::f32({}, {1.0f});
  EXPECT_THROW(serialize_archive(b), Error);
}

TEST(TensorArchive, WriteToUnwritablePathFails) {
  TensorArchive a;
  a.tensors["w"] = Tensor::f32({1}, {1});
  try {
    write_archive(a, "/nonexistent-dir/x/y.fta");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
}

TEST(TensorArchive, Int4TensorRoundTrips) {
  Pcg32 rng(9);
  Matrix m(6, 10);
  for (float& v : m.data) v = uniform_float(rng, -1, 1);
  QuantConfig cfg;
  cfg.group_size = 4;
  PaddedMatrix p = pad_for_groups(m, 4);
  QuantizedTensor q = quantize_groupwise(p.matrix, cfg);
  q.original_shape = p.original_shape;
  TensorArchive a;
  a.tensors["q"] = Tensor::quantized(q);
  a.tensors["bias"] = Tensor::f32({3}, {1, 2, 3});
  const TensorArchive b = deserialize_archive(serialize_archive(a));
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_EQ(b.tensors.at("q").int4, q);
  EXPECT_EQ(b.tensors.size(), 2u);
}

TEST(TensorArchive, HalfConversionRoundTripsEveryFiniteHalf) {
  for (uint32_t bits = 0; bits < 0x10000; ++bits) {
    const auto h = static_cast<uint16_t>(bits);
    const float f = half_to_float(h);
    if (std::isnan(f)) continue;
    ASSERT_EQ(float_to_half(f), h) << bits;
  }
}

TEST(TensorArchive, HalfConversionKnownValues) {
  EXPECT_EQ(float_to_half(1.0f), 0x3c00);
  EXPECT_EQ(float_to_half(-2.0f), 0xc000);
  EXPECT_EQ(float_to_half(65504.0f), 0x7bff);
  EXPECT_EQ(float_to_half(1e6f), 0x7c00);
  EXPECT_EQ(half_to_float(0x0001), std::ldexp(1.0f, -24));
  // 1 + 2^-11 is halfway between 1 and the next half; ties go to even.
  EXPECT_EQ(float_to_half(1.0f + std::ldexp(1.0f, -11)), 0x3c00);
  EXPECT_EQ(float_to_half(1.0f + 3 * std::ldexp(1.0f, -11)), 0x3c02);
}

TEST(TensorArchive, MetadataRejectsReservedKey) {
  TensorArchive a;
  a.tensors["w"] = Tensor::f32({1}, {1});
  a.metadata[std::string(kInt4MetadataKey)] = "{}";
  EXPECT_THROW(serialize_archive(a), Error);
}

}  // namespace
}  // namespace forge
