// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// LoRA adapter algebra: delta application, weighted ensembling of several
// adapters onto one base archive, and wise-ft interpolation implemented by
// rescaling both low-rank factors by sqrt(alpha).

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/matrix.hpp"
#include "forge/tensor_archive.hpp"

namespace forge {

/// Fine-tuning hyperparameters of the reference QLoRA recipe, kept as
/// defaults and provenance metadata.
struct QloraDefaults {
  static constexpr const char* kOptimizer = "AdamW";
  static constexpr const char* kScheduler = "cosine";
  static constexpr double kLearningRate = 0.0002;
  static constexpr double kWeightDecay = 0.01;
  static constexpr int kWarmupSteps = 10;
  static constexpr int kMicroBatchSize = 1;
  static constexpr int kGradientAccumulation = 4;
  static constexpr int kRank = 64;
  static constexpr double kAlpha = 32.0;
  static constexpr double kDropout = 0.05;
  static constexpr bool kAllLinear = true;
  static constexpr int kQuantBits = 4;
};

/// Low-rank factors for one target: delta = a * b with a (d_out x r) and
/// b (r x d_in).
struct LoraFactors {
  Matrix a;
  Matrix b;
};

struct LoraAdapter {
  std::string name;
  int64_t rank = QloraDefaults::kRank;
  double alpha = QloraDefaults::kAlpha;
  std::map<std::string, LoraFactors> targets;

  // Training-time scale alpha / rank (0.5 for the defaults).
  double lora_scale() const { return alpha / static_cast<double>(rank); }
};

// Throws Errc::kShapeMismatch when factor shapes disagree with the rank.
void validate_adapter(const LoraAdapter& adapter);

// Adapter archives store "<target>.lora_A" / "<target>.lora_B" tensors and
// lora_rank / lora_alpha / adapter_name metadata.
TensorArchive adapter_to_archive(const LoraAdapter& adapter);
LoraAdapter adapter_from_archive(const TensorArchive& archive);
LoraAdapter read_adapter(const std::filesystem::path& path);
void write_adapter(const LoraAdapter& adapter, const std::filesystem::path& path);

/// base + scale * lora_scale * (a * b). A zero scale returns base untouched.
Matrix apply_delta(const Matrix& base, const LoraFactors& factors, float scale,
                   float lora_scale);

/// Multiplies every factor by sqrt(alpha_interp), so applying the result at
/// unit weight equals applying the original at weight alpha_interp.
LoraAdapter wise_ft_rescale(const LoraAdapter& adapter, double alpha_interp);

struct MergeStep {
  LoraAdapter adapter;
  double weight = 1.0;
  // Replaces alpha/rank, e.g. 1.0 for adapters exported with pre-scaled factors.
  std::optional<double> lora_scale_override;

  double effective_lora_scale() const {
    return lora_scale_override.value_or(adapter.lora_scale());
  }
};

struct MergePlan {
  std::vector<MergeStep> steps;
};

/// Metadata key holding the JSON merge provenance.
inline constexpr std::string_view kMergeMetadataKey = "forge.merge";

// Weights above this emit a warning; negative or non-finite weights throw.
inline constexpr double kMergeWeightWarnAbove = 1.5;

/// Folds every step into a copy of base: each target becomes
/// base + sum_i weight_i * s_i * (A_i B_i). Non-target tensors are copied
/// unchanged. Targets are processed on up to `jobs` threads.
TensorArchive execute_merge(const TensorArchive& base, const MergePlan& plan,
                            unsigned jobs = 1);

}  // namespace forge
