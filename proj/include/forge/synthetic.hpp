// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded generators for toy weights, adapters and benchmark-shaped question
// sets. Used by the tests, the acceptance suite and `forge synth`.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/adapter.hpp"
#include "forge/rng.hpp"
#include "forge/task.hpp"
#include "forge/tensor_archive.hpp"

namespace forge {

// Uniform float in [lo, hi) from the top 24 bits of one draw.
float uniform_float(Pcg32& rng, float lo, float hi);

using TensorLayout = std::vector<std::pair<std::string, Shape>>;

// A two-block decoder layout: attention and MLP projections plus a norm
// vector that adapters never target.
TensorLayout toy_layout(int64_t hidden = 32, int64_t intermediate = 64, int layers = 2);

TensorArchive random_base(const TensorLayout& layout, uint64_t seed, float range = 1.0f);

/// Adapter with factors for every float tensor of rank 2 in `base`. Factor
/// entries are uniform in [-range, range).
LoraAdapter random_adapter(const TensorArchive& base, std::string name, int64_t rank, double alpha,
                           uint64_t seed, float range = 0.1f);

struct SyntheticOptions {
  size_t count = 100;
  uint64_t seed = 0;
  int tracks = 5;
  // Leave task_type empty so the router decides.
  bool unrouted = true;
};

/// Questions cycle through the five task types; every item carries a gold
/// answer and, for index-based types, num_candidates.
std::vector<Question> synthetic_questions(const SyntheticOptions& options);

}  // namespace forge
