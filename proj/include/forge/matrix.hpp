// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/tensor_archive.hpp"

namespace forge {

/// Dense row-major float32 matrix.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<size_t>(r * c), 0.0f) {}
  Matrix(int64_t r, int64_t c, std::vector<float> values)
      : rows(r), cols(c), data(std::move(values)) {}

  float& operator()(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
  float operator()(int64_t r, int64_t c) const {
    return data[static_cast<size_t>(r * cols + c)];
  }
  std::span<const float> row(int64_t r) const {
    return {data.data() + r * cols, static_cast<size_t>(cols)};
  }

  bool operator==(const Matrix&) const = default;
};

// Views a float tensor of rank >= 1 as rows = prod(shape[:-1]), cols = shape[-1].
Matrix as_matrix(const Tensor& tensor);

}  // namespace forge
