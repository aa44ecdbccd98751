// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Group-wise 4-bit quantization. Weights are zero-padded along the inner
// dimension to a multiple of the group size, then every contiguous group
// gets an affine (scale, zero) pair over codes 0..15.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "forge/matrix.hpp"
#include "forge/tensor_archive.hpp"

namespace forge {

struct QuantConfig {
  int64_t group_size = 128;
  int bits = 4;
  bool symmetric = false;
  // Optional per-input-channel pre-scales (AWQ-style). Columns are
  // multiplied before quantization and divided back on dequantization.
  std::vector<float> channel_scales;
};

void validate_quant_config(const QuantConfig& config);

struct PaddedMatrix {
  Matrix matrix;
  Shape original_shape;  // {rows, cols} before padding
};

PaddedMatrix pad_for_groups(const Matrix& tensor, int64_t group_size);

// First `cols` columns of m.
Matrix slice_columns(const Matrix& m, int64_t cols);

/// Quantizes a matrix whose column count is already a multiple of the group
/// size. Group g covers elements [g*group_size, (g+1)*group_size) in
/// row-major order.
QuantizedTensor quantize_groupwise(const Matrix& tensor, const QuantConfig& config);

/// Reconstructs the padded matrix.
Matrix dequantize(const QuantizedTensor& q);

// Code of element i (0..15).
uint8_t code_at(const QuantizedTensor& q, size_t i);

struct QuantError {
  double max_abs_error = 0.0;
  double rmse = 0.0;
};

struct ArchiveQuantResult {
  TensorArchive archive;
  std::map<std::string, QuantError> errors;  // measured on the unpadded region
};

/// Quantizes every float tensor of rank >= 2 (viewed as prod(shape[:-1]) x
/// shape[-1]); other tensors are copied unchanged.
ArchiveQuantResult quantize_archive(const TensorArchive& archive, const QuantConfig& config,
                                    unsigned jobs = 1);

/// Inverse of quantize_archive for int4 tensors; result is sliced back to the
/// original shape and stored as float32.
TensorArchive dequantize_archive(const TensorArchive& archive);

}  // namespace forge
