// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/quant.hpp"

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

namespace forge {

namespace {

constexpr int kMaxCode = 15;
constexpr int kSymmetricMid = 8;

void set_code(std::vector<uint8_t>& packed, size_t i, uint8_t code) {
  uint8_t& byte = packed[i / 2];
  if (i % 2 == 0) {
    byte = static_cast<uint8_t>((byte & 0xf0u) | code);
  } else {
    byte = static_cast<uint8_t>((byte & 0x0fu) | (code << 4));
  }
}

}  // namespace

void validate_quant_config(const QuantConfig& config) {
  if (config.group_size < 2) throw Error(Errc::kInvalidArgument, "group_size must be >= 2");
  if (config.bits != 4) throw Error(Errc::kInvalidArgument, "only 4-bit quantization is supported");
  for (float s : config.channel_scales) {
    if (!(s > 0.0f) || !std::isfinite(s)) {
      throw Error(Errc::kInvalidArgument, "channel scales must be positive and finite");
    }
  }
}

PaddedMatrix pad_for_groups(const Matrix& tensor, int64_t group_size) {
  if (group_size < 2) throw Error(Errc::kInvalidArgument, "group_size must be >= 2");
  if (tensor.rows <= 0 || tensor.cols <= 0) {
    throw Error(Errc::kInvalidArgument, "cannot pad an empty matrix");
  }
  const int64_t padded_cols = (tensor.cols + group_size - 1) / group_size * group_size;
  PaddedMatrix out{Matrix(tensor.rows, padded_cols), {tensor.rows, tensor.cols}};
  for (int64_t r = 0; r < tensor.rows; ++r) {
    std::copy_n(tensor.data.begin() + r * tensor.cols, tensor.cols,
                out.matrix.data.begin() + r * padded_cols);
  }
  return out;
}

Matrix slice_columns(const Matrix& m, int64_t cols) {
  if (cols > m.cols) throw Error(Errc::kInvalidArgument, "slice wider than matrix");
  Matrix out(m.rows, cols);
  for (int64_t r = 0; r < m.rows; ++r) {
    std::copy_n(m.data.begin() + r * m.cols, cols, out.data.begin() + r * cols);
  }
  return out;
}

uint8_t code_at(const QuantizedTensor& q, size_t i) {
  const uint8_t byte = q.packed[i / 2];
  return i % 2 == 0 ? (byte & 0x0fu) : (byte >> 4);
}

QuantizedTensor quantize_groupwise(const Matrix& tensor, const QuantConfig& config) {
  validate_quant_config(config);
  const int64_t group = config.group_size;
  if (tensor.cols <= 0 || tensor.cols % group != 0) {
    throw Error(Errc::kInvalidArgument, "inner dimension " + std::to_string(tensor.cols) +
                                            " is not a multiple of group size " +
                                            std::to_string(group) + "; pad first");
  }
  if (!config.channel_scales.empty() &&
      config.channel_scales.size() != static_cast<size_t>(tensor.cols)) {
    throw Error(Errc::kInvalidArgument, "channel scale count must equal the padded column count");
  }
  for (float v : tensor.data) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "cannot quantize non-finite weights");
  }

  QuantizedTensor q;
  q.group_size = group;
  q.symmetric = config.symmetric;
  q.channel_scales = config.channel_scales;
  q.padded_shape = {tensor.rows, tensor.cols};
  q.original_shape = q.padded_shape;
  const size_t n = tensor.data.size();
  const size_t groups = n / static_cast<size_t>(group);
  q.packed.assign((n + 1) / 2, 0);
  q.scales.resize(groups);
  q.zeros.resize(groups);

  std::vector<double> x(static_cast<size_t>(group));
  for (size_t g = 0; g < groups; ++g) {
    const size_t begin = g * static_cast<size_t>(group);
    for (size_t k = 0; k < x.size(); ++k) {
      const size_t i = begin + k;
      double v = tensor.data[i];
      if (!q.channel_scales.empty()) {
        v *= q.channel_scales[i % static_cast<size_t>(tensor.cols)];
      }
      x[k] = v;
    }
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    float scale;
    float zero;
    if (lo == hi) {
      scale = 1.0f;
      zero = static_cast<float>(lo);
    } else if (config.symmetric) {
      const double amax = std::max(std::fabs(lo), std::fabs(hi));
      scale = static_cast<float>(amax / (kMaxCode - kSymmetricMid));
      zero = -kSymmetricMid * scale;
    } else {
      scale = static_cast<float>((hi - lo) / kMaxCode);
      zero = static_cast<float>(lo);
    }
    q.scales[g] = scale;
    q.zeros[g] = zero;
    if (lo == hi) continue;  // codes stay 0
    for (size_t k = 0; k < x.size(); ++k) {
      // std::round is half-away-from-zero.
      const double c = std::round((x[k] - zero) / static_cast<double>(scale));
      set_code(q.packed, begin + k, static_cast<uint8_t>(std::clamp(c, 0.0, double(kMaxCode))));
    }
  }
  return q;
}

Matrix dequantize(const QuantizedTensor& q) {
  if (q.padded_shape.size() < 1 || q.group_size < 2) {
    throw Error(Errc::kInvalidArgument, "quantized tensor has no shape or group size");
  }
  const int64_t cols = q.padded_shape.back();
  const int64_t n = element_count(q.padded_shape);
  if (q.packed.size() != static_cast<size_t>((n + 1) / 2)) {
    throw Error(Errc::kCorruptedPack, "packed buffer holds " + std::to_string(q.packed.size()) +
                                          " bytes, expected " + std::to_string((n + 1) / 2));
  }
  const auto groups = static_cast<size_t>(n / q.group_size);
  if (n % q.group_size != 0 || q.scales.size() != groups || q.zeros.size() != groups) {
    throw Error(Errc::kCorruptedPack, "group table does not match the padded shape");
  }
  Matrix out(n / cols, cols);
  for (size_t i = 0; i < static_cast<size_t>(n); ++i) {
    const size_t g = i / static_cast<size_t>(q.group_size);
    double v = code_at(q, i) * static_cast<double>(q.scales[g]) + q.zeros[g];
    if (!q.channel_scales.empty()) v /= q.channel_scales[i % static_cast<size_t>(cols)];
    out.data[i] = static_cast<float>(v);
  }
  return out;
}

ArchiveQuantResult quantize_archive(const TensorArchive& archive, const QuantConfig& config,
                                    unsigned jobs) {
  validate_quant_config(config);
  ArchiveQuantResult result;
  result.archive.metadata = archive.metadata;
  result.archive.metadata["quant.bits"] = std::to_string(config.bits);
  result.archive.metadata["quant.group_size"] = std::to_string(config.group_size);
  result.archive.metadata["quant.scheme"] = config.symmetric ? "symmetric" : "asymmetric";

  std::vector<std::string> names;
  for (const auto& [name, t] : archive.tensors) {
    if (t.is_float() && t.shape.size() >= 2) {
      names.push_back(name);
    } else {
      result.archive.tensors[name] = t;
    }
  }

  std::vector<Tensor> quantized(names.size());
  std::vector<QuantError> errors(names.size());
  parallel_for(names.size(), jobs, [&](size_t i) {
    const Tensor& src = archive.tensors.at(names[i]);
    const Matrix m = as_matrix(src);
    PaddedMatrix padded = pad_for_groups(m, config.group_size);
    QuantConfig cfg = config;
    if (!cfg.channel_scales.empty() &&
        cfg.channel_scales.size() != static_cast<size_t>(padded.matrix.cols)) {
      throw Error(Errc::kInvalidArgument, "channel scales do not fit tensor '" + names[i] + "'");
    }
    QuantizedTensor q = quantize_groupwise(padded.matrix, cfg);
    const Matrix recon = dequantize(q);

    double max_abs = 0.0;
    double sq = 0.0;
    for (int64_t r = 0; r < m.rows; ++r) {
      for (int64_t c = 0; c < m.cols; ++c) {
        const double e = std::fabs(static_cast<double>(m(r, c)) - recon(r, c));
        max_abs = std::max(max_abs, e);
        sq += e * e;
      }
    }
    errors[i] = {max_abs, std::sqrt(sq / static_cast<double>(m.data.size()))};

    q.original_shape = src.shape;
    q.padded_shape = src.shape;
    q.padded_shape.back() = padded.matrix.cols;
    quantized[i] = Tensor::quantized(std::move(q));
  });

  for (size_t i = 0; i < names.size(); ++i) {
    result.archive.tensors[names[i]] = std::move(quantized[i]);
    result.errors[names[i]] = errors[i];
  }
  return result;
}

TensorArchive dequantize_archive(const TensorArchive& archive) {
  TensorArchive out;
  out.metadata = archive.metadata;
  for (const auto& [name, t] : archive.tensors) {
    if (t.dtype != DType::kInt4) {
      out.tensors[name] = t;
      continue;
    }
    const Matrix full = dequantize(t.int4);
    const Matrix sliced = slice_columns(full, t.int4.original_shape.back());
    out.tensors[name] = Tensor::f32(t.int4.original_shape, sliced.data);
  }
  return out;
}

}  // namespace forge
