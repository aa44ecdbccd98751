// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/adapter.hpp"

#include <cmath>
#include <sstream>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "json.hpp"

namespace forge {

namespace {

constexpr std::string_view kSuffixA = ".lora_A";
constexpr std::string_view kSuffixB = ".lora_B";

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Tensor matrix_tensor(const Matrix& m) { return Tensor::f32({m.rows, m.cols}, m.data); }

Matrix factor_matrix(const std::string& name, const Tensor& t) {
  if (!t.is_float() || t.shape.size() != 2) {
    throw Error(Errc::kShapeMismatch, "adapter factor '" + name + "' must be a 2-D float tensor");
  }
  return Matrix(t.shape[0], t.shape[1], t.values);
}

// out += coef * (a * b), element by element. Zero coefficients and exactly
// zero delta elements leave the output bits untouched.
void accumulate_delta(std::span<float> out, int64_t cols, const LoraFactors& f, float coef) {
  if (coef == 0.0f) return;
  const int64_t rank = f.a.cols;
  std::vector<float> row(static_cast<size_t>(cols));
  for (int64_t i = 0; i < f.a.rows; ++i) {
    std::fill(row.begin(), row.end(), 0.0f);
    for (int64_t k = 0; k < rank; ++k) {
      const float aik = f.a(i, k);
      if (aik == 0.0f) continue;
      const std::span<const float> brow = f.b.row(k);
      for (int64_t j = 0; j < cols; ++j) row[static_cast<size_t>(j)] += aik * brow[static_cast<size_t>(j)];
    }
    float* dst = out.data() + i * cols;
    for (int64_t j = 0; j < cols; ++j) {
      const float d = coef * row[static_cast<size_t>(j)];
      if (d != 0.0f) dst[j] += d;
    }
  }
}

void check_conforms(const std::string& target, int64_t rows, int64_t cols, const LoraFactors& f) {
  if (f.a.rows != rows || f.b.cols != cols || f.a.cols != f.b.rows) {
    std::ostringstream msg;
    msg << "target '" << target << "' is " << rows << "x" << cols << " but factors are "
        << f.a.rows << "x" << f.a.cols << " and " << f.b.rows << "x" << f.b.cols;
    throw Error(Errc::kShapeMismatch, msg.str());
  }
}

void check_finite(const std::string& what, std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, what + " produced a non-finite value");
  }
}

}  // namespace

Matrix as_matrix(const Tensor& tensor) {
  if (!tensor.is_float() || tensor.shape.empty()) {
    throw Error(Errc::kInvalidArgument, "expected a float tensor of rank >= 1");
  }
  const int64_t cols = tensor.shape.back();
  return Matrix(tensor.numel() / cols, cols, tensor.values);
}

void validate_adapter(const LoraAdapter& adapter) {
  if (adapter.rank <= 0) throw Error(Errc::kInvalidArgument, "adapter rank must be positive");
  if (!(adapter.alpha > 0.0) || !std::isfinite(adapter.alpha)) {
    throw Error(Errc::kInvalidArgument, "adapter alpha must be positive and finite");
  }
  for (const auto& [target, f] : adapter.targets) {
    if (f.a.cols != adapter.rank || f.b.rows != adapter.rank) {
      throw Error(Errc::kShapeMismatch, "adapter '" + adapter.name + "' target '" + target +
                                            "' factors disagree with rank " +
                                            std::to_string(adapter.rank));
    }
    if (f.a.data.size() != static_cast<size_t>(f.a.rows * f.a.cols) ||
        f.b.data.size() != static_cast<size_t>(f.b.rows * f.b.cols)) {
      throw Error(Errc::kShapeMismatch, "adapter target '" + target + "' has a short buffer");
    }
  }
}

TensorArchive adapter_to_archive(const LoraAdapter& adapter) {
  validate_adapter(adapter);
  TensorArchive archive;
  for (const auto& [target, f] : adapter.targets) {
    archive.tensors[target + std::string(kSuffixA)] = matrix_tensor(f.a);
    archive.tensors[target + std::string(kSuffixB)] = matrix_tensor(f.b);
  }
  archive.metadata["adapter_name"] = adapter.name;
  archive.metadata["lora_rank"] = std::to_string(adapter.rank);
  std::ostringstream alpha;
  alpha.precision(17);
  alpha << adapter.alpha;
  archive.metadata["lora_alpha"] = alpha.str();
  return archive;
}

LoraAdapter adapter_from_archive(const TensorArchive& archive) {
  LoraAdapter adapter;
  auto meta = [&](const char* key) -> const std::string& {
    auto it = archive.metadata.find(key);
    if (it == archive.metadata.end()) {
      throw Error(Errc::kInvalidArgument, std::string("adapter archive lacks '") + key + "' metadata");
    }
    return it->second;
  };
  try {
    adapter.rank = std::stoll(meta("lora_rank"));
    adapter.alpha = std::stod(meta("lora_alpha"));
  } catch (const std::logic_error&) {
    throw Error(Errc::kInvalidArgument, "adapter rank/alpha metadata is not numeric");
  }
  if (auto it = archive.metadata.find("adapter_name"); it != archive.metadata.end()) {
    adapter.name = it->second;
  }
  for (const auto& [name, t] : archive.tensors) {
    if (ends_with(name, kSuffixA)) {
      const std::string target = name.substr(0, name.size() - kSuffixA.size());
      auto b = archive.tensors.find(target + std::string(kSuffixB));
      if (b == archive.tensors.end()) {
        throw Error(Errc::kShapeMismatch, "adapter target '" + target + "' lacks lora_B");
      }
      adapter.targets[target] = {factor_matrix(name, t), factor_matrix(b->first, b->second)};
    } else if (ends_with(name, kSuffixB)) {
      const std::string target = name.substr(0, name.size() - kSuffixB.size());
      if (!archive.tensors.count(target + std::string(kSuffixA))) {
        throw Error(Errc::kShapeMismatch, "adapter target '" + target + "' lacks lora_A");
      }
    }
  }
  validate_adapter(adapter);
  return adapter;
}

LoraAdapter read_adapter(const std::filesystem::path& path) {
  LoraAdapter adapter = adapter_from_archive(read_archive(path));
  if (adapter.name.empty()) adapter.name = path.stem().string();
  return adapter;
}

void write_adapter(const LoraAdapter& adapter, const std::filesystem::path& path) {
  write_archive(adapter_to_archive(adapter), path);
}

Matrix apply_delta(const Matrix& base, const LoraFactors& factors, float scale, float lora_scale) {
  if (!std::isfinite(scale) || !std::isfinite(lora_scale)) {
    throw Error(Errc::kInvalidArgument, "delta scale must be finite");
  }
  check_conforms("matrix", base.rows, base.cols, factors);
  Matrix out = base;
  accumulate_delta(out.data, out.cols, factors, scale * lora_scale);
  check_finite("delta application", out.data);
  return out;
}

LoraAdapter wise_ft_rescale(const LoraAdapter& adapter, double alpha_interp) {
  if (!(alpha_interp >= 0.0) || !std::isfinite(alpha_interp)) {
    throw Error(Errc::kInvalidArgument, "wise-ft alpha must be finite and non-negative");
  }
  const auto factor = static_cast<float>(std::sqrt(alpha_interp));
  LoraAdapter out = adapter;
  for (auto& [target, f] : out.targets) {
    for (float& v : f.a.data) v *= factor;
    for (float& v : f.b.data) v *= factor;
  }
  return out;
}

TensorArchive execute_merge(const TensorArchive& base, const MergePlan& plan, unsigned jobs) {
  // Which steps touch each target, in plan order.
  std::map<std::string, std::vector<size_t>> touched;
  for (size_t s = 0; s < plan.steps.size(); ++s) {
    const MergeStep& step = plan.steps[s];
    if (!std::isfinite(step.weight) || step.weight < 0.0) {
      throw Error(Errc::kInvalidArgument, "merge weight for '" + step.adapter.name +
                                              "' must be finite and non-negative");
    }
    if (!std::isfinite(step.effective_lora_scale())) {
      throw Error(Errc::kInvalidArgument, "lora scale for '" + step.adapter.name + "' is not finite");
    }
    if (step.weight > kMergeWeightWarnAbove) {
      warn("merge weight " + std::to_string(step.weight) + " for adapter '" + step.adapter.name +
           "' exceeds " + std::to_string(kMergeWeightWarnAbove));
    }
    validate_adapter(step.adapter);
    for (const auto& [target, f] : step.adapter.targets) {
      auto it = base.tensors.find(target);
      if (it == base.tensors.end()) {
        throw Error(Errc::kShapeMismatch, "adapter '" + step.adapter.name + "' targets '" + target +
                                              "' which is not in the base archive");
      }
      const Tensor& t = it->second;
      if (!t.is_float() || t.shape.size() != 2) {
        throw Error(Errc::kShapeMismatch, "base tensor '" + target + "' is not a 2-D float matrix");
      }
      check_conforms(target, t.shape[0], t.shape[1], f);
      touched[target].push_back(s);
    }
  }

  TensorArchive out = base;
  if (plan.steps.empty()) return out;

  std::vector<std::pair<const std::string*, const std::vector<size_t>*>> work;
  for (const auto& [target, steps] : touched) work.emplace_back(&target, &steps);

  // Each worker owns exactly one output tensor, so the map itself is not
  // mutated concurrently.
  std::vector<Tensor*> outputs;
  for (const auto& w : work) outputs.push_back(&out.tensors.at(*w.first));

  parallel_for(work.size(), jobs, [&](size_t i) {
    Tensor& t = *outputs[i];
    for (size_t s : *work[i].second) {
      const MergeStep& step = plan.steps[s];
      const float coef =
          static_cast<float>(step.weight) * static_cast<float>(step.effective_lora_scale());
      accumulate_delta(t.values, t.shape[1], step.adapter.targets.at(*work[i].first), coef);
    }
    check_finite("merge of '" + *work[i].first + "'", t.values);
  });

  nlohmann::json provenance;
  provenance["steps"] = nlohmann::json::array();
  for (const MergeStep& step : plan.steps) {
    provenance["steps"].push_back({{"adapter", step.adapter.name},
                                   {"weight", step.weight},
                                   {"lora_scale", step.effective_lora_scale()},
                                   {"rank", step.adapter.rank},
                                   {"alpha", step.adapter.alpha}});
  }
  out.metadata[std::string(kMergeMetadataKey)] = provenance.dump();
  return out;
}

}  // namespace forge
