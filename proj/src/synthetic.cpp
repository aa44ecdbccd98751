// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/synthetic.hpp"

#include <algorithm>

#include "forge/error.hpp"

namespace forge {

namespace {

constexpr const char* kAdjectives[] = {"wireless", "organic", "stainless", "portable", "vintage",
                                       "waterproof", "compact", "ergonomic", "cotton", "leather",
                                       "bamboo", "ceramic"};
constexpr const char* kNouns[] = {"headphones", "kettle", "backpack", "lamp", "blender", "jacket",
                                  "notebook", "charger", "mug", "keyboard", "tent", "sneakers",
                                  "speaker", "wallet"};
constexpr const char* kBrands[] = {"Acme", "Lumina", "Northwind", "Zephyr", "Orbit", "Kestrel",
                                   "Tundra", "Nimbus", "Solace", "Vertex"};
constexpr const char* kContexts[] = {"for travel", "for kids", "for the office", "for camping",
                                     "for the kitchen", "for running"};

template <typename T, size_t N>
const T& pick(const T (&items)[N], Pcg32& rng) {
  return items[rng.bounded(static_cast<uint32_t>(N))];
}

std::string product(Pcg32& rng) {
  return std::string(pick(kBrands, rng)) + " " + pick(kAdjectives, rng) + " " + pick(kNouns, rng);
}

std::vector<std::string> distinct_products(Pcg32& rng, size_t n) {
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string p = product(rng);
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
  }
  return out;
}

std::string option_lines(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += "\n";
    out += std::to_string(i) + ". " + items[i];
  }
  return out;
}

Question multiple_choice(Pcg32& rng) {
  const std::string query = std::string(pick(kAdjectives, rng)) + " " + pick(kNouns, rng);
  Question q;
  q.instruction = "Which product best matches the query '" + query +
                  "'? Answer with the option number only.";
  q.input_field = option_lines(distinct_products(rng, 4));
  q.gold = GoldChoice{rng.bounded(4)};
  q.num_candidates = 4;
  return q;
}

Question ranking(Pcg32& rng) {
  const std::string query = std::string(pick(kNouns, rng)) + " " + pick(kContexts, rng);
  Question q;
  q.instruction = "Rank the following products by relevance to the query '" + query +
                  "'. Return the product numbers separated by a comma.";
  q.input_field = option_lines(distinct_products(rng, 5));
  GoldRanking gold;
  for (int64_t i = 0; i < 5; ++i) gold.grades[i] = static_cast<double>(rng.bounded(4));
  // At least one relevant product, otherwise the gold is invalid.
  gold.grades[rng.bounded(5)] = static_cast<double>(1 + rng.bounded(3));
  q.gold = std::move(gold);
  q.num_candidates = 5;
  return q;
}

Question entities(Pcg32& rng) {
  std::vector<std::string> brands;
  const uint32_t n = 1 + rng.bounded(3);
  while (brands.size() < n) {
    std::string b = pick(kBrands, rng);
    if (std::find(brands.begin(), brands.end(), b) == brands.end()) brands.push_back(std::move(b));
  }
  std::string text = "I compared the " + brands[0] + " " + pick(kNouns, rng);
  for (size_t i = 1; i < brands.size(); ++i) text += " with a " + brands[i] + " " + pick(kNouns, rng);
  text += " last week.";
  Question q;
  q.instruction = "Extract the brand names mentioned in the following review. Return them separated by a comma.";
  q.input_field = std::move(text);
  q.gold = GoldEntities{std::move(brands)};
  return q;
}

Question retrieval(Pcg32& rng) {
  const std::string bought = product(rng);
  std::vector<int64_t> ids;
  while (ids.size() < 3) {
    const int64_t id = rng.bounded(8);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  Question q;
  q.instruction = "A user bought the " + bought +
                  ". Select 3 products the user is most likely to buy next. Return the candidate "
                  "numbers separated by a comma.";
  q.input_field = option_lines(distinct_products(rng, 8));
  q.gold = GoldRetrieval{std::move(ids)};
  q.num_candidates = 8;
  return q;
}

Question generation(Pcg32& rng, size_t index) {
  const std::string p = product(rng);
  Question q;
  q.instruction = "Write a one sentence description of the " + p + ".";
  constexpr GenerationMetric kMetrics[] = {GenerationMetric::kRougeL, GenerationMetric::kBleu,
                                           GenerationMetric::kCosine};
  q.gold = GoldText{"The " + p + " is a " + pick(kAdjectives, rng) + " pick " + pick(kContexts, rng) + ".",
                    kMetrics[index % 3]};
  return q;
}

}  // namespace

float uniform_float(Pcg32& rng, float lo, float hi) {
  const float u = static_cast<float>(rng.next() >> 8) * 0x1p-24f;
  return lo + (hi - lo) * u;
}

TensorLayout toy_layout(int64_t hidden, int64_t intermediate, int layers) {
  TensorLayout layout;
  for (int l = 0; l < layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    for (const char* proj : {"q_proj", "k_proj", "v_proj", "o_proj"}) {
      layout.emplace_back(p + "attn." + proj + ".weight", Shape{hidden, hidden});
    }
    layout.emplace_back(p + "mlp.up_proj.weight", Shape{intermediate, hidden});
    layout.emplace_back(p + "mlp.down_proj.weight", Shape{hidden, intermediate});
    layout.emplace_back(p + "norm.weight", Shape{hidden});
  }
  return layout;
}

TensorArchive random_base(const TensorLayout& layout, uint64_t seed, float range) {
  TensorArchive out;
  for (const auto& [name, shape] : layout) {
    Pcg32 rng(derive_seed(seed, name));
    std::vector<float> values(static_cast<size_t>(element_count(shape)));
    for (float& v : values) v = uniform_float(rng, -range, range);
    out.tensors.emplace(name, Tensor::f32(shape, std::move(values)));
  }
  out.metadata["origin"] = "synthetic";
  return out;
}

LoraAdapter random_adapter(const TensorArchive& base, std::string name, int64_t rank, double alpha,
                           uint64_t seed, float range) {
  if (rank < 1) throw Error(Errc::kInvalidArgument, "rank must be >= 1");
  LoraAdapter adapter;
  adapter.name = std::move(name);
  adapter.rank = rank;
  adapter.alpha = alpha;
  for (const auto& [target, t] : base.tensors) {
    if (!t.is_float() || t.shape.size() != 2) continue;
    Pcg32 rng(derive_seed(seed, target));
    LoraFactors f{Matrix(t.shape[0], rank), Matrix(rank, t.shape[1])};
    for (float& v : f.a.data) v = uniform_float(rng, -range, range);
    for (float& v : f.b.data) v = uniform_float(rng, -range, range);
    adapter.targets.emplace(target, std::move(f));
  }
  return adapter;
}

std::vector<Question> synthetic_questions(const SyntheticOptions& options) {
  if (options.tracks < 1) throw Error(Errc::kInvalidArgument, "tracks must be >= 1");
  Pcg32 rng(options.seed);
  std::vector<Question> out;
  out.reserve(options.count);
  for (size_t i = 0; i < options.count; ++i) {
    Question q;
    TaskType type = kAllTaskTypes[i % std::size(kAllTaskTypes)];
    switch (type) {
      case TaskType::kMultipleChoice: q = multiple_choice(rng); break;
      case TaskType::kRanking: q = ranking(rng); break;
      case TaskType::kNamedEntityRecognition: q = entities(rng); break;
      case TaskType::kRetrieval: q = retrieval(rng); break;
      case TaskType::kGeneration: q = generation(rng, i); break;
    }
    q.id = "q" + std::to_string(i);
    q.track = 1 + static_cast<int>((i / std::size(kAllTaskTypes)) % static_cast<size_t>(options.tracks));
    if (!options.unrouted) q.task_type = type;
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace forge
