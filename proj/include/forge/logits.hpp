// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Composable logits processors applied before each greedy decoding step.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/task.hpp"

namespace forge {

using TokenId = int32_t;

struct Vocab {
  std::vector<std::string> tokens;
  TokenId eos_id = 0;

  size_t size() const { return tokens.size(); }
  const std::string& surface(TokenId id) const { return tokens[static_cast<size_t>(id)]; }
};

void validate_vocab(const Vocab& vocab);

// Stand-in for -inf: keeps softmax and argmax well defined.
inline constexpr float kMaskedLogit = std::numeric_limits<float>::lowest();

inline bool is_masked(float logit) { return logit == kMaskedLogit; }

/// A pure map (prompt ids, generated ids, logits) -> logits.
using LogitsProcessor = std::function<std::vector<float>(
    std::span<const TokenId> prompt, std::span<const TokenId> generated,
    std::span<const float> logits)>;

struct LogitsProcessorChain {
  std::vector<LogitsProcessor> stages;
};

inline constexpr std::string_view kDigitsAndComma = "0123456789,";
inline constexpr float kDefaultPromptBoost = 5.0f;

/// Masks every token whose surface holds a character outside
/// allowed_chars + ' '. EOS is never masked. Throws Errc::kConfiguration if
/// allowed_chars is empty or nothing but EOS survives.
LogitsProcessor whitelist_processor(const Vocab& vocab, std::string_view allowed_chars);

/// Adds `boost` to the logit of every token id present in the prompt.
LogitsProcessor prompt_boost_processor(float boost);

std::vector<float> apply_chain(const LogitsProcessorChain& chain, std::span<const TokenId> prompt,
                               std::span<const TokenId> generated, std::span<const float> logits);

// Vocabulary-independent description of a chain, read from JSON such as
// [{"type":"whitelist","chars":"0123456789,"},{"type":"prompt_boost","boost":5.0}].
struct StageSpec {
  enum class Kind { kWhitelist, kPromptBoost } kind = Kind::kWhitelist;
  std::string chars;
  float boost = kDefaultPromptBoost;
  bool operator==(const StageSpec&) const = default;
};

using ChainSpec = std::vector<StageSpec>;

ChainSpec chain_spec_from_json(const nlohmann::json& j);
nlohmann::json chain_spec_to_json(const ChainSpec& spec);
LogitsProcessorChain build_chain(const ChainSpec& spec, const Vocab& vocab);

/// Chains selected per task type. A JSON array applies to every task type;
/// an object maps task-type names (or "default") to arrays.
struct ChainConfig {
  ChainSpec fallback;
  std::map<TaskType, ChainSpec> per_task;

  const ChainSpec& for_task(TaskType type) const;

  static ChainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Whitelist for MC/ranking/retrieval and prompt boost for NER.
ChainConfig recommended_chain_config();

}  // namespace forge
