// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/logits.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

void validate_vocab(const Vocab& vocab) {
  if (vocab.tokens.empty()) throw Error(Errc::kConfiguration, "vocabulary is empty");
  if (vocab.eos_id < 0 || static_cast<size_t>(vocab.eos_id) >= vocab.size()) {
    throw Error(Errc::kConfiguration, "eos_id outside the vocabulary");
  }
}

LogitsProcessor whitelist_processor(const Vocab& vocab, std::string_view allowed_chars) {
  validate_vocab(vocab);
  if (allowed_chars.empty()) throw Error(Errc::kConfiguration, "whitelist charset is empty");
  bool allowed[256] = {};
  for (unsigned char c : allowed_chars) allowed[c] = true;
  allowed[static_cast<unsigned char>(' ')] = true;

  auto keep = std::make_shared<std::vector<bool>>(vocab.size(), false);
  size_t survivors = 0;
  for (size_t id = 0; id < vocab.size(); ++id) {
    if (static_cast<TokenId>(id) == vocab.eos_id) {
      (*keep)[id] = true;
      continue;
    }
    const std::string& s = vocab.tokens[id];
    const bool ok = !s.empty() && std::all_of(s.begin(), s.end(), [&](char c) {
      return allowed[static_cast<unsigned char>(c)];
    });
    (*keep)[id] = ok;
    survivors += ok;
  }
  if (survivors == 0) {
    throw Error(Errc::kConfiguration, "whitelist leaves no token except EOS");
  }
  return [keep](std::span<const TokenId>, std::span<const TokenId>, std::span<const float> logits) {
    std::vector<float> out(logits.begin(), logits.end());
    const size_t n = std::min(out.size(), keep->size());
    for (size_t i = 0; i < n; ++i) {
      if (!(*keep)[i]) out[i] = kMaskedLogit;
    }
    return out;
  };
}

LogitsProcessor prompt_boost_processor(float boost) {
  if (!std::isfinite(boost)) throw Error(Errc::kConfiguration, "prompt boost must be finite");
  return [boost](std::span<const TokenId> prompt, std::span<const TokenId>,
                 std::span<const float> logits) {
    std::vector<float> out(logits.begin(), logits.end());
    if (boost == 0.0f) return out;
    std::vector<bool> seen(out.size(), false);
    for (TokenId id : prompt) {
      if (id < 0 || static_cast<size_t>(id) >= out.size() || seen[static_cast<size_t>(id)]) continue;
      seen[static_cast<size_t>(id)] = true;
      float& v = out[static_cast<size_t>(id)];
      if (!is_masked(v)) v = std::max(v + boost, std::numeric_limits<float>::lowest());
    }
    return out;
  };
}

std::vector<float> apply_chain(const LogitsProcessorChain& chain, std::span<const TokenId> prompt,
                               std::span<const TokenId> generated, std::span<const float> logits) {
  std::vector<float> current(logits.begin(), logits.end());
  for (size_t s = 0; s < chain.stages.size(); ++s) {
    std::vector<float> next = chain.stages[s](prompt, generated, current);
    if (next.size() != current.size()) {
      throw Error(Errc::kShapeMismatch, "logits stage " + std::to_string(s) + " changed length from " +
                                            std::to_string(current.size()) + " to " +
                                            std::to_string(next.size()));
    }
    for (float v : next) {
      if (std::isnan(v)) {
        throw Error(Errc::kNonFinite, "logits stage " + std::to_string(s) + " introduced NaN");
      }
    }
    current = std::move(next);
  }
  return current;
}

ChainSpec chain_spec_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::kConfiguration, "chain config must be a JSON array");
  ChainSpec spec;
  for (const json& stage : j) {
    if (!stage.is_object() || !stage.contains("type") || !stage["type"].is_string()) {
      throw Error(Errc::kConfiguration, "chain stage needs a string 'type'");
    }
    const std::string type = stage["type"].get<std::string>();
    StageSpec s;
    try {
      if (type == "whitelist") {
        s.kind = StageSpec::Kind::kWhitelist;
        s.chars = stage.value("chars", std::string(kDigitsAndComma));
      } else if (type == "prompt_boost") {
        s.kind = StageSpec::Kind::kPromptBoost;
        s.boost = stage.value("boost", kDefaultPromptBoost);
      } else {
        throw Error(Errc::kConfiguration, "unknown chain stage type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(Errc::kConfiguration, std::string("bad chain stage: ") + e.what());
    }
    for (auto it = stage.begin(); it != stage.end(); ++it) {
      const std::string& k = it.key();
      const bool known = k == "type" || (type == "whitelist" && k == "chars") ||
                         (type == "prompt_boost" && k == "boost");
      if (!known) throw Error(Errc::kConfiguration, "unknown key '" + k + "' in " + type + " stage");
    }
    spec.push_back(std::move(s));
  }
  return spec;
}

json chain_spec_to_json(const ChainSpec& spec) {
  json out = json::array();
  for (const StageSpec& s : spec) {
    if (s.kind == StageSpec::Kind::kWhitelist) {
      out.push_back({{"type", "whitelist"}, {"chars", s.chars}});
    } else {
      out.push_back({{"type", "prompt_boost"}, {"boost", s.boost}});
    }
  }
  return out;
}

LogitsProcessorChain build_chain(const ChainSpec& spec, const Vocab& vocab) {
  LogitsProcessorChain chain;
  for (const StageSpec& s : spec) {
    chain.stages.push_back(s.kind == StageSpec::Kind::kWhitelist ? whitelist_processor(vocab, s.chars)
                                                                 : prompt_boost_processor(s.boost));
  }
  return chain;
}

const ChainSpec& ChainConfig::for_task(TaskType type) const {
  auto it = per_task.find(type);
  return it == per_task.end() ? fallback : it->second;
}

ChainConfig ChainConfig::from_json(const json& j) {
  ChainConfig cfg;
  if (j.is_array()) {
    cfg.fallback = chain_spec_from_json(j);
    return cfg;
  }
  if (!j.is_object()) throw Error(Errc::kConfiguration, "chain config must be an array or object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "default") {
      cfg.fallback = chain_spec_from_json(*it);
      continue;
    }
    auto t = parse_task_type(it.key());
    if (!t) throw Error(Errc::kConfiguration, "unknown task type '" + it.key() + "' in chain config");
    cfg.per_task[*t] = chain_spec_from_json(*it);
  }
  return cfg;
}

json ChainConfig::to_json() const {
  json out = json::object();
  out["default"] = chain_spec_to_json(fallback);
  for (const auto& [t, spec] : per_task) out[std::string(task_type_name(t))] = chain_spec_to_json(spec);
  return out;
}

ChainConfig recommended_chain_config() {
  ChainConfig cfg;
  const StageSpec digits{StageSpec::Kind::kWhitelist, std::string(kDigitsAndComma), 0.0f};
  cfg.per_task[TaskType::kMultipleChoice] = {digits};
  cfg.per_task[TaskType::kRanking] = {digits};
  cfg.per_task[TaskType::kRetrieval] = {digits};
  cfg.per_task[TaskType::kNamedEntityRecognition] = {
      {StageSpec::Kind::kPromptBoost, "", kDefaultPromptBoost}};
  return cfg;
}

}  // namespace forge
