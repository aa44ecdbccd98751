// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic toy language model and greedy decoding loop. Logits come
// from a keyed 64-bit hash of (seed, last k context ids, step), so every
// decode is reproducible bit for bit on any platform.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forge/logits.hpp"

namespace forge {

class ToyTokenizer {
 public:
  static constexpr TokenId kEos = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kEosSurface = "</s>";
  static constexpr std::string_view kUnkSurface = "<unk>";

  // Base vocabulary only: EOS, UNK, space, newline, comma, digits.
  ToyTokenizer();

  /// Vocabulary = base tokens plus every word and punctuation piece of the
  /// corpus, in first-appearance order.
  static ToyTokenizer from_corpus(std::span<const std::string> corpus);

  /// Words are maximal runs of ASCII alphanumerics, '_' and bytes >= 0x80;
  /// every other byte is its own piece. Unknown words map to UNK, except
  /// digit runs, which fall back to single digits.
  std::vector<TokenId> encode(std::string_view text) const;
  // Concatenates surfaces; EOS contributes nothing.
  std::string decode(std::span<const TokenId> ids) const;

  const Vocab& vocab() const { return vocab_; }
  size_t size() const { return vocab_.size(); }

 private:
  void add(std::string_view piece);
  Vocab vocab_;
  std::unordered_map<std::string, TokenId> index_;
};

// SplitMix64 finalizer.
uint64_t mix64(uint64_t z);

class ToyLM {
 public:
  static constexpr int kDefaultContextWindow = 8;
  static constexpr float kLogitRange = 4.0f;

  ToyLM(uint64_t seed, size_t vocab_size, int context_window = kDefaultContextWindow);

  /// Logits in [-4, 4] as a pure function of (seed, last context_window ids
  /// of context, step).
  std::vector<float> next_logits(std::span<const TokenId> context, size_t step) const;

  uint64_t seed() const { return seed_; }
  size_t vocab_size() const { return vocab_size_; }
  int context_window() const { return context_window_; }

 private:
  uint64_t seed_;
  size_t vocab_size_;
  int context_window_;
};

struct DecodeResult {
  std::string text;
  std::vector<TokenId> prompt_ids;
  std::vector<TokenId> generated;  // excludes a terminating EOS
  bool stopped_on_eos = false;
};

/// Greedy argmax over chain-processed logits until EOS or max_new tokens.
/// Ties go to the lowest token id. Throws Errc::kEmptyPrompt if the prompt
/// tokenizes to nothing and kInvalidArgument if max_new < 1.
DecodeResult greedy_decode(const ToyLM& lm, const ToyTokenizer& tokenizer, std::string_view prompt,
                           const LogitsProcessorChain& chain, int max_new);

}  // namespace forge
