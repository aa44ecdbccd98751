// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/decode.hpp"

#include <algorithm>

#include "forge/error.hpp"

namespace forge {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c >= 0x80;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

template <typename Fn>
void split_pieces(std::string_view text, Fn&& emit) {
  size_t i = 0;
  while (i < text.size()) {
    if (is_word_byte(static_cast<unsigned char>(text[i]))) {
      size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      emit(text.substr(i, j - i));
      i = j;
    } else {
      emit(text.substr(i, 1));
      ++i;
    }
  }
}

}  // namespace

ToyTokenizer::ToyTokenizer() {
  vocab_.eos_id = kEos;
  add(kEosSurface);
  add(kUnkSurface);
  add(" ");
  add("\n");
  add(",");
  for (char d = '0'; d <= '9'; ++d) add(std::string_view(&d, 1));
}

void ToyTokenizer::add(std::string_view piece) {
  std::string key(piece);
  if (index_.count(key)) return;
  const auto id = static_cast<TokenId>(vocab_.tokens.size());
  vocab_.tokens.push_back(key);
  index_.emplace(std::move(key), id);
}

ToyTokenizer ToyTokenizer::from_corpus(std::span<const std::string> corpus) {
  ToyTokenizer tok;
  for (const std::string& text : corpus) {
    split_pieces(text, [&](std::string_view piece) { tok.add(piece); });
  }
  return tok;
}

std::vector<TokenId> ToyTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  split_pieces(text, [&](std::string_view piece) {
    // Specials are never produced from raw text.
    if (piece != kEosSurface && piece != kUnkSurface) {
      if (auto it = index_.find(std::string(piece)); it != index_.end()) {
        ids.push_back(it->second);
        return;
      }
    }
    if (all_digits(piece)) {
      for (char d : piece) ids.push_back(index_.at(std::string(1, d)));
    } else {
      ids.push_back(kUnk);
    }
  });
  return ids;
}

std::string ToyTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kEos) continue;
    out += vocab_.surface(id);
  }
  return out;
}

uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ToyLM::ToyLM(uint64_t seed, size_t vocab_size, int context_window)
    : seed_(seed), vocab_size_(vocab_size), context_window_(context_window) {
  if (vocab_size == 0) throw Error(Errc::kInvalidArgument, "toy LM needs a non-empty vocabulary");
  if (context_window < 1) throw Error(Errc::kInvalidArgument, "context window must be >= 1");
}

std::vector<float> ToyLM::next_logits(std::span<const TokenId> context, size_t step) const {
  const size_t k = std::min(context.size(), static_cast<size_t>(context_window_));
  uint64_t h = mix64(seed_);
  h = mix64(h ^ static_cast<uint64_t>(k));
  for (TokenId id : context.subspan(context.size() - k)) {
    h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(id)));
  }
  h = mix64(h ^ (static_cast<uint64_t>(step) * 0xd1b54a32d192ed03ULL));

  std::vector<float> logits(vocab_size_);
  constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  for (size_t t = 0; t < vocab_size_; ++t) {
    const double u = static_cast<double>(mix64(h ^ (static_cast<uint64_t>(t) << 1 | 1)) >> 11) * kInv53;
    logits[t] = static_cast<float>(-kLogitRange + 2.0 * kLogitRange * u);
  }
  return logits;
}

DecodeResult greedy_decode(const ToyLM& lm, const ToyTokenizer& tokenizer, std::string_view prompt,
                           const LogitsProcessorChain& chain, int max_new) {
  if (max_new < 1) throw Error(Errc::kInvalidArgument, "max_new must be >= 1");
  if (lm.vocab_size() != tokenizer.size()) {
    throw Error(Errc::kInvalidArgument, "toy LM and tokenizer disagree on vocabulary size");
  }
  DecodeResult result;
  result.prompt_ids = tokenizer.encode(prompt);
  if (result.prompt_ids.empty()) throw Error(Errc::kEmptyPrompt, "prompt tokenizes to nothing");

  std::vector<TokenId> context = result.prompt_ids;
  for (int step = 0; step < max_new; ++step) {
    const std::vector<float> raw = lm.next_logits(context, static_cast<size_t>(step));
    const std::vector<float> logits = apply_chain(chain, result.prompt_ids, result.generated, raw);
    const auto best = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == tokenizer.vocab().eos_id) {
      result.stopped_on_eos = true;
      break;
    }
    result.generated.push_back(best);
    context.push_back(best);
  }
  result.text = tokenizer.decode(result.generated);
  return result;
}

}  // namespace forge
