// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "forge/error.hpp"

#include <iostream>
#include <mutex>

namespace forge {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kIo: return "io";
    case Errc::kMalformedHeader: return "malformed_header";
    case Errc::kTruncatedData: return "truncated_data";
    case Errc::kOverlappingOffsets: return "overlapping_offsets";
    case Errc::kUnknownDtype: return "unknown_dtype";
    case Errc::kInvalidTensor: return "invalid_tensor";
    case Errc::kShapeMismatch: return "shape_mismatch";
    case Errc::kNonFinite: return "non_finite";
    case Errc::kInvalidArgument: return "invalid_argument";
    case Errc::kCorruptedPack: return "corrupted_pack";
    case Errc::kUnrouted: return "unrouted";
    case Errc::kConfiguration: return "configuration";
    case Errc::kEmptyPrompt: return "empty_prompt";
    case Errc::kEmptyInput: return "empty_input";
    case Errc::kRecipeUnavailable: return "recipe_unavailable";
  }
  return "unknown";
}

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

}  // namespace forge
