// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class Errc {
  kIo,
  kMalformedHeader,
  kTruncatedData,
  kOverlappingOffsets,
  kUnknownDtype,
  kInvalidTensor,
  kShapeMismatch,
  kNonFinite,
  kInvalidArgument,
  kCorruptedPack,
  kUnrouted,
  kConfiguration,
  kEmptyPrompt,
  kEmptyInput,
  kRecipeUnavailable,
};

std::string_view errc_name(Errc code);

/// Every recoverable failure in the library is reported as a forge::Error
/// carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

using WarningHandler = std::function<void(std::string_view)>;

// Installs a process-wide sink for non-fatal diagnostics and returns the
// previous one. The default writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace forge
