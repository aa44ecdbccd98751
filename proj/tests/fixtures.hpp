// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Published leaderboard rows (per-track scores, higher is better).

#pragma once

#include <map>
#include <string>

namespace forge::fixture {

inline std::map<std::string, std::map<int, double>> leaderboard() {
  return {
      {"Team_NVIDIA", {{1, 0.833}, {2, 0.791}, {3, 0.746}, {4, 0.761}, {5, 0.788}}},
      {"AML_LabCityU", {{1, 0.825}, {2, 0.781}, {3, 0.728}, {4, 0.715}, {5, 0.782}}},
      {"shimmering_as_...", {{1, 0.824}, {2, 0.747}, {3, 0.713}, {4, 0.735}, {5, 0.763}}},
      {"CM_RLLM", {{1, 0.823}, {2, 0.728}, {3, 0.722}, {4, 0.690}, {5, 0.773}}},
      {"ZJU_AI4H", {{1, 0.791}, {2, 0.784}, {3, 0.694}, {4, 0.706}, {5, 0.746}}},
      {"BMI_DLUT", {{3, 0.733}}},
  };
}

}  // namespace forge::fixture
