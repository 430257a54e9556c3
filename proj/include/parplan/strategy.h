// Copyright 2026 The ParPlan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PARPLAN_STRATEGY_H_
#define PARPLAN_STRATEGY_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "parplan/common.h"

namespace parplan {

// In-group parallelism dimensions. Pipeline parallelism is applied outside
// the group (it fixes the group size) and is deliberately not a member.
// The enum order TP < DP < SDP is the canonical ordering used everywhere
// plans must be reproducible.
enum class ParallelDim { kTensor = 0, kData = 1, kShardedData = 2 };

std::string_view DimName(ParallelDim dim);  // "tp" / "dp" / "sdp"

struct StrategyLevel {
  ParallelDim dim = ParallelDim::kTensor;
  int degree = 1;

  friend bool operator==(const StrategyLevel&, const StrategyLevel&) = default;
};

// An ordered composition of parallelism dimensions applied to one device
// group, root to leaf. Level degrees are powers of two >= 2, no dimension
// repeats, and the degree product equals group_size. Order is significant:
// [tp:2,dp:4] and [dp:4,tp:2] are distinct strategies. An empty level list
// is the serial strategy of a 1-device group (a pure pipeline leaf).
struct HybridStrategy {
  std::vector<StrategyLevel> levels;
  int group_size = 1;

  struct Degrees {
    int dp = 1;
    int sdp = 1;
    int tp = 1;
  };
  // Degree per dimension; absent dimensions have degree 1, and
  // dp * sdp * tp == group_size.
  Degrees DimDegrees() const;

  bool ContainsDpAndSdp() const;

  // "tp:2,dp:4"; the serial strategy prints as "".
  std::string ToString() const;

  friend bool operator==(const HybridStrategy&, const HybridStrategy&) =
      default;
};

// Parses the exact grammar emitted by ToString. Throws ValidationError on
// unknown dimensions, bad degrees, repeated dimensions, or a degree product
// that is not a power of two.
HybridStrategy StrategyFromString(std::string_view text);

// The per-layer decision space for one device group.
struct StrategySet {
  int group_size = 1;
  bool pruned = false;
  std::vector<HybridStrategy> strategies;

  int size() const { return static_cast<int>(strategies.size()); }
};

// Enumerates every ordered composition of distinct dimensions from
// {TP, DP, SDP} whose degree product equals group_size, in a deterministic
// canonical order (fewer levels first, then lexicographic on (dim, degree)).
// With prune set, strategies mixing DP and SDP are removed: sharding
// everything is always cheaper than splitting the replica group between
// plain and sharded data parallelism. group_size must be a power of two.
StrategySet EnumerateStrategies(int group_size, bool prune);

nlohmann::json StrategySetToJson(const StrategySet& set);

}  // namespace parplan

#endif  // PARPLAN_STRATEGY_H_
