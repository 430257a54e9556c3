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

#include "parplan/strategy.h"

#include <set>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace parplan {
namespace {

int PrunedSizeSummedOverPipelineDegrees(int num_devices, bool prune) {
  int total = 0;
  for (int p = 1; p <= num_devices; p *= 2) {
    total += EnumerateStrategies(num_devices / p, prune).size();
  }
  return total;
}

TEST(Strategy, SerialGroupHasExactlyTheEmptyStrategy) {
  const StrategySet set = EnumerateStrategies(1, true);
  ASSERT_EQ(set.size(), 1);
  EXPECT_TRUE(set.strategies[0].levels.empty());
  EXPECT_EQ(set.strategies[0].group_size, 1);
}

TEST(Strategy, GroupOfTwoHasThreeSingleLevelStrategies) {
  const StrategySet set = EnumerateStrategies(2, false);
  ASSERT_EQ(set.size(), 3);
  EXPECT_EQ(set.strategies[0].ToString(), "tp:2");
  EXPECT_EQ(set.strategies[1].ToString(), "dp:2");
  EXPECT_EQ(set.strategies[2].ToString(), "sdp:2");
}

TEST(Strategy, EightDeviceCountsMatchPublishedNumbers) {
  EXPECT_EQ(EnumerateStrategies(8, false).size(), 21);
  EXPECT_EQ(EnumerateStrategies(4, false).size(), 9);
  EXPECT_EQ(EnumerateStrategies(8, true).size(), 11);
  EXPECT_EQ(EnumerateStrategies(4, true).size(), 7);
  // Summed over pipeline degrees {1,2,4,8} on 8 devices.
  EXPECT_EQ(PrunedSizeSummedOverPipelineDegrees(8, false), 34);
  EXPECT_EQ(PrunedSizeSummedOverPipelineDegrees(8, true), 22);
}

TEST(Strategy, PrunedSumStrictlySmallerFromFourDevicesUp) {
  for (int n = 1; n <= 64; n *= 2) {
    const int unpruned = PrunedSizeSummedOverPipelineDegrees(n, false);
    const int pruned = PrunedSizeSummedOverPipelineDegrees(n, true);
    if (n >= 4) {
      EXPECT_LT(pruned, unpruned) << "n=" << n;
    } else {
      EXPECT_EQ(pruned, unpruned) << "n=" << n;
    }
  }
}

TEST(Strategy, RejectsNonPowerOfTwoGroup) {
  EXPECT_THROW(EnumerateStrategies(3, true), ValidationError);
  EXPECT_THROW(EnumerateStrategies(0, true), ValidationError);
  EXPECT_THROW(EnumerateStrategies(-8, true), ValidationError);
}

TEST(Strategy, PruningRemovesExactlyDpSdpMixes) {
  for (int group : {2, 4, 8, 16, 32}) {
    const StrategySet unpruned = EnumerateStrategies(group, false);
    const StrategySet pruned = EnumerateStrategies(group, true);
    std::vector<HybridStrategy> kept;
    for (const HybridStrategy& s : unpruned.strategies) {
      if (!s.ContainsDpAndSdp()) kept.push_back(s);
    }
    EXPECT_EQ(kept, pruned.strategies) << "group " << group;
  }
}

TEST(Strategy, EnumerationIsDeterministic) {
  const StrategySet a = EnumerateStrategies(16, true);
  const StrategySet b = EnumerateStrategies(16, true);
  EXPECT_EQ(a.strategies, b.strategies);
}

TEST(Strategy, EnumeratedStrategiesSatisfyInvariants) {
  for (int group : {1, 2, 4, 8, 16, 32, 64}) {
    for (bool prune : {false, true}) {
      const StrategySet set = EnumerateStrategies(group, prune);
      std::set<std::string> seen;
      for (const HybridStrategy& s : set.strategies) {
        EXPECT_EQ(s.group_size, group);
        int product = 1;
        bool dims_seen[3] = {false, false, false};
        for (const StrategyLevel& level : s.levels) {
          EXPECT_GE(level.degree, 2);
          EXPECT_TRUE(IsPowerOfTwo(level.degree));
          EXPECT_FALSE(dims_seen[static_cast<int>(level.dim)])
              << "dimension repeats in " << s.ToString();
          dims_seen[static_cast<int>(level.dim)] = true;
          product *= level.degree;
        }
        EXPECT_EQ(product, group) << s.ToString();
        EXPECT_TRUE(seen.insert(s.ToString()).second)
            << "duplicate " << s.ToString();
        if (prune) {
          EXPECT_FALSE(s.ContainsDpAndSdp()) << s.ToString();
        }
      }
    }
  }
}

TEST(Strategy, ContainsDpAndSdp) {
  EXPECT_TRUE(StrategyFromString("dp:2,sdp:2").ContainsDpAndSdp());
  EXPECT_FALSE(StrategyFromString("dp:2,tp:2").ContainsDpAndSdp());
  EXPECT_FALSE(StrategyFromString("sdp:8").ContainsDpAndSdp());
  EXPECT_FALSE(HybridStrategy{}.ContainsDpAndSdp());
}

TEST(Strategy, DimDegrees) {
  const auto mixed = StrategyFromString("tp:2,dp:4").DimDegrees();
  EXPECT_EQ(mixed.dp, 4);
  EXPECT_EQ(mixed.sdp, 1);
  EXPECT_EQ(mixed.tp, 2);

  const auto serial = HybridStrategy{}.DimDegrees();
  EXPECT_EQ(serial.dp, 1);
  EXPECT_EQ(serial.sdp, 1);
  EXPECT_EQ(serial.tp, 1);

  const auto sharded = StrategyFromString("sdp:8").DimDegrees();
  EXPECT_EQ(sharded.dp, 1);
  EXPECT_EQ(sharded.sdp, 8);
  EXPECT_EQ(sharded.tp, 1);
}

TEST(Strategy, StringRoundTrip) {
  for (int group : {1, 2, 4, 8, 16}) {
    for (const HybridStrategy& s :
         EnumerateStrategies(group, false).strategies) {
      const HybridStrategy parsed = StrategyFromString(s.ToString());
      EXPECT_EQ(parsed, s);
    }
  }
}

TEST(Strategy, ParserRejectsBadInput) {
  EXPECT_THROW(StrategyFromString("xp:2"), ValidationError);
  EXPECT_THROW(StrategyFromString("tp:3"), ValidationError);
  EXPECT_THROW(StrategyFromString("tp:2,tp:4"), ValidationError);
  EXPECT_THROW(StrategyFromString("tp"), ValidationError);
  EXPECT_THROW(StrategyFromString("tp:"), ValidationError);
}

TEST(Strategy, JsonDumpMatchesSchema) {
  const nlohmann::json j = StrategySetToJson(EnumerateStrategies(8, true));
  EXPECT_EQ(j.at("group_size").get<int>(), 8);
  EXPECT_TRUE(j.at("pruned").get<bool>());
  ASSERT_EQ(j.at("strategies").size(), 11u);
  // Canonical order: single-level strategies first, tp before dp before sdp.
  EXPECT_EQ(j.at("strategies")[0],
            nlohmann::json::array({"tp:8"}));
  EXPECT_EQ(j.at("strategies")[3],
            nlohmann::json::array({"tp:2", "dp:4"}));
}

}  // namespace
}  // namespace parplan
