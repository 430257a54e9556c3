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

#include "parplan/cost_model.h"

#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "parplan/strategy.h"

namespace parplan {
namespace {

constexpr double kMB = 1e6;

LayerSpec MakeLayer(int64_t param_bytes, int64_t act_bytes, double fwd_ms) {
  return LayerSpec{0, param_bytes, act_bytes, fwd_ms, ""};
}

TEST(Collectives, AllReduceOfTwoMovesTheFullPayload) {
  EXPECT_DOUBLE_EQ(
      CollectiveVolumeBytes(CollectiveKind::kAllReduce, 2, 100 * kMB),
      100 * kMB);
}

TEST(Collectives, ShardedDataParallelPathIsOnePointFiveTimesAllReduce) {
  // Two all-gathers plus one reduce-scatter against one all-reduce.
  for (int degree : {2, 4, 8, 16}) {
    for (double payload : {1.0, 1.0 * (1 << 20), 1.0 * (1 << 30)}) {
      const double sdp =
          CollectiveVolumeBytes(CollectiveKind::kAllGather, degree, payload) +
          CollectiveVolumeBytes(CollectiveKind::kAllGather, degree, payload) +
          CollectiveVolumeBytes(CollectiveKind::kReduceScatter, degree,
                                payload);
      const double dp =
          CollectiveVolumeBytes(CollectiveKind::kAllReduce, degree, payload);
      EXPECT_EQ(sdp, 1.5 * dp) << "degree " << degree;
    }
  }
  EXPECT_DOUBLE_EQ(
      CollectiveVolumeBytes(CollectiveKind::kAllGather, 2, 100 * kMB) * 2 +
          CollectiveVolumeBytes(CollectiveKind::kReduceScatter, 2, 100 * kMB),
      150 * kMB);
}

TEST(Collectives, LoneDeviceCommunicatesNothing) {
  for (auto kind : {CollectiveKind::kAllReduce, CollectiveKind::kAllGather,
                    CollectiveKind::kReduceScatter}) {
    EXPECT_EQ(CollectiveVolumeBytes(kind, 1, 123456.0), 0.0);
  }
}

TEST(Memory, PureDataParallelReplicatesModelAndSplitsData) {
  const LayerSpec layer = MakeLayer(100, 10, 1.0);
  const auto mem = EstimateMemory(layer, StrategyFromString("dp:2"), 4, {});
  ASSERT_TRUE(mem.has_value());
  EXPECT_DOUBLE_EQ(mem->params_bytes, 100.0);
  EXPECT_DOUBLE_EQ(mem->grads_bytes, 100.0);
  EXPECT_DOUBLE_EQ(mem->optimizer_bytes, 200.0);
  EXPECT_DOUBLE_EQ(mem->activation_bytes, 20.0);
}

TEST(Memory, ShardedDataParallelHalvesModelState) {
  const LayerSpec layer = MakeLayer(100, 10, 1.0);
  const auto mem = EstimateMemory(layer, StrategyFromString("sdp:2"), 4, {});
  ASSERT_TRUE(mem.has_value());
  EXPECT_DOUBLE_EQ(mem->params_bytes, 50.0);
  EXPECT_DOUBLE_EQ(mem->grads_bytes, 50.0);
  EXPECT_DOUBLE_EQ(mem->optimizer_bytes, 100.0);
  EXPECT_DOUBLE_EQ(mem->activation_bytes, 20.0);
}

TEST(Memory, TensorParallelReplicatesActivationFraction) {
  const LayerSpec layer = MakeLayer(100, 10, 1.0);
  const auto mem = EstimateMemory(layer, StrategyFromString("tp:2"), 4, {});
  ASSERT_TRUE(mem.has_value());
  EXPECT_DOUBLE_EQ(mem->params_bytes, 50.0);
  // 10 bytes/sample x 4 samples x ((1-0.25)/2 + 0.25)
  EXPECT_DOUBLE_EQ(mem->activation_bytes, 25.0);
}

TEST(Memory, MoreReplicasThanSamplesIsInfeasible) {
  const LayerSpec layer = MakeLayer(100, 10, 1.0);
  EXPECT_FALSE(
      EstimateMemory(layer, StrategyFromString("dp:4"), 2, {}).has_value());
  EXPECT_FALSE(
      EstimateMemory(layer, StrategyFromString("dp:2,sdp:2"), 2, {})
          .has_value());
  EXPECT_TRUE(
      EstimateMemory(layer, StrategyFromString("tp:4"), 2, {}).has_value());
}

TEST(Memory, TotalNonIncreasingInShardingDegrees) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int64_t> bytes(0, int64_t{1} << 32);
  for (int trial = 0; trial < 200; ++trial) {
    const LayerSpec layer = MakeLayer(bytes(rng), bytes(rng), 1.0);
    const int batch = 64;
    for (const char* dim : {"sdp", "tp"}) {
      double prev = EstimateMemory(layer, HybridStrategy{}, batch, {})
                        ->total_bytes();
      for (int degree = 2; degree <= 16; degree *= 2) {
        const auto strategy = StrategyFromString(
            std::string(dim) + ":" + std::to_string(degree));
        const double total =
            EstimateMemory(layer, strategy, batch, {})->total_bytes();
        EXPECT_LE(total, prev) << dim << ":" << degree;
        prev = total;
      }
    }
    double prev_act =
        EstimateMemory(layer, HybridStrategy{}, batch, {})->activation_bytes;
    for (int degree = 2; degree <= 16; degree *= 2) {
      const auto strategy =
          StrategyFromString("dp:" + std::to_string(degree));
      const double act =
          EstimateMemory(layer, strategy, batch, {})->activation_bytes;
      EXPECT_LE(act, prev_act) << "dp:" << degree;
      prev_act = act;
    }
  }
}

TEST(LayerCost, SerialLayerIsComputeOnly) {
  const LayerSpec layer = MakeLayer(0, 0, 10.0);
  const auto cost =
      EstimateLayerCost(layer, HybridStrategy{}, 1, 13.0, {});
  ASSERT_TRUE(cost.has_value());
  EXPECT_DOUBLE_EQ(cost->forward_ms, 10.0);
  EXPECT_DOUBLE_EQ(cost->backward_ms, 20.0);
  EXPECT_DOUBLE_EQ(cost->comm_ms_unoverlapped, 0.0);
  EXPECT_DOUBLE_EQ(cost->total_ms, 30.0);
}

TEST(LayerCost, OverlappedGradientSyncTakesSlowedMax) {
  // dp:2, 4 samples -> 2 per device; fwd 5 ms/sample -> F=10, Bk=20.
  // 8 MB parameters at 1 GB/s -> all-reduce volume 8 MB -> 8 ms.
  const LayerSpec layer = MakeLayer(8000000, 0, 5.0);
  const auto cost =
      EstimateLayerCost(layer, StrategyFromString("dp:2"), 4, 1.0, {});
  ASSERT_TRUE(cost.has_value());
  EXPECT_DOUBLE_EQ(cost->backward_ms, 20.0);
  EXPECT_DOUBLE_EQ(cost->comm_ms_unoverlapped, 8.0);
  // Backward segment max(20, 8) * 1.3 = 26, plus forward 10.
  EXPECT_DOUBLE_EQ(cost->total_ms, 36.0);

  CostProfile classic;
  classic.overlap_slowdown = 1.0;
  const auto plain =
      EstimateLayerCost(layer, StrategyFromString("dp:2"), 4, 1.0, classic);
  ASSERT_TRUE(plain.has_value());
  EXPECT_DOUBLE_EQ(plain->total_ms, 30.0);  // 10 + max(20, 8)
}

TEST(LayerCost, ShardedGatherIsSerialBeforeForward) {
  const LayerSpec layer = MakeLayer(8000000, 0, 5.0);
  const auto dp =
      EstimateLayerCost(layer, StrategyFromString("dp:2"), 4, 1.0, {});
  const auto sdp =
      EstimateLayerCost(layer, StrategyFromString("sdp:2"), 4, 1.0, {});
  ASSERT_TRUE(dp && sdp);
  // One forward all-gather (4 ms) is serial; gather+scatter (8 ms) overlaps.
  EXPECT_DOUBLE_EQ(sdp->total_ms, 10.0 + 4.0 + 26.0);
  EXPECT_DOUBLE_EQ(sdp->comm_ms_unoverlapped, 12.0);
  EXPECT_DOUBLE_EQ(sdp->comm_ms_unoverlapped,
                   1.5 * dp->comm_ms_unoverlapped);
}

TEST(LayerCost, TensorParallelSyncIsSerialBothDirections) {
  // tp:2 with rho=0.25: payload = act * batch * 0.25 = 8 MB -> all-reduce
  // volume 8 MB -> 8 ms at 1 GB/s, charged in forward and backward.
  const LayerSpec layer = MakeLayer(0, 8000000, 5.0);
  const auto cost =
      EstimateLayerCost(layer, StrategyFromString("tp:2"), 4, 1.0, {});
  ASSERT_TRUE(cost.has_value());
  // b=4 (tp does not split data): F=20, Bk=40, no gradient sync.
  EXPECT_DOUBLE_EQ(cost->forward_ms, 20.0);
  EXPECT_DOUBLE_EQ(cost->comm_ms_unoverlapped, 16.0);
  EXPECT_DOUBLE_EQ(cost->total_ms, 20.0 + 8.0 + 8.0 + 40.0);
}

TEST(LayerCost, ZeroLayerCostsNothing) {
  const LayerSpec layer = MakeLayer(0, 0, 0.0);
  for (const HybridStrategy& s : EnumerateStrategies(8, false).strategies) {
    const auto cost = EstimateLayerCost(layer, s, 64, 13.0, {});
    const auto mem = EstimateMemory(layer, s, 64, {});
    ASSERT_TRUE(cost && mem);
    EXPECT_EQ(cost->total_ms, 0.0) << s.ToString();
    EXPECT_EQ(mem->total_bytes(), 0.0) << s.ToString();
  }
}

TEST(LayerCost, OverlapSlowdownNeverSpeedsThingsUp) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int64_t> bytes(0, int64_t{1} << 30);
  std::uniform_real_distribution<double> time_ms(0.0, 5.0);
  CostProfile slowed;
  CostProfile classic;
  classic.overlap_slowdown = 1.0;
  const StrategySet strategies = EnumerateStrategies(8, false);
  for (int trial = 0; trial < 100; ++trial) {
    const LayerSpec layer = MakeLayer(bytes(rng), bytes(rng), time_ms(rng));
    for (const HybridStrategy& s : strategies.strategies) {
      const auto with = EstimateLayerCost(layer, s, 16, 13.0, slowed);
      const auto without = EstimateLayerCost(layer, s, 16, 13.0, classic);
      ASSERT_TRUE(with && without);
      EXPECT_GE(with->total_ms, without->total_ms) << s.ToString();
    }
  }
}

TEST(CostModel, MixingDpAndSdpNeverBeatsPureSdp) {
  // Communication factor of n1-way DP + n2-way SDP vs pure SDP over n1*n2.
  for (int n = 4; n <= 1024; n *= 2) {
    for (int n1 = 2; n1 * 2 <= n; n1 *= 2) {
      const int n2 = n / n1;
      const double mixed = 2.0 * (n1 - 1) / n1 + 3.0 * (n2 - 1) / n2;
      const double pure = 3.0 * (n - 1) / n;
      EXPECT_GT(mixed, pure) << n1 << "x" << n2;
    }
  }
}

TEST(Transformation, IdenticalStrategiesAreFree) {
  const LayerSpec layer = MakeLayer(1000, 1000, 1.0);
  const auto a = StrategyFromString("dp:4");
  EXPECT_EQ(TransformationCostMs(layer, a, a, 8, 13.0), 0.0);
  const auto b = StrategyFromString("tp:4");
  EXPECT_EQ(TransformationCostMs(layer, b, b, 8, 13.0), 0.0);
}

TEST(Transformation, ReorderedLevelsAreFree) {
  const LayerSpec layer = MakeLayer(1000, 1000, 1.0);
  const auto a = StrategyFromString("tp:2,dp:2");
  const auto b = StrategyFromString("dp:2,tp:2");
  EXPECT_EQ(TransformationCostMs(layer, a, b, 8, 13.0), 0.0);
}

TEST(Transformation, WideningTheReplicaCostsTime) {
  // dp:2,tp:2 -> dp:4 re-replicates parameters and respreads activations.
  const LayerSpec layer = MakeLayer(8000000, 1000000, 1.0);
  const auto prev = StrategyFromString("dp:2,tp:2");
  const auto cur = StrategyFromString("dp:4");
  const double cost = TransformationCostMs(layer, prev, cur, 8, 1.0);
  // Activations: 1 MB * 8 * |1/4 - 1/2| = 2 MB. Parameters: 8 MB * (1 - 1/2)
  // = 4 MB. 6 MB at 1 GB/s = 6 ms.
  EXPECT_DOUBLE_EQ(cost, 6.0);
  // The reverse direction releases parameter replicas for free and only
  // moves activations.
  EXPECT_DOUBLE_EQ(TransformationCostMs(layer, cur, prev, 8, 1.0), 2.0);
}

TEST(Transformation, GroupSizeMismatchRejected) {
  const LayerSpec layer = MakeLayer(1000, 1000, 1.0);
  EXPECT_THROW(TransformationCostMs(layer, StrategyFromString("dp:2"),
                                    StrategyFromString("dp:4"), 8, 13.0),
               ValidationError);
}

TEST(Profile, DefaultsAndValidation) {
  const CostProfile profile;
  EXPECT_DOUBLE_EQ(profile.backward_multiplier, 2.0);
  EXPECT_DOUBLE_EQ(profile.overlap_slowdown, 1.3);
  EXPECT_DOUBLE_EQ(profile.optimizer_state_multiplier, 2.0);
  EXPECT_DOUBLE_EQ(profile.tp_activation_replication, 0.25);
  EXPECT_EQ(profile.memory_granularity_bytes, 64 * kMiB);

  CostProfile bad = profile;
  bad.overlap_slowdown = 0.9;
  EXPECT_THROW(ValidateProfile(bad), ValidationError);
  bad = profile;
  bad.tp_activation_replication = 1.5;
  EXPECT_THROW(ValidateProfile(bad), ValidationError);
  bad = profile;
  bad.memory_granularity_bytes = 0;
  EXPECT_THROW(ValidateProfile(bad), ValidationError);

  // Absent fields fall back to defaults.
  const CostProfile partial =
      ProfileFromJson(nlohmann::json{{"overlap_slowdown", 1.1}});
  EXPECT_DOUBLE_EQ(partial.overlap_slowdown, 1.1);
  EXPECT_DOUBLE_EQ(partial.backward_multiplier, 2.0);

  EXPECT_EQ(ProfileFromJson(ProfileToJson(partial)), partial);
}

}  // namespace
}  // namespace parplan
