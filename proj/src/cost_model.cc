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

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace parplan {

using nlohmann::json;

void ValidateProfile(const CostProfile& profile) {
  if (!(profile.backward_multiplier > 0.0)) {
    throw ValidationError("profile: backward_multiplier must be > 0");
  }
  if (!(profile.overlap_slowdown >= 1.0)) {
    throw ValidationError("profile: overlap_slowdown must be >= 1");
  }
  if (!(profile.optimizer_state_multiplier >= 0.0)) {
    throw ValidationError("profile: optimizer_state_multiplier must be >= 0");
  }
  if (!(profile.tp_activation_replication >= 0.0 &&
        profile.tp_activation_replication <= 1.0)) {
    throw ValidationError(
        "profile: tp_activation_replication must be in [0, 1]");
  }
  if (profile.memory_granularity_bytes <= 0) {
    throw ValidationError("profile: memory_granularity_bytes must be > 0");
  }
}

CostProfile ProfileFromJson(const json& j) {
  CostProfile profile;
  try {
    profile.backward_multiplier =
        j.value("backward_multiplier", profile.backward_multiplier);
    profile.overlap_slowdown =
        j.value("overlap_slowdown", profile.overlap_slowdown);
    profile.optimizer_state_multiplier = j.value(
        "optimizer_state_multiplier", profile.optimizer_state_multiplier);
    profile.tp_activation_replication = j.value(
        "tp_activation_replication", profile.tp_activation_replication);
    profile.memory_granularity_bytes =
        j.value("memory_granularity_bytes", profile.memory_granularity_bytes);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("profile: malformed description: ") +
                          e.what());
  }
  ValidateProfile(profile);
  return profile;
}

json ProfileToJson(const CostProfile& profile) {
  return json{
      {"backward_multiplier", profile.backward_multiplier},
      {"overlap_slowdown", profile.overlap_slowdown},
      {"optimizer_state_multiplier", profile.optimizer_state_multiplier},
      {"tp_activation_replication", profile.tp_activation_replication},
      {"memory_granularity_bytes", profile.memory_granularity_bytes},
  };
}

CostProfile LoadProfile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("profile: cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("profile: parse error in " + path + ": " + e.what());
  }
  return ProfileFromJson(j);
}

int MemoryUnits(double bytes, int64_t granularity_bytes) {
  return static_cast<int>(
      std::ceil(bytes / static_cast<double>(granularity_bytes)));
}

double CollectiveVolumeBytes(CollectiveKind kind, int degree,
                             double payload_bytes) {
  if (degree < 1) {
    throw ValidationError("collective: degree must be >= 1");
  }
  if (!(payload_bytes >= 0.0)) {
    throw ValidationError("collective: payload must be >= 0");
  }
  if (degree == 1) return 0.0;
  const double shard_fraction =
      payload_bytes * static_cast<double>(degree - 1) /
      static_cast<double>(degree);
  switch (kind) {
    case CollectiveKind::kAllReduce:
      return 2.0 * shard_fraction;
    case CollectiveKind::kAllGather:
    case CollectiveKind::kReduceScatter:
      return shard_fraction;
  }
  return 0.0;
}

std::optional<MemoryBreakdown> EstimateMemory(const LayerSpec& layer,
                                              const HybridStrategy& strategy,
                                              int batch_per_group,
                                              const CostProfile& profile) {
  if (batch_per_group < 1) {
    throw ValidationError("memory: batch_per_group must be >= 1");
  }
  const auto [dp, sdp, tp] = strategy.DimDegrees();
  const int data_split = dp * sdp;
  if (data_split > batch_per_group) {
    return std::nullopt;  // fewer samples than data replicas
  }
  const double rho = profile.tp_activation_replication;
  MemoryBreakdown mem;
  mem.params_bytes =
      static_cast<double>(layer.param_bytes) / static_cast<double>(tp * sdp);
  mem.grads_bytes = mem.params_bytes;
  mem.optimizer_bytes = mem.params_bytes * profile.optimizer_state_multiplier;
  const double samples_per_device =
      static_cast<double>(batch_per_group) / static_cast<double>(data_split);
  mem.activation_bytes =
      static_cast<double>(layer.activation_bytes_per_sample) *
      samples_per_device * ((1.0 - rho) / static_cast<double>(tp) + rho);
  return mem;
}

std::optional<LayerCost> EstimateLayerCost(const LayerSpec& layer,
                                           const HybridStrategy& strategy,
                                           int batch_per_group,
                                           double bandwidth_gbps,
                                           const CostProfile& profile) {
  if (batch_per_group < 1) {
    throw ValidationError("cost: batch_per_group must be >= 1");
  }
  if (!(bandwidth_gbps > 0.0)) {
    throw ValidationError("cost: bandwidth must be > 0");
  }
  const auto [dp, sdp, tp] = strategy.DimDegrees();
  const int data_split = dp * sdp;
  if (data_split > batch_per_group) {
    return std::nullopt;
  }
  const double samples_per_device =
      static_cast<double>(batch_per_group) / static_cast<double>(data_split);

  LayerCost cost;
  cost.forward_ms = layer.fwd_time_per_sample_ms * samples_per_device;
  cost.backward_ms = cost.forward_ms * profile.backward_multiplier;

  // TP synchronizes the replicated activation boundary in forward and again
  // in backward; compute depends on the result, so neither overlaps.
  const double tp_payload =
      static_cast<double>(layer.activation_bytes_per_sample) *
      samples_per_device * profile.tp_activation_replication;
  const double tp_sync_ms = BytesToMs(
      CollectiveVolumeBytes(CollectiveKind::kAllReduce, tp, tp_payload),
      bandwidth_gbps);

  // SDP holds 1/sdp of the (tp-sharded) parameter tensor and gathers the
  // rest before each pass.
  const double sharded_tensor_bytes =
      static_cast<double>(layer.param_bytes) / static_cast<double>(tp);
  const double sdp_gather_ms =
      BytesToMs(CollectiveVolumeBytes(CollectiveKind::kAllGather, sdp,
                                      sharded_tensor_bytes),
                bandwidth_gbps);

  // Gradient synchronization is deferrable and overlaps backward compute:
  // DP all-reduces the shard each device owns, SDP re-gathers parameters
  // for backward and reduce-scatters gradients.
  const double dp_shard_bytes = static_cast<double>(layer.param_bytes) /
                                static_cast<double>(tp * sdp);
  const double grad_comm_ms =
      BytesToMs(CollectiveVolumeBytes(CollectiveKind::kAllReduce, dp,
                                      dp_shard_bytes),
                bandwidth_gbps) +
      sdp_gather_ms +
      BytesToMs(CollectiveVolumeBytes(CollectiveKind::kReduceScatter, sdp,
                                      sharded_tensor_bytes),
                bandwidth_gbps);

  double backward_segment_ms;
  if (cost.backward_ms > 0.0 && grad_comm_ms > 0.0) {
    backward_segment_ms =
        std::max(cost.backward_ms, grad_comm_ms) * profile.overlap_slowdown;
  } else {
    backward_segment_ms = cost.backward_ms + grad_comm_ms;
  }

  cost.comm_ms_unoverlapped =
      tp_sync_ms + tp_sync_ms + sdp_gather_ms + grad_comm_ms;
  cost.total_ms = cost.forward_ms + sdp_gather_ms + tp_sync_ms + tp_sync_ms +
                  backward_segment_ms;
  return cost;
}

double TransformationCostMs(const LayerSpec& layer, const HybridStrategy& prev,
                            const HybridStrategy& cur, int batch_per_group,
                            double bandwidth_gbps) {
  if (prev.group_size != cur.group_size) {
    throw ValidationError(
        "transformation: neighboring strategies must share group size");
  }
  if (prev == cur) return 0.0;
  const auto [dp_prev, sdp_prev, tp_prev] = prev.DimDegrees();
  const auto [dp_cur, sdp_cur, tp_cur] = cur.DimDegrees();
  if (dp_prev == dp_cur && sdp_prev == sdp_cur && tp_prev == tp_cur) {
    return 0.0;  // same placement, levels merely reordered
  }
  const double act_share_prev = 1.0 / static_cast<double>(dp_prev * sdp_prev);
  const double act_share_cur = 1.0 / static_cast<double>(dp_cur * sdp_cur);
  const double act_payload =
      static_cast<double>(layer.activation_bytes_per_sample) *
      static_cast<double>(batch_per_group) *
      std::abs(act_share_cur - act_share_prev);
  const double param_share_prev =
      1.0 / static_cast<double>(tp_prev * sdp_prev);
  const double param_share_cur = 1.0 / static_cast<double>(tp_cur * sdp_cur);
  const double param_payload =
      static_cast<double>(layer.param_bytes) *
      std::max(0.0, param_share_cur - param_share_prev);
  return BytesToMs(act_payload + param_payload, bandwidth_gbps);
}

}  // namespace parplan
