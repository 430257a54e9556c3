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

#ifndef PARPLAN_COST_MODEL_H_
#define PARPLAN_COST_MODEL_H_

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "parplan/common.h"
#include "parplan/model_ir.h"
#include "parplan/strategy.h"

namespace parplan {

// Knobs of the analytical cost model.
//
//   backward_multiplier       backward compute as a multiple of forward
//                             (dense matmul workloads: ~2x).
//   overlap_slowdown          contention penalty applied to the overlapped
//                             backward-compute / gradient-communication
//                             segment; 1.0 recovers the classic max() model.
//   optimizer_state_multiplier  optimizer bytes per parameter byte
//                             (Adam moments: 2x).
//   tp_activation_replication fraction of a layer's activations that tensor
//                             parallelism replicates instead of splitting;
//                             also sizes the activation payload TP must
//                             all-reduce at layer boundaries.
//   memory_granularity_bytes  discretization unit of the planner's memory
//                             axis; consumption is rounded up, budgets down.
struct CostProfile {
  double backward_multiplier = 2.0;
  double overlap_slowdown = 1.3;
  double optimizer_state_multiplier = 2.0;
  double tp_activation_replication = 0.25;
  int64_t memory_granularity_bytes = 64 * kMiB;

  friend bool operator==(const CostProfile&, const CostProfile&) = default;
};

void ValidateProfile(const CostProfile& profile);
CostProfile ProfileFromJson(const nlohmann::json& j);  // defaults absent keys
nlohmann::json ProfileToJson(const CostProfile& profile);
CostProfile LoadProfile(const std::string& path);

// Memory-axis discretization shared by the planner and the brute-force
// oracles: consumption always rounds up to whole granularity units.
int MemoryUnits(double bytes, int64_t granularity_bytes);

enum class CollectiveKind { kAllReduce, kAllGather, kReduceScatter };

// Bytes each device moves over the wire in a ring collective of `degree`
// participants on a `payload_bytes` tensor: 2(d-1)/d for all-reduce,
// (d-1)/d for all-gather and reduce-scatter, 0 for a lone device. These
// factors make one all-reduce exactly an all-gather plus a reduce-scatter,
// so the sharded-data-parallel gradient path (two all-gathers plus one
// reduce-scatter) costs exactly 1.5x the plain data-parallel all-reduce.
double CollectiveVolumeBytes(CollectiveKind kind, int degree,
                             double payload_bytes);

// Per-device memory for one layer under one strategy.
struct MemoryBreakdown {
  double params_bytes = 0.0;
  double grads_bytes = 0.0;
  double optimizer_bytes = 0.0;
  double activation_bytes = 0.0;

  double total_bytes() const {
    return params_bytes + grads_bytes + optimizer_bytes + activation_bytes;
  }
};

// Per-device time for one layer under one strategy.
//
// comm_ms_unoverlapped is the communication time as if nothing overlapped
// with compute (the raw serial sum); total_ms is the simulated time with
// gradient communication overlapping backward compute.
struct LayerCost {
  double forward_ms = 0.0;
  double backward_ms = 0.0;
  double comm_ms_unoverlapped = 0.0;
  double total_ms = 0.0;
};

// Memory model, with (dp, sdp, tp) the strategy's dimension degrees:
//   params               param_bytes / (tp * sdp)
//   grads                same as params
//   optimizer            params * optimizer_state_multiplier
//   activations          act_bytes/sample * batch/(dp*sdp)
//                          * ((1 - rho)/tp + rho)
// Returns nullopt when dp*sdp > batch_per_group (fewer samples than data
// replicas; nothing to split).
std::optional<MemoryBreakdown> EstimateMemory(const LayerSpec& layer,
                                              const HybridStrategy& strategy,
                                              int batch_per_group,
                                              const CostProfile& profile);

// Simulates one layer's forward+backward:
//   - forward/backward compute scale with the per-device sample count
//     batch/(dp*sdp);
//   - TP all-reduces the replicated activation boundary in forward and
//     again in backward, serially (compute depends on the result);
//   - SDP all-gathers parameters serially before forward;
//   - gradient synchronization (DP all-reduce of each device's shard, SDP
//     all-gather + reduce-scatter) overlaps backward compute: the segment
//     costs max(compute, comm) * overlap_slowdown when both sides are
//     nonzero, else their plain sum.
// Returns nullopt for an infeasible batch split.
std::optional<LayerCost> EstimateLayerCost(const LayerSpec& layer,
                                           const HybridStrategy& strategy,
                                           int batch_per_group,
                                           double bandwidth_gbps,
                                           const CostProfile& profile);

// Relayout cost charged when a layer's strategy differs from its
// predecessor's. Zero whenever the dimension degrees match (level order is
// a bookkeeping difference, the placement is already right). Otherwise the
// moved payload is the activation share each device must acquire plus the
// parameter bytes it must re-replicate when the new layout holds parameters
// wider than the old one:
//   act_bytes*batch * |1/(dp*sdp)_cur - 1/(dp*sdp)_prev|
//   + param_bytes * max(0, 1/(tp*sdp)_cur - 1/(tp*sdp)_prev)
// all-gathered at `bandwidth_gbps`. `layer` is the layer being entered.
// Throws ValidationError if the strategies disagree on group size.
double TransformationCostMs(const LayerSpec& layer, const HybridStrategy& prev,
                            const HybridStrategy& cur, int batch_per_group,
                            double bandwidth_gbps);

}  // namespace parplan

#endif  // PARPLAN_COST_MODEL_H_
