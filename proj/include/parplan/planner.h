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

#ifndef PARPLAN_PLANNER_H_
#define PARPLAN_PLANNER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "parplan/cluster.h"
#include "parplan/common.h"
#include "parplan/cost_model.h"
#include "parplan/model_ir.h"
#include "parplan/strategy.h"

namespace parplan {

// Load-balancing weight used when cutting the layer sequence into pipeline
// stages: layer count, parameter bytes, parameter+activation bytes at a
// reference batch of one sample, or profiled forward time.
enum class PpGuideline { kLayers, kParams, kMemory, kTime };

std::string_view PpGuidelineName(PpGuideline g);
PpGuideline PpGuidelineFromName(std::string_view name);  // throws

// Splits the model into `pp_degree` contiguous non-empty stages minimizing
// the maximum per-stage weight under the guideline; ties go to earlier
// boundaries. Returns nullopt when pp_degree > L. Ranges are [begin, end).
std::optional<std::vector<std::pair<int, int>>> PartitionPipeline(
    const ModelSpec& model, int pp_degree, PpGuideline guideline);

// Iteration time of a synchronous (GPipe-style) pipeline: every stage does
// its full-batch work, plus P-1 bubble slots each costing the bottleneck
// stage's per-micro-batch time. P == 1 is bubble-free regardless of m.
double StagePipelineCostMs(const std::vector<double>& stage_costs_ms,
                           int pp_degree, int micro_batches);

// Result of one per-stage search: minimal time, the chosen per-layer
// strategies, and the per-device memory they consume.
struct DpResult {
  bool feasible = false;
  double cost_ms = 0.0;
  std::vector<HybridStrategy> assignment;
  double peak_memory_bytes = 0.0;
};

// The state-transition table behind DpSearch, kept queryable so callers can
// audit boundary conditions and optimal substructure. State is (number of
// leading layers placed, memory units still available, strategy of the last
// placed layer); consumption rounds up to whole granularity units and the
// budget rounds down, so feasibility is never overstated.
class DpTable {
 public:
  DpTable(std::span<const LayerSpec> layers, int64_t memory_budget_bytes,
          const StrategySet& strategies, int batch_per_group,
          double bandwidth_gbps, const CostProfile& profile);

  // C(num_layers, mem_units): minimal cost of the first `num_layers` layers
  // within `mem_units` granularity units, minimized over the last layer's
  // strategy. C(0, e) = 0 and C(l >= 1, 0) = +inf whenever layers consume
  // memory; infeasible states are +inf.
  double Cost(int num_layers, int mem_units) const;
  // Same, pinned to a specific strategy for the last placed layer.
  double Cost(int num_layers, int mem_units, int strategy_index) const;

  int num_layers() const { return num_layers_; }
  int budget_units() const { return budget_units_; }
  int num_strategies() const { return num_strategies_; }

  // Minimal-cost extraction with deterministic tie-breaks (canonical
  // strategy order at every backpointer).
  DpResult Extract() const;

 private:
  size_t Index(int num_layers, int mem_units, int strategy_index) const;

  int num_layers_ = 0;
  int budget_units_ = 0;
  int num_strategies_ = 0;
  std::vector<double> cost_;       // (l, e, s) -> cumulative cost
  std::vector<int> backpointer_;   // (l, e, s) -> previous layer's strategy
  std::vector<double> layer_cost_ms_;      // (l, s)
  std::vector<int> layer_mem_units_;       // (l, s); -1 = infeasible
  std::vector<double> layer_mem_bytes_;    // (l, s)
  std::vector<HybridStrategy> strategies_;
};

// Minimizes sum_l c(l, s_l) + sum_l R(l, s_{l-1}, s_l) subject to
// sum_l O(l, s_l) <= memory budget, over per-layer strategies drawn from
// `strategies`. Infeasibility is a value (DpResult.feasible == false), not
// an error; an empty stage is vacuously feasible at zero cost.
DpResult DpSearch(std::span<const LayerSpec> layers,
                  int64_t memory_budget_bytes, const StrategySet& strategies,
                  int batch_per_group, double bandwidth_gbps,
                  const CostProfile& profile);

// One pipeline stage of a finished plan.
struct StageAssignment {
  int begin_layer = 0;
  int end_layer = 0;  // exclusive
  std::vector<HybridStrategy> strategies;
  double stage_cost_ms = 0.0;
  double peak_memory_bytes = 0.0;
};

struct ParallelPlan {
  int pp_degree = 1;
  int micro_batches = 1;
  int batch_size = 1;
  std::vector<StageAssignment> stages;
  double iteration_time_ms = 0.0;
  double throughput_samples_per_sec = 0.0;
};

struct PlanOutcome {
  std::optional<ParallelPlan> plan;
  std::string diagnostic;  // set when no plan exists: what bound first

  bool feasible() const { return plan.has_value(); }
};

// Combines per-stage search results into a plan: picks the micro-batch
// count among divisors of the batch minimizing the schedule cost (ties to
// the smallest count) and fills in iteration time and throughput. Shared by
// the planner and the brute-force oracle so the two assemble plans
// identically.
ParallelPlan AssemblePlan(int batch_size, int pp_degree,
                          const std::vector<std::pair<int, int>>& ranges,
                          const std::vector<DpResult>& stage_results);

struct PlannerOptions {
  PpGuideline guideline = PpGuideline::kLayers;
  bool prune = true;
  int num_threads = 1;  // per-pp-degree searches may run concurrently
};

// Default global-batch candidates: multiples of 8, capped so the search
// always terminates even for models whose memory never grows with batch.
std::vector<int> DefaultBatchCandidates();

// Full search: for each candidate batch size and each power-of-two pipeline
// degree, partition the model, enumerate the (pruned) strategy set for the
// per-stage device group, run the per-stage dynamic program, pick the
// micro-batch count among divisors of the batch, and keep the plan with the
// highest throughput (ties to smaller batch, then smaller pipeline degree).
// Stops growing the batch once every pipeline degree is out of memory.
PlanOutcome Optimize(const ModelSpec& model, const ClusterSpec& cluster,
                     const CostProfile& profile,
                     const std::vector<int>& batch_candidates,
                     const PlannerOptions& options = {});

nlohmann::json PlanToJson(const ParallelPlan& plan, const ModelSpec& model,
                          const CostProfile& profile);

}  // namespace parplan

#endif  // PARPLAN_PLANNER_H_
