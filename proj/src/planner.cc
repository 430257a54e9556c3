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

#include "parplan/planner.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace parplan {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> Divisors(int n) {
  std::vector<int> divisors;
  for (int d = 1; d <= n; ++d) {
    if (n % d == 0) divisors.push_back(d);
  }
  return divisors;
}

}  // namespace

std::string_view PpGuidelineName(PpGuideline g) {
  switch (g) {
    case PpGuideline::kLayers:
      return "layers";
    case PpGuideline::kParams:
      return "params";
    case PpGuideline::kMemory:
      return "memory";
    case PpGuideline::kTime:
      return "time";
  }
  return "?";
}

PpGuideline PpGuidelineFromName(std::string_view name) {
  if (name == "layers") return PpGuideline::kLayers;
  if (name == "params") return PpGuideline::kParams;
  if (name == "memory") return PpGuideline::kMemory;
  if (name == "time") return PpGuideline::kTime;
  throw ValidationError("unknown pp guideline '" + std::string(name) + "'");
}

std::optional<std::vector<std::pair<int, int>>> PartitionPipeline(
    const ModelSpec& model, int pp_degree, PpGuideline guideline) {
  if (!IsPowerOfTwo(pp_degree)) {
    throw ValidationError("partition: pp_degree must be a power of two");
  }
  const int num_layers = model.num_layers();
  if (pp_degree > num_layers) {
    return std::nullopt;
  }

  std::vector<double> weight(num_layers);
  for (int i = 0; i < num_layers; ++i) {
    const LayerSpec& layer = model.layers[i];
    switch (guideline) {
      case PpGuideline::kLayers:
        weight[i] = 1.0;
        break;
      case PpGuideline::kParams:
        weight[i] = static_cast<double>(layer.param_bytes);
        break;
      case PpGuideline::kMemory:
        // Reference batch of one sample.
        weight[i] = static_cast<double>(layer.param_bytes) +
                    static_cast<double>(layer.activation_bytes_per_sample);
        break;
      case PpGuideline::kTime:
        weight[i] = layer.fwd_time_per_sample_ms;
        break;
    }
  }
  std::vector<double> prefix(num_layers + 1, 0.0);
  for (int i = 0; i < num_layers; ++i) prefix[i + 1] = prefix[i] + weight[i];
  auto range_weight = [&](int begin, int end) {
    return prefix[end] - prefix[begin];
  };

  // best[i][k]: minimal max-stage-weight for layers [i, L) cut into k
  // non-empty stages.
  std::vector<std::vector<double>> best(
      num_layers + 1, std::vector<double>(pp_degree + 1, kInf));
  best[num_layers][0] = 0.0;
  for (int k = 1; k <= pp_degree; ++k) {
    for (int i = num_layers - 1; i >= 0; --i) {
      // Leave at least one layer per remaining stage.
      for (int j = i + 1; j + (k - 1) <= num_layers; ++j) {
        if (best[j][k - 1] == kInf) continue;
        const double candidate =
            std::max(range_weight(i, j), best[j][k - 1]);
        best[i][k] = std::min(best[i][k], candidate);
      }
    }
  }
  const double target = best[0][pp_degree];
  if (target == kInf) return std::nullopt;

  // Reconstruct: among partitions achieving the optimum, take the
  // lexicographically earliest boundaries, i.e. at every cut the smallest
  // end that keeps both the stage and the remaining suffix within target.
  std::vector<std::pair<int, int>> ranges;
  int i = 0;
  for (int k = pp_degree; k >= 1; --k) {
    for (int j = i + 1; j + (k - 1) <= num_layers; ++j) {
      if (range_weight(i, j) <= target && best[j][k - 1] <= target) {
        ranges.emplace_back(i, j);
        i = j;
        break;
      }
    }
  }
  return ranges;
}

double StagePipelineCostMs(const std::vector<double>& stage_costs_ms,
                           int pp_degree, int micro_batches) {
  if (micro_batches < 1) {
    throw ValidationError("pipeline cost: micro_batches must be >= 1");
  }
  if (static_cast<int>(stage_costs_ms.size()) != pp_degree) {
    throw ValidationError(
        "pipeline cost: need exactly one cost per pipeline stage");
  }
  double total = 0.0;
  double max_stage = 0.0;
  for (double cost : stage_costs_ms) {
    if (!(cost >= 0.0)) {
      throw ValidationError("pipeline cost: stage costs must be >= 0");
    }
    total += cost;
    max_stage = std::max(max_stage, cost);
  }
  if (pp_degree == 1) return total;
  return total + static_cast<double>(pp_degree - 1) * max_stage /
                     static_cast<double>(micro_batches);
}

DpTable::DpTable(std::span<const LayerSpec> layers,
                 int64_t memory_budget_bytes, const StrategySet& strategies,
                 int batch_per_group, double bandwidth_gbps,
                 const CostProfile& profile)
    : num_layers_(static_cast<int>(layers.size())),
      num_strategies_(strategies.size()),
      strategies_(strategies.strategies) {
  if (memory_budget_bytes <= 0) {
    throw ValidationError("dp: memory budget must be > 0");
  }
  if (num_strategies_ == 0) {
    throw ValidationError("dp: strategy set must be non-empty");
  }
  budget_units_ =
      static_cast<int>(memory_budget_bytes / profile.memory_granularity_bytes);

  const int L = num_layers_;
  const int U = budget_units_;
  const int S = num_strategies_;

  layer_cost_ms_.assign(static_cast<size_t>(L) * S, kInf);
  layer_mem_units_.assign(static_cast<size_t>(L) * S, -1);
  layer_mem_bytes_.assign(static_cast<size_t>(L) * S, 0.0);
  for (int l = 0; l < L; ++l) {
    for (int s = 0; s < S; ++s) {
      const auto mem =
          EstimateMemory(layers[l], strategies_[s], batch_per_group, profile);
      const auto cost = EstimateLayerCost(layers[l], strategies_[s],
                                          batch_per_group, bandwidth_gbps,
                                          profile);
      if (!mem || !cost) continue;
      layer_cost_ms_[l * S + s] = cost->total_ms;
      layer_mem_units_[l * S + s] =
          MemoryUnits(mem->total_bytes(), profile.memory_granularity_bytes);
      layer_mem_bytes_[l * S + s] = mem->total_bytes();
    }
  }

  // Transformation costs between consecutive layers, R[l][prev][cur] for the
  // edge entering layer l.
  std::vector<double> transform(static_cast<size_t>(L) * S * S, 0.0);
  for (int l = 1; l < L; ++l) {
    for (int sp = 0; sp < S; ++sp) {
      for (int sc = 0; sc < S; ++sc) {
        transform[(static_cast<size_t>(l) * S + sp) * S + sc] =
            TransformationCostMs(layers[l], strategies_[sp], strategies_[sc],
                                 batch_per_group, bandwidth_gbps);
      }
    }
  }

  cost_.assign(static_cast<size_t>(L + 1) * (U + 1) * S, kInf);
  backpointer_.assign(static_cast<size_t>(L + 1) * (U + 1) * S, -1);
  for (int e = 0; e <= U; ++e) {
    for (int s = 0; s < S; ++s) {
      cost_[Index(0, e, s)] = 0.0;
    }
  }
  for (int l = 1; l <= L; ++l) {
    for (int s = 0; s < S; ++s) {
      const int units = layer_mem_units_[(l - 1) * S + s];
      if (units < 0) continue;
      const double own_cost = layer_cost_ms_[(l - 1) * S + s];
      for (int e = units; e <= U; ++e) {
        if (l == 1) {
          cost_[Index(1, e, s)] = own_cost;
          continue;
        }
        double best_prev = kInf;
        int best_prev_s = -1;
        for (int sp = 0; sp < S; ++sp) {
          const double prev_cost = cost_[Index(l - 1, e - units, sp)];
          if (prev_cost == kInf) continue;
          const double candidate =
              prev_cost +
              transform[(static_cast<size_t>(l - 1) * S + sp) * S + s];
          if (candidate < best_prev) {
            best_prev = candidate;
            best_prev_s = sp;
          }
        }
        if (best_prev_s < 0) continue;
        cost_[Index(l, e, s)] = best_prev + own_cost;
        backpointer_[Index(l, e, s)] = best_prev_s;
      }
    }
  }
}

size_t DpTable::Index(int num_layers, int mem_units,
                      int strategy_index) const {
  return (static_cast<size_t>(num_layers) * (budget_units_ + 1) + mem_units) *
             num_strategies_ +
         strategy_index;
}

double DpTable::Cost(int num_layers, int mem_units, int strategy_index) const {
  return cost_[Index(num_layers, mem_units, strategy_index)];
}

double DpTable::Cost(int num_layers, int mem_units) const {
  double best = kInf;
  for (int s = 0; s < num_strategies_; ++s) {
    best = std::min(best, cost_[Index(num_layers, mem_units, s)]);
  }
  return best;
}

DpResult DpTable::Extract() const {
  DpResult result;
  if (num_layers_ == 0) {
    result.feasible = true;
    return result;
  }
  int best_s = -1;
  double best_cost = kInf;
  for (int s = 0; s < num_strategies_; ++s) {
    const double cost = Cost(num_layers_, budget_units_, s);
    if (cost < best_cost) {
      best_cost = cost;
      best_s = s;
    }
  }
  if (best_s < 0) {
    return result;  // infeasible
  }
  result.feasible = true;
  result.cost_ms = best_cost;
  std::vector<int> chosen(num_layers_);
  int e = budget_units_;
  int s = best_s;
  for (int l = num_layers_; l >= 1; --l) {
    chosen[l - 1] = s;
    const int prev = backpointer_[Index(l, e, s)];
    e -= layer_mem_units_[(l - 1) * num_strategies_ + s];
    s = prev;
  }
  result.assignment.reserve(num_layers_);
  for (int l = 0; l < num_layers_; ++l) {
    result.assignment.push_back(strategies_[chosen[l]]);
    result.peak_memory_bytes +=
        layer_mem_bytes_[l * num_strategies_ + chosen[l]];
  }
  return result;
}

DpResult DpSearch(std::span<const LayerSpec> layers,
                  int64_t memory_budget_bytes, const StrategySet& strategies,
                  int batch_per_group, double bandwidth_gbps,
                  const CostProfile& profile) {
  if (layers.empty()) {
    DpResult result;
    result.feasible = true;
    return result;
  }
  DpTable table(layers, memory_budget_bytes, strategies, batch_per_group,
                bandwidth_gbps, profile);
  return table.Extract();
}

ParallelPlan AssemblePlan(int batch_size, int pp_degree,
                          const std::vector<std::pair<int, int>>& ranges,
                          const std::vector<DpResult>& stage_results) {
  ParallelPlan plan;
  plan.batch_size = batch_size;
  plan.pp_degree = pp_degree;

  std::vector<double> stage_costs;
  stage_costs.reserve(stage_results.size());
  for (size_t i = 0; i < stage_results.size(); ++i) {
    StageAssignment stage;
    stage.begin_layer = ranges[i].first;
    stage.end_layer = ranges[i].second;
    stage.strategies = stage_results[i].assignment;
    stage.stage_cost_ms = stage_results[i].cost_ms;
    stage.peak_memory_bytes = stage_results[i].peak_memory_bytes;
    stage_costs.push_back(stage.stage_cost_ms);
    plan.stages.push_back(std::move(stage));
  }

  plan.micro_batches = 1;
  plan.iteration_time_ms = StagePipelineCostMs(stage_costs, pp_degree, 1);
  for (int m : Divisors(batch_size)) {
    const double cost = StagePipelineCostMs(stage_costs, pp_degree, m);
    if (cost < plan.iteration_time_ms) {
      plan.iteration_time_ms = cost;
      plan.micro_batches = m;
    }
  }
  plan.throughput_samples_per_sec =
      static_cast<double>(plan.batch_size) / (plan.iteration_time_ms / 1000.0);
  return plan;
}

namespace {

struct PerDegreeOutcome {
  bool feasible = false;
  ParallelPlan plan;
  std::string reason;
};

PerDegreeOutcome EvaluateDegree(const ModelSpec& model,
                                const ClusterSpec& cluster,
                                const CostProfile& profile, int batch_size,
                                int pp_degree, const PlannerOptions& options) {
  PerDegreeOutcome outcome;
  std::ostringstream tag;
  tag << "pp=" << pp_degree << " batch=" << batch_size;

  const auto ranges = PartitionPipeline(model, pp_degree, options.guideline);
  if (!ranges) {
    outcome.reason = tag.str() + ": pipeline degree exceeds layer count";
    return outcome;
  }
  const int group_size = cluster.num_devices / pp_degree;
  const StrategySet strategies =
      EnumerateStrategies(group_size, options.prune);
  const double bandwidth = GroupBandwidthGbps(cluster, group_size);

  std::vector<DpResult> stage_results;
  for (size_t i = 0; i < ranges->size(); ++i) {
    const auto [begin, end] = (*ranges)[i];
    DpResult result = DpSearch(
        std::span<const LayerSpec>(model.layers).subspan(begin, end - begin),
        cluster.memory_budget_bytes, strategies, batch_size, bandwidth,
        profile);
    if (!result.feasible) {
      std::ostringstream reason;
      reason << tag.str() << ": stage " << i << " (layers [" << begin << ","
             << end << ")) cannot fit the memory budget under any strategy";
      outcome.reason = reason.str();
      return outcome;
    }
    stage_results.push_back(std::move(result));
  }
  outcome.feasible = true;
  outcome.plan = AssemblePlan(batch_size, pp_degree, *ranges, stage_results);
  return outcome;
}

}  // namespace

std::vector<int> DefaultBatchCandidates() {
  std::vector<int> candidates;
  for (int b = 8; b <= 512; b += 8) candidates.push_back(b);
  return candidates;
}

PlanOutcome Optimize(const ModelSpec& model, const ClusterSpec& cluster,
                     const CostProfile& profile,
                     const std::vector<int>& batch_candidates,
                     const PlannerOptions& options) {
  if (batch_candidates.empty()) {
    throw ValidationError("optimize: batch_candidates must be non-empty");
  }
  for (size_t i = 0; i < batch_candidates.size(); ++i) {
    if (batch_candidates[i] < 1 ||
        (i > 0 && batch_candidates[i] <= batch_candidates[i - 1])) {
      throw ValidationError(
          "optimize: batch_candidates must be ascending positive");
    }
  }

  std::vector<int> pp_degrees;
  for (int p = 1; p <= cluster.num_devices; p *= 2) pp_degrees.push_back(p);
  const int num_threads =
      std::max(1, std::min(options.num_threads,
                           static_cast<int>(pp_degrees.size())));

  PlanOutcome outcome;
  double best_throughput = -1.0;

  for (int batch : batch_candidates) {
    std::vector<PerDegreeOutcome> per_degree(pp_degrees.size());
    if (num_threads <= 1) {
      for (size_t i = 0; i < pp_degrees.size(); ++i) {
        per_degree[i] = EvaluateDegree(model, cluster, profile, batch,
                                       pp_degrees[i], options);
      }
    } else {
      std::atomic<size_t> next{0};
      auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < pp_degrees.size();
             i = next.fetch_add(1)) {
          per_degree[i] = EvaluateDegree(model, cluster, profile, batch,
                                         pp_degrees[i], options);
        }
      };
      std::vector<std::thread> threads;
      for (int t = 0; t < num_threads; ++t) threads.emplace_back(worker);
      for (std::thread& t : threads) t.join();
    }

    bool any_feasible = false;
    for (const PerDegreeOutcome& candidate : per_degree) {
      if (!candidate.feasible) continue;
      any_feasible = true;
      if (candidate.plan.throughput_samples_per_sec > best_throughput) {
        best_throughput = candidate.plan.throughput_samples_per_sec;
        outcome.plan = candidate.plan;
      }
    }
    if (!any_feasible) {
      if (batch == batch_candidates.front()) {
        std::ostringstream diag;
        diag << "no feasible plan at the smallest batch size:";
        for (const PerDegreeOutcome& candidate : per_degree) {
          diag << "\n  " << candidate.reason;
        }
        outcome.diagnostic = diag.str();
        return outcome;
      }
      break;  // larger batches only consume more memory
    }
  }
  if (!outcome.plan) {
    outcome.diagnostic = "no feasible plan found";
  }
  return outcome;
}

json PlanToJson(const ParallelPlan& plan, const ModelSpec& model,
                const CostProfile& profile) {
  json stages = json::array();
  for (const StageAssignment& stage : plan.stages) {
    json layers = json::array();
    for (int l = stage.begin_layer; l < stage.end_layer; ++l) {
      const HybridStrategy& strategy =
          stage.strategies[l - stage.begin_layer];
      const auto mem =
          EstimateMemory(model.layers[l], strategy, plan.batch_size, profile);
      json jmem;
      if (mem) {
        jmem = json{{"params_bytes", mem->params_bytes},
                    {"grads_bytes", mem->grads_bytes},
                    {"optimizer_bytes", mem->optimizer_bytes},
                    {"activation_bytes", mem->activation_bytes},
                    {"total_bytes", mem->total_bytes()}};
      }
      json jl = {{"id", l}, {"strategy", strategy.ToString()},
                 {"memory", jmem}};
      if (!model.layers[l].name.empty()) jl["name"] = model.layers[l].name;
      layers.push_back(std::move(jl));
    }
    stages.push_back(json{
        {"layer_range", json::array({stage.begin_layer, stage.end_layer})},
        {"stage_cost_ms", stage.stage_cost_ms},
        {"peak_memory_bytes", stage.peak_memory_bytes},
        {"layers", std::move(layers)},
    });
  }
  return json{
      {"pp_degree", plan.pp_degree},
      {"micro_batches", plan.micro_batches},
      {"batch_size", plan.batch_size},
      {"iteration_time_ms", plan.iteration_time_ms},
      {"throughput_samples_per_s", plan.throughput_samples_per_sec},
      {"stages", std::move(stages)},
  };
}

}  // namespace parplan
