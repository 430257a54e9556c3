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

#include "parplan/oracle.h"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace parplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Assignment count |S|^L, saturating at the guard limit + 1.
int64_t AssignmentCount(int num_strategies, int num_layers) {
  int64_t count = 1;
  for (int l = 0; l < num_layers; ++l) {
    count *= num_strategies;
    if (count > kOracleEnumerationLimit) return kOracleEnumerationLimit + 1;
  }
  return count;
}

}  // namespace

DpResult ExhaustiveDp(std::span<const LayerSpec> layers,
                      int64_t memory_budget_bytes,
                      const StrategySet& strategies, int batch_per_group,
                      double bandwidth_gbps, const CostProfile& profile) {
  if (memory_budget_bytes <= 0) {
    throw ValidationError("oracle: memory budget must be > 0");
  }
  const int L = static_cast<int>(layers.size());
  const int S = strategies.size();
  if (S == 0) {
    throw ValidationError("oracle: strategy set must be non-empty");
  }
  if (AssignmentCount(S, L) > kOracleEnumerationLimit) {
    throw GuardError("oracle: |S|^L exceeds the enumeration limit");
  }
  DpResult result;
  if (L == 0) {
    result.feasible = true;
    return result;
  }

  const int budget_units =
      static_cast<int>(memory_budget_bytes / profile.memory_granularity_bytes);

  // Per-(layer, strategy) building blocks, through the same cost-model calls
  // the dynamic program makes.
  std::vector<double> cost(static_cast<size_t>(L) * S, kInf);
  std::vector<int> mem_units(static_cast<size_t>(L) * S, -1);
  std::vector<double> mem_bytes(static_cast<size_t>(L) * S, 0.0);
  for (int l = 0; l < L; ++l) {
    for (int s = 0; s < S; ++s) {
      const auto mem = EstimateMemory(layers[l], strategies.strategies[s],
                                      batch_per_group, profile);
      const auto layer_cost =
          EstimateLayerCost(layers[l], strategies.strategies[s],
                            batch_per_group, bandwidth_gbps, profile);
      if (!mem || !layer_cost) continue;
      cost[l * S + s] = layer_cost->total_ms;
      mem_units[l * S + s] =
          MemoryUnits(mem->total_bytes(), profile.memory_granularity_bytes);
      mem_bytes[l * S + s] = mem->total_bytes();
    }
  }
  std::vector<double> transform(static_cast<size_t>(L) * S * S, 0.0);
  for (int l = 1; l < L; ++l) {
    for (int sp = 0; sp < S; ++sp) {
      for (int sc = 0; sc < S; ++sc) {
        transform[(static_cast<size_t>(l) * S + sp) * S + sc] =
            TransformationCostMs(layers[l], strategies.strategies[sp],
                                 strategies.strategies[sc], batch_per_group,
                                 bandwidth_gbps);
      }
    }
  }

  // Per-strategy minima over all assignments of the first `prefix_len`
  // layers that fit within `budget` units, with the same left-to-right
  // accumulation order the dynamic program uses:
  // ((c_0 + R_1) + c_1) + R_2 ...
  auto prefix_minima = [&](int prefix_len, int budget) {
    std::vector<double> minima(S, kInf);
    if (budget < 0) return minima;
    std::vector<int> assignment(prefix_len, 0);
    while (true) {
      bool valid = true;
      int total_units = 0;
      for (int l = 0; l < prefix_len; ++l) {
        const int units = mem_units[l * S + assignment[l]];
        if (units < 0) {
          valid = false;
          break;
        }
        total_units += units;
      }
      if (valid && total_units <= budget) {
        double total = cost[0 * S + assignment[0]];
        for (int l = 1; l < prefix_len; ++l) {
          total = total + transform[(static_cast<size_t>(l) * S +
                                     assignment[l - 1]) *
                                        S +
                                    assignment[l]];
          total = total + cost[l * S + assignment[l]];
        }
        const int last = assignment[prefix_len - 1];
        minima[last] = std::min(minima[last], total);
      }
      int pos = 0;
      while (pos < prefix_len && ++assignment[pos] == S) {
        assignment[pos] = 0;
        ++pos;
      }
      if (pos == prefix_len) break;
    }
    return minima;
  };

  // The dynamic program resolves cost ties by canonical strategy order at
  // each backpointer: the last layer minimizes the full cost, every earlier
  // layer minimizes its prefix minimum plus the transformation into the
  // already-chosen successor. Exact-arithmetic ties can round differently
  // along different routes, so the oracle applies the identical rule to the
  // enumerated prefix minima instead of comparing whole assignments.
  std::vector<int> chosen(L, -1);
  {
    const std::vector<double> minima = prefix_minima(L, budget_units);
    double best = kInf;
    for (int s = 0; s < S; ++s) {
      if (minima[s] < best) {
        best = minima[s];
        chosen[L - 1] = s;
      }
    }
    if (chosen[L - 1] < 0) {
      return result;  // infeasible
    }
    result.cost_ms = best;
  }
  int available = budget_units - mem_units[(L - 1) * S + chosen[L - 1]];
  for (int l = L - 1; l >= 1; --l) {
    const std::vector<double> minima = prefix_minima(l, available);
    double best = kInf;
    for (int s = 0; s < S; ++s) {
      if (minima[s] == kInf) continue;
      const double candidate =
          minima[s] +
          transform[(static_cast<size_t>(l) * S + s) * S + chosen[l]];
      if (candidate < best) {
        best = candidate;
        chosen[l - 1] = s;
      }
    }
    if (chosen[l - 1] < 0) {
      throw std::logic_error("oracle: extraction lost feasibility");
    }
    available -= mem_units[(l - 1) * S + chosen[l - 1]];
  }

  result.feasible = true;
  result.assignment.reserve(L);
  for (int l = 0; l < L; ++l) {
    result.assignment.push_back(strategies.strategies[chosen[l]]);
    result.peak_memory_bytes += mem_bytes[l * S + chosen[l]];
  }
  return result;
}

PlanOutcome ExhaustivePlan(const ModelSpec& model, const ClusterSpec& cluster,
                           const CostProfile& profile,
                           const std::vector<int>& batch_candidates,
                           const PlannerOptions& options) {
  if (batch_candidates.empty()) {
    throw ValidationError("oracle: batch_candidates must be non-empty");
  }
  for (size_t i = 0; i < batch_candidates.size(); ++i) {
    if (batch_candidates[i] < 1 ||
        (i > 0 && batch_candidates[i] <= batch_candidates[i - 1])) {
      throw ValidationError(
          "oracle: batch_candidates must be ascending positive");
    }
  }

  std::vector<int> pp_degrees;
  for (int p = 1; p <= cluster.num_devices; p *= 2) pp_degrees.push_back(p);

  // Hard guard on the total enumeration size, counted before searching.
  int64_t total_count = 0;
  for (int pp : pp_degrees) {
    const auto ranges = PartitionPipeline(model, pp, options.guideline);
    if (!ranges) continue;
    const StrategySet strategies =
        EnumerateStrategies(cluster.num_devices / pp, options.prune);
    for (const auto& [begin, end] : *ranges) {
      total_count += AssignmentCount(strategies.size(), end - begin);
    }
  }
  total_count *= static_cast<int64_t>(batch_candidates.size());
  if (total_count > kOracleEnumerationLimit) {
    throw GuardError("oracle: total plan enumeration exceeds the limit");
  }

  PlanOutcome outcome;
  double best_throughput = -1.0;
  for (int batch : batch_candidates) {
    bool any_feasible = false;
    std::ostringstream first_batch_diag;
    for (int pp : pp_degrees) {
      const auto ranges = PartitionPipeline(model, pp, options.guideline);
      if (!ranges) {
        first_batch_diag << "\n  pp=" << pp << " batch=" << batch
                         << ": pipeline degree exceeds layer count";
        continue;
      }
      const int group_size = cluster.num_devices / pp;
      const StrategySet strategies =
          EnumerateStrategies(group_size, options.prune);
      const double bandwidth = GroupBandwidthGbps(cluster, group_size);
      std::vector<DpResult> stage_results;
      bool all_stages_ok = true;
      for (size_t i = 0; i < ranges->size(); ++i) {
        const auto [begin, end] = (*ranges)[i];
        DpResult result =
            ExhaustiveDp(std::span<const LayerSpec>(model.layers)
                             .subspan(begin, end - begin),
                         cluster.memory_budget_bytes, strategies, batch,
                         bandwidth, profile);
        if (!result.feasible) {
          first_batch_diag << "\n  pp=" << pp << " batch=" << batch
                           << ": stage " << i << " cannot fit the budget";
          all_stages_ok = false;
          break;
        }
        stage_results.push_back(std::move(result));
      }
      if (!all_stages_ok) continue;
      any_feasible = true;
      ParallelPlan plan = AssemblePlan(batch, pp, *ranges, stage_results);
      if (plan.throughput_samples_per_sec > best_throughput) {
        best_throughput = plan.throughput_samples_per_sec;
        outcome.plan = std::move(plan);
      }
    }
    if (!any_feasible) {
      if (batch == batch_candidates.front()) {
        outcome.diagnostic = "no feasible plan at the smallest batch size:" +
                             first_batch_diag.str();
        return outcome;
      }
      break;
    }
  }
  if (!outcome.plan) {
    outcome.diagnostic = "no feasible plan found";
  }
  return outcome;
}

}  // namespace parplan
