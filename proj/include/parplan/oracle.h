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

#ifndef PARPLAN_ORACLE_H_
#define PARPLAN_ORACLE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "parplan/cluster.h"
#include "parplan/cost_model.h"
#include "parplan/model_ir.h"
#include "parplan/planner.h"
#include "parplan/strategy.h"

namespace parplan {

// Brute-force references for the planner. They evaluate every candidate
// through the same cost-model calls and the same tie-break rules, so any
// disagreement with DpSearch/Optimize isolates a search bug rather than a
// model bug. Guarded: instances beyond the stated enumeration limits throw
// GuardError.

inline constexpr int64_t kOracleEnumerationLimit = 1'000'000;

// Evaluates all |S|^L per-layer assignments. Guard: |S|^L <= 10^6.
DpResult ExhaustiveDp(std::span<const LayerSpec> layers,
                      int64_t memory_budget_bytes,
                      const StrategySet& strategies, int batch_per_group,
                      double bandwidth_gbps, const CostProfile& profile);

// Optimize with every per-stage search done exhaustively. Guard: the total
// number of enumerated assignments across all (batch, pp-degree, stage)
// combinations must stay within 10^6.
PlanOutcome ExhaustivePlan(const ModelSpec& model, const ClusterSpec& cluster,
                           const CostProfile& profile,
                           const std::vector<int>& batch_candidates,
                           const PlannerOptions& options = {});

}  // namespace parplan

#endif  // PARPLAN_ORACLE_H_
