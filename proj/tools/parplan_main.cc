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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "parplan/cluster.h"
#include "parplan/cost_model.h"
#include "parplan/model_ir.h"
#include "parplan/oracle.h"
#include "parplan/planner.h"
#include "parplan/strategy.h"

namespace {

using nlohmann::json;
using namespace parplan;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitInfeasible = 2;

struct CommonArgs {
  std::string model_path;
  std::string cluster_path;
  std::string profile_path;
  std::vector<int> batches;
  std::string guideline = "layers";
  bool no_prune = false;
};

void AddPlannerFlags(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--model", args->model_path, "model description JSON")
      ->required();
  cmd->add_option("--cluster", args->cluster_path, "cluster description JSON")
      ->required();
  cmd->add_option("--profile", args->profile_path, "cost profile JSON");
  cmd->add_option("--batches", args->batches,
                  "global batch size candidates (ascending)")
      ->delimiter(',');
  cmd->add_option("--pp-guideline", args->guideline,
                  "pipeline partition guideline")
      ->check(CLI::IsMember({"layers", "params", "memory", "time"}));
  cmd->add_flag("--no-prune", args->no_prune,
                "keep strategies mixing dp and sdp");
}

PlannerOptions MakeOptions(const CommonArgs& args) {
  PlannerOptions options;
  options.guideline = PpGuidelineFromName(args.guideline);
  options.prune = !args.no_prune;
  if (const char* env = std::getenv("PLANNER_THREADS")) {
    options.num_threads = std::max(1, std::atoi(env));
  }
  return options;
}

CostProfile LoadProfileOrDefault(const std::string& path) {
  return path.empty() ? CostProfile{} : LoadProfile(path);
}

std::vector<int> BatchesOrDefault(const std::vector<int>& batches) {
  return batches.empty() ? DefaultBatchCandidates() : batches;
}

std::string FormatGiB(double bytes) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f GiB",
                bytes / static_cast<double>(kGiB));
  return buffer;
}

// Fig-style strategy ribbon: runs of consecutive layers sharing a strategy.
std::string StrategyRibbon(const StageAssignment& stage) {
  std::string ribbon;
  size_t i = 0;
  while (i < stage.strategies.size()) {
    size_t j = i;
    while (j < stage.strategies.size() &&
           stage.strategies[j] == stage.strategies[i]) {
      ++j;
    }
    if (!ribbon.empty()) ribbon += " | ";
    const std::string name = stage.strategies[i].ToString();
    ribbon += "[" + (name.empty() ? "serial" : name) + "] x" +
              std::to_string(j - i);
    i = j;
  }
  return ribbon;
}

void PrintPlanSummary(const ParallelPlan& plan) {
  std::printf("batch size       %d\n", plan.batch_size);
  std::printf("pp degree        %d  (micro-batches: %d)\n", plan.pp_degree,
              plan.micro_batches);
  std::printf("iteration time   %.3f ms\n", plan.iteration_time_ms);
  std::printf("throughput       %.3f samples/s\n",
              plan.throughput_samples_per_sec);
  for (size_t i = 0; i < plan.stages.size(); ++i) {
    const StageAssignment& stage = plan.stages[i];
    std::printf("stage %zu  layers [%d,%d)  cost %.3f ms  peak %s\n", i,
                stage.begin_layer, stage.end_layer, stage.stage_cost_ms,
                FormatGiB(stage.peak_memory_bytes).c_str());
    std::printf("  %s\n", StrategyRibbon(stage).c_str());
  }
}

void WriteJsonOutput(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw ValidationError("cannot write " + out_path);
  }
  out << j.dump(2) << "\n";
}

int RunPlan(const CommonArgs& args, const std::string& out_path,
            bool exhaustive) {
  const ModelSpec model = LoadModel(args.model_path);
  const ClusterSpec cluster = LoadCluster(args.cluster_path);
  const CostProfile profile = LoadProfileOrDefault(args.profile_path);
  const PlannerOptions options = MakeOptions(args);
  const std::vector<int> batches = BatchesOrDefault(args.batches);

  const PlanOutcome outcome =
      exhaustive ? ExhaustivePlan(model, cluster, profile, batches, options)
                 : Optimize(model, cluster, profile, batches, options);
  if (!outcome.feasible()) {
    std::cerr << "infeasible: " << outcome.diagnostic << "\n";
    return kExitInfeasible;
  }
  PrintPlanSummary(*outcome.plan);
  WriteJsonOutput(PlanToJson(*outcome.plan, model, profile), out_path);
  return kExitOk;
}

int RunEnumerate(int group_size, bool no_prune, const std::string& out_path) {
  const StrategySet set = EnumerateStrategies(group_size, !no_prune);
  WriteJsonOutput(StrategySetToJson(set), out_path);
  return kExitOk;
}

int RunEstimate(const CommonArgs& args, const std::string& strategy_text,
                int batch, const std::string& csv_path) {
  const ModelSpec model = LoadModel(args.model_path);
  const ClusterSpec cluster = LoadCluster(args.cluster_path);
  const CostProfile profile = LoadProfileOrDefault(args.profile_path);
  const HybridStrategy strategy = StrategyFromString(strategy_text);
  const double bandwidth = GroupBandwidthGbps(cluster, strategy.group_size);

  std::ostringstream csv;
  csv << "layer,forward_ms,backward_ms,comm_ms_unoverlapped,total_ms,"
         "params_bytes,grads_bytes,optimizer_bytes,activation_bytes,"
         "total_bytes\n";
  std::printf("strategy %s  batch %d  bandwidth %.1f GB/s\n",
              strategy_text.empty() ? "serial" : strategy_text.c_str(), batch,
              bandwidth);
  std::printf("%5s %12s %12s %12s %12s %14s %14s\n", "layer", "fwd(ms)",
              "bwd(ms)", "comm(ms)", "total(ms)", "memory", "activations");
  for (const LayerSpec& layer : model.layers) {
    const auto cost =
        EstimateLayerCost(layer, strategy, batch, bandwidth, profile);
    const auto mem = EstimateMemory(layer, strategy, batch, profile);
    if (!cost || !mem) {
      std::cerr << "infeasible: batch " << batch
                << " cannot be split across the data-parallel replicas\n";
      return kExitInfeasible;
    }
    std::printf("%5d %12.4f %12.4f %12.4f %12.4f %14s %14s\n", layer.id,
                cost->forward_ms, cost->backward_ms,
                cost->comm_ms_unoverlapped, cost->total_ms,
                FormatGiB(mem->total_bytes()).c_str(),
                FormatGiB(mem->activation_bytes).c_str());
    char row[512];
    std::snprintf(row, sizeof(row),
                  "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  layer.id, cost->forward_ms, cost->backward_ms,
                  cost->comm_ms_unoverlapped, cost->total_ms,
                  mem->params_bytes, mem->grads_bytes, mem->optimizer_bytes,
                  mem->activation_bytes, mem->total_bytes());
    csv << row;
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ValidationError("cannot write " + csv_path);
    out << csv.str();
  }
  return kExitOk;
}

int RunSweep(const CommonArgs& args, const std::vector<double>& budgets_gb,
             const std::string& csv_path) {
  const ModelSpec model = LoadModel(args.model_path);
  ClusterSpec cluster = LoadCluster(args.cluster_path);
  const CostProfile profile = LoadProfileOrDefault(args.profile_path);
  const PlannerOptions options = MakeOptions(args);
  const std::vector<int> batches = BatchesOrDefault(args.batches);

  std::ostringstream csv;
  csv << "budget_gb,batch_size,pp_degree,throughput_samples_per_s\n";
  for (double budget_gb : budgets_gb) {
    if (!(budget_gb > 0.0)) {
      throw ValidationError("sweep: budgets must be positive");
    }
    cluster.memory_budget_bytes =
        static_cast<int64_t>(budget_gb * static_cast<double>(kGiB));
    const PlanOutcome outcome =
        Optimize(model, cluster, profile, batches, options);
    if (outcome.feasible()) {
      char row[160];
      std::snprintf(row, sizeof(row), "%g,%d,%d,%.6f\n", budget_gb,
                    outcome.plan->batch_size, outcome.plan->pp_degree,
                    outcome.plan->throughput_samples_per_sec);
      csv << row;
    } else {
      char row[160];
      std::snprintf(row, sizeof(row), "%g,OOM,OOM,OOM\n", budget_gb);
      csv << row;
    }
  }
  std::cout << csv.str();
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw ValidationError("cannot write " + csv_path);
    out << csv.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid-parallelism planner for layered models"};
  app.require_subcommand(1);

  CommonArgs plan_args;
  std::string plan_out;
  CLI::App* plan = app.add_subcommand("plan", "search for the best plan");
  AddPlannerFlags(plan, &plan_args);
  plan->add_option("--out", plan_out, "write the plan JSON here");

  int group_size = 0;
  bool enum_no_prune = false;
  std::string enum_out;
  CLI::App* enumerate =
      app.add_subcommand("enumerate", "dump the strategy set for a group");
  enumerate->add_option("--group-size", group_size, "device group size")
      ->required();
  enumerate->add_flag("--no-prune", enum_no_prune,
                      "keep strategies mixing dp and sdp");
  enumerate->add_option("--out", enum_out, "write the JSON here");

  CommonArgs estimate_args;
  std::string strategy_text;
  int estimate_batch = 8;
  std::string estimate_csv;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "per-layer costs and memory for one strategy");
  estimate->add_option("--model", estimate_args.model_path, "model JSON")
      ->required();
  estimate->add_option("--cluster", estimate_args.cluster_path,
                       "cluster JSON")
      ->required();
  estimate->add_option("--profile", estimate_args.profile_path,
                       "cost profile JSON");
  estimate->add_option("--strategy", strategy_text,
                       "strategy string, e.g. tp:2,dp:4 (empty = serial)");
  estimate->add_option("--batch", estimate_batch, "samples per group");
  estimate->add_option("--csv", estimate_csv, "write the table as CSV here");

  CommonArgs sweep_args;
  std::vector<double> budgets_gb;
  std::string sweep_csv;
  CLI::App* sweep =
      app.add_subcommand("sweep", "plan across memory budgets, emit CSV");
  AddPlannerFlags(sweep, &sweep_args);
  sweep->add_option("--budgets", budgets_gb, "memory budgets in GiB")
      ->required()
      ->delimiter(',');
  sweep->add_option("--csv", sweep_csv, "also write the CSV here");

  CommonArgs oracle_args;
  std::string oracle_out;
  CLI::App* oracle_plan = app.add_subcommand(
      "oracle-plan", "exhaustive reference search (small instances only)");
  AddPlannerFlags(oracle_plan, &oracle_args);
  oracle_plan->add_option("--out", oracle_out, "write the plan JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (plan->parsed()) return RunPlan(plan_args, plan_out, false);
    if (enumerate->parsed()) {
      return RunEnumerate(group_size, enum_no_prune, enum_out);
    }
    if (estimate->parsed()) {
      return RunEstimate(estimate_args, strategy_text, estimate_batch,
                         estimate_csv);
    }
    if (sweep->parsed()) return RunSweep(sweep_args, budgets_gb, sweep_csv);
    if (oracle_plan->parsed()) return RunPlan(oracle_args, oracle_out, true);
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
