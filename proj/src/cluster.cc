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

#include "parplan/cluster.h"

#include <fstream>

#include <nlohmann/json.hpp>

namespace parplan {

using nlohmann::json;

void ValidateCluster(const ClusterSpec& cluster) {
  if (!IsPowerOfTwo(cluster.num_devices)) {
    throw ValidationError("cluster: num_devices must be a power of two");
  }
  if (!IsPowerOfTwo(cluster.island_size)) {
    throw ValidationError("cluster: island_size must be a power of two");
  }
  if (cluster.num_devices % cluster.island_size != 0) {
    throw ValidationError("cluster: island_size must divide num_devices");
  }
  if (!(cluster.inter_island_bw_gbps > 0.0)) {
    throw ValidationError("cluster: inter_island_bw_gbps must be > 0");
  }
  if (cluster.intra_island_bw_gbps < cluster.inter_island_bw_gbps) {
    throw ValidationError(
        "cluster: intra_island_bw_gbps must be >= inter_island_bw_gbps");
  }
  if (cluster.memory_budget_bytes <= 0) {
    throw ValidationError("cluster: memory_budget_bytes must be > 0");
  }
}

ClusterSpec ClusterFromJson(const json& j) {
  ClusterSpec cluster;
  try {
    cluster.num_devices = j.at("num_devices").get<int>();
    cluster.memory_budget_bytes = j.at("memory_budget_bytes").get<int64_t>();
    cluster.island_size = j.at("island_size").get<int>();
    cluster.intra_island_bw_gbps = j.at("intra_island_bw_gbps").get<double>();
    cluster.inter_island_bw_gbps = j.at("inter_island_bw_gbps").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cluster: malformed description: ") +
                          e.what());
  }
  ValidateCluster(cluster);
  return cluster;
}

json ClusterToJson(const ClusterSpec& cluster) {
  return json{
      {"num_devices", cluster.num_devices},
      {"memory_budget_bytes", cluster.memory_budget_bytes},
      {"island_size", cluster.island_size},
      {"intra_island_bw_gbps", cluster.intra_island_bw_gbps},
      {"inter_island_bw_gbps", cluster.inter_island_bw_gbps},
  };
}

ClusterSpec LoadCluster(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cluster: cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("cluster: parse error in " + path + ": " + e.what());
  }
  return ClusterFromJson(j);
}

double GroupBandwidthGbps(const ClusterSpec& cluster, int group_size) {
  if (!IsPowerOfTwo(group_size)) {
    throw ValidationError("group_bandwidth: group_size must be a power of two");
  }
  if (group_size > cluster.num_devices) {
    throw ValidationError(
        "group_bandwidth: group_size exceeds the device count");
  }
  return group_size <= cluster.island_size ? cluster.intra_island_bw_gbps
                                           : cluster.inter_island_bw_gbps;
}

}  // namespace parplan
