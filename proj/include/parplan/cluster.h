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

#ifndef PARPLAN_CLUSTER_H_
#define PARPLAN_CLUSTER_H_

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "parplan/common.h"

namespace parplan {

// A homogeneous two-level device hierarchy: `island_size` devices share
// high-bandwidth links (e.g. one server), islands are joined by slower
// links. Device count and island size must be powers of two.
struct ClusterSpec {
  int num_devices = 1;
  int64_t memory_budget_bytes = 0;
  int island_size = 1;
  double intra_island_bw_gbps = 1.0;
  double inter_island_bw_gbps = 1.0;

  friend bool operator==(const ClusterSpec&, const ClusterSpec&) = default;
};

void ValidateCluster(const ClusterSpec& cluster);

ClusterSpec ClusterFromJson(const nlohmann::json& j);
nlohmann::json ClusterToJson(const ClusterSpec& cluster);
ClusterSpec LoadCluster(const std::string& path);

// Effective bandwidth for a collective over `group_size` devices. A group
// that fits inside one island sees the intra-island bandwidth; a group that
// spans islands is bounded by the slowest link, so it sees the inter-island
// bandwidth for the whole operation. group_size must be a power of two
// <= num_devices.
double GroupBandwidthGbps(const ClusterSpec& cluster, int group_size);

}  // namespace parplan

#endif  // PARPLAN_CLUSTER_H_
