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

#include "parplan/strategy.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

#include <nlohmann/json.hpp>

namespace parplan {

using nlohmann::json;

std::string_view DimName(ParallelDim dim) {
  switch (dim) {
    case ParallelDim::kTensor:
      return "tp";
    case ParallelDim::kData:
      return "dp";
    case ParallelDim::kShardedData:
      return "sdp";
  }
  return "?";
}

HybridStrategy::Degrees HybridStrategy::DimDegrees() const {
  Degrees d;
  for (const StrategyLevel& level : levels) {
    switch (level.dim) {
      case ParallelDim::kTensor:
        d.tp *= level.degree;
        break;
      case ParallelDim::kData:
        d.dp *= level.degree;
        break;
      case ParallelDim::kShardedData:
        d.sdp *= level.degree;
        break;
    }
  }
  return d;
}

bool HybridStrategy::ContainsDpAndSdp() const {
  bool dp = false;
  bool sdp = false;
  for (const StrategyLevel& level : levels) {
    dp |= level.dim == ParallelDim::kData;
    sdp |= level.dim == ParallelDim::kShardedData;
  }
  return dp && sdp;
}

std::string HybridStrategy::ToString() const {
  std::ostringstream os;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i > 0) os << ',';
    os << DimName(levels[i].dim) << ':' << levels[i].degree;
  }
  return os.str();
}

HybridStrategy StrategyFromString(std::string_view text) {
  HybridStrategy strategy;
  if (text.empty()) {
    return strategy;  // serial, group size 1
  }
  size_t pos = 0;
  bool seen[3] = {false, false, false};
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string_view part = text.substr(
        pos, comma == std::string_view::npos ? std::string_view::npos
                                             : comma - pos);
    size_t colon = part.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("strategy: expected dim:degree, got '" +
                            std::string(part) + "'");
    }
    std::string_view name = part.substr(0, colon);
    std::string_view degree_text = part.substr(colon + 1);
    ParallelDim dim;
    if (name == "tp") {
      dim = ParallelDim::kTensor;
    } else if (name == "dp") {
      dim = ParallelDim::kData;
    } else if (name == "sdp") {
      dim = ParallelDim::kShardedData;
    } else {
      throw ValidationError("strategy: unknown dimension '" +
                            std::string(name) + "'");
    }
    int degree = 0;
    auto [ptr, ec] = std::from_chars(
        degree_text.data(), degree_text.data() + degree_text.size(), degree);
    if (ec != std::errc{} || ptr != degree_text.data() + degree_text.size()) {
      throw ValidationError("strategy: bad degree '" +
                            std::string(degree_text) + "'");
    }
    if (degree < 2 || !IsPowerOfTwo(degree)) {
      throw ValidationError(
          "strategy: degrees must be powers of two >= 2, got " +
          std::to_string(degree));
    }
    if (seen[static_cast<int>(dim)]) {
      throw ValidationError("strategy: dimension '" + std::string(name) +
                            "' repeats");
    }
    seen[static_cast<int>(dim)] = true;
    strategy.levels.push_back(StrategyLevel{dim, degree});
    strategy.group_size *= degree;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return strategy;
}

namespace {

bool CanonicalLess(const HybridStrategy& a, const HybridStrategy& b) {
  if (a.levels.size() != b.levels.size()) {
    return a.levels.size() < b.levels.size();
  }
  for (size_t i = 0; i < a.levels.size(); ++i) {
    int da = static_cast<int>(a.levels[i].dim);
    int db = static_cast<int>(b.levels[i].dim);
    if (da != db) return da < db;
    if (a.levels[i].degree != b.levels[i].degree) {
      return a.levels[i].degree < b.levels[i].degree;
    }
  }
  return false;
}

// All ordered splits of 2^log2_total into `parts` power-of-two factors >= 2.
void FactorSequences(int log2_total, int parts, std::vector<int>& current,
                     std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    if (log2_total >= 1) {
      current.push_back(1 << log2_total);
      out.push_back(current);
      current.pop_back();
    }
    return;
  }
  for (int e = 1; e + (parts - 1) <= log2_total; ++e) {
    current.push_back(1 << e);
    FactorSequences(log2_total - e, parts - 1, current, out);
    current.pop_back();
  }
}

}  // namespace

StrategySet EnumerateStrategies(int group_size, bool prune) {
  if (!IsPowerOfTwo(group_size)) {
    throw ValidationError(
        "enumerate: group_size must be a power of two, got " +
        std::to_string(group_size));
  }
  StrategySet set;
  set.group_size = group_size;
  set.pruned = prune;

  if (group_size == 1) {
    set.strategies.push_back(HybridStrategy{});
    return set;
  }

  int log2_total = 0;
  while ((1 << (log2_total + 1)) <= group_size) ++log2_total;

  constexpr std::array<ParallelDim, 3> kDims = {
      ParallelDim::kTensor, ParallelDim::kData, ParallelDim::kShardedData};

  for (int parts = 1; parts <= 3; ++parts) {
    std::vector<std::vector<int>> factorizations;
    std::vector<int> scratch;
    FactorSequences(log2_total, parts, scratch, factorizations);
    if (factorizations.empty()) continue;

    // Ordered selections of `parts` distinct dimensions.
    std::vector<std::vector<ParallelDim>> dim_orders;
    std::vector<ParallelDim> dims;
    auto recurse = [&](auto&& self, int depth) -> void {
      if (depth == parts) {
        dim_orders.push_back(dims);
        return;
      }
      for (ParallelDim d : kDims) {
        if (std::find(dims.begin(), dims.end(), d) != dims.end()) continue;
        dims.push_back(d);
        self(self, depth + 1);
        dims.pop_back();
      }
    };
    recurse(recurse, 0);

    for (const std::vector<ParallelDim>& order : dim_orders) {
      for (const std::vector<int>& factors : factorizations) {
        HybridStrategy s;
        s.group_size = group_size;
        for (int i = 0; i < parts; ++i) {
          s.levels.push_back(StrategyLevel{order[i], factors[i]});
        }
        if (prune && s.ContainsDpAndSdp()) continue;
        set.strategies.push_back(std::move(s));
      }
    }
  }

  std::sort(set.strategies.begin(), set.strategies.end(), CanonicalLess);
  return set;
}

json StrategySetToJson(const StrategySet& set) {
  json strategies = json::array();
  for (const HybridStrategy& s : set.strategies) {
    json levels = json::array();
    for (const StrategyLevel& level : s.levels) {
      levels.push_back(std::string(DimName(level.dim)) + ":" +
                       std::to_string(level.degree));
    }
    strategies.push_back(std::move(levels));
  }
  return json{{"group_size", set.group_size},
              {"pruned", set.pruned},
              {"strategies", strategies}};
}

}  // namespace parplan
