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

#ifndef PARPLAN_COMMON_H_
#define PARPLAN_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace parplan {

// Config/input problems: bad schema, broken invariants, unparseable values.
// Infeasibility (out-of-memory plans) is never reported through exceptions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Guard tripped by the brute-force oracles when an instance is too large
// to enumerate.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int64_t kKiB = 1024;
inline constexpr int64_t kMiB = 1024 * kKiB;
inline constexpr int64_t kGiB = 1024 * kMiB;

inline bool IsPowerOfTwo(int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

// Bandwidths are decimal GB/s; times are milliseconds.
inline double BytesToMs(double bytes, double bandwidth_gbps) {
  return bytes / (bandwidth_gbps * 1e6);
}

}  // namespace parplan

#endif  // PARPLAN_COMMON_H_
