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

#ifndef PARPLAN_MODEL_IR_H_
#define PARPLAN_MODEL_IR_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "parplan/common.h"

namespace parplan {

// One model layer. Sizes are stored in bytes (the element-count x dtype
// product is taken at ingestion), times in milliseconds per input sample.
struct LayerSpec {
  int id = 0;
  int64_t param_bytes = 0;
  int64_t activation_bytes_per_sample = 0;
  double fwd_time_per_sample_ms = 0.0;
  std::string name;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// A model is a linear sequence of layers; layer ids are contiguous 0..L-1.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  int dtype_bytes = 4;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int64_t TotalParamBytes() const;
  int64_t TotalActivationBytesPerSample() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Throws ValidationError naming the offending field.
void ValidateModel(const ModelSpec& model);

ModelSpec ModelFromJson(const nlohmann::json& j);
nlohmann::json ModelToJson(const ModelSpec& model);

// Loads and validates a model description file.
ModelSpec LoadModel(const std::string& path);

// Builds a model of `num_layers` identical layers. Test fixtures and
// synthetic sweeps use this; num_layers must be >= 1.
ModelSpec UniformModel(int num_layers, int64_t param_bytes,
                       int64_t activation_bytes_per_sample,
                       double fwd_time_per_sample_ms);

}  // namespace parplan

#endif  // PARPLAN_MODEL_IR_H_
