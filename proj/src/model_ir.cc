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

#include "parplan/model_ir.h"

#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace parplan {

using nlohmann::json;

int64_t ModelSpec::TotalParamBytes() const {
  return std::accumulate(layers.begin(), layers.end(), int64_t{0},
                         [](int64_t acc, const LayerSpec& l) {
                           return acc + l.param_bytes;
                         });
}

int64_t ModelSpec::TotalActivationBytesPerSample() const {
  return std::accumulate(layers.begin(), layers.end(), int64_t{0},
                         [](int64_t acc, const LayerSpec& l) {
                           return acc + l.activation_bytes_per_sample;
                         });
}

void ValidateModel(const ModelSpec& model) {
  if (model.layers.empty()) {
    throw ValidationError("model: layers must contain at least one layer");
  }
  if (model.dtype_bytes <= 0) {
    throw ValidationError("model: dtype_bytes must be positive");
  }
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    std::ostringstream at;
    at << "model: layers[" << i << "].";
    if (layer.id != static_cast<int>(i)) {
      throw ValidationError(at.str() + "id must equal its position " +
                            std::to_string(i));
    }
    if (layer.param_bytes < 0) {
      throw ValidationError(at.str() + "param_bytes must be >= 0");
    }
    if (layer.activation_bytes_per_sample < 0) {
      throw ValidationError(at.str() +
                            "activation_bytes_per_sample must be >= 0");
    }
    if (!(layer.fwd_time_per_sample_ms >= 0.0)) {
      throw ValidationError(at.str() + "fwd_time_per_sample_ms must be >= 0");
    }
  }
}

ModelSpec ModelFromJson(const json& j) {
  ModelSpec model;
  try {
    model.dtype_bytes = j.value("dtype_bytes", 4);
    const json& layers = j.at("layers");
    if (!layers.is_array()) {
      throw ValidationError("model: layers must be an array");
    }
    int id = 0;
    for (const json& jl : layers) {
      LayerSpec layer;
      layer.id = id++;
      layer.param_bytes = jl.at("param_bytes").get<int64_t>();
      layer.activation_bytes_per_sample =
          jl.at("activation_bytes_per_sample").get<int64_t>();
      layer.fwd_time_per_sample_ms =
          jl.at("fwd_time_per_sample_ms").get<double>();
      layer.name = jl.value("name", "");
      model.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: malformed description: ") +
                          e.what());
  }
  ValidateModel(model);
  return model;
}

json ModelToJson(const ModelSpec& model) {
  json layers = json::array();
  for (const LayerSpec& layer : model.layers) {
    json jl = {
        {"param_bytes", layer.param_bytes},
        {"activation_bytes_per_sample", layer.activation_bytes_per_sample},
        {"fwd_time_per_sample_ms", layer.fwd_time_per_sample_ms},
    };
    if (!layer.name.empty()) {
      jl["name"] = layer.name;
    }
    layers.push_back(std::move(jl));
  }
  return json{{"dtype_bytes", model.dtype_bytes}, {"layers", layers}};
}

ModelSpec LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("model: cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("model: parse error in " + path + ": " + e.what());
  }
  return ModelFromJson(j);
}

ModelSpec UniformModel(int num_layers, int64_t param_bytes,
                       int64_t activation_bytes_per_sample,
                       double fwd_time_per_sample_ms) {
  if (num_layers < 1) {
    throw ValidationError("uniform model: num_layers must be >= 1");
  }
  ModelSpec model;
  model.layers.reserve(num_layers);
  for (int i = 0; i < num_layers; ++i) {
    model.layers.push_back(LayerSpec{i, param_bytes,
                                     activation_bytes_per_sample,
                                     fwd_time_per_sample_ms, ""});
  }
  ValidateModel(model);
  return model;
}

}  // namespace parplan
