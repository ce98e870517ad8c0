// Copyright 2026 The mst Authors
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

#pragma once

#include <cstdint>
#include <vector>

#include "mst/config.hpp"
#include "mst/layers.hpp"
#include "mst/param_budget.hpp"

namespace mst {

struct QFormerBlock {
  LayerNorm self_norm;
  Linear self_q, self_k, self_v, self_o;
  LayerNorm cross_norm;
  Linear cross_q;          // D_q -> D_q
  Linear cross_k, cross_v;  // D_w -> D_q
  Linear cross_o;
  LayerNorm ff_norm;
  Linear fc1, fc2;
};

struct QFormerWeights {
  Parameter queries;  // [K x D_q]
  std::vector<QFormerBlock> blocks;
  LayerNorm final_norm;

  ParamList parameters();
};

struct MlpWeights {
  Linear fc1;  // D_q -> hidden
  Linear fc2;  // hidden -> D_llm
  ParamList parameters();
};

struct AdapterWeights {
  QFormerWeights qformer;
  MlpWeights mlp;
  ParamList parameters();
};

AdapterWeights init_adapter_weights(const PipelineConfig& cfg, std::uint64_t seed);

// Stage outputs of one adapter pass.
struct AdapterTrace {
  Var queries;  // Z   [K x D_q]
  Var pooled;   // Z_p [K/S x D_q]
  Var aligned;  // Z_mlp [K/S x D_llm]
};

// Q-Former feature extraction, temporal pooling and MLP alignment.
class SpeechAdapter {
 public:
  SpeechAdapter() = default;
  SpeechAdapter(const PipelineConfig& cfg, AdapterWeights weights);

  // states: [L' x D_w] -> [K x D_q].
  Var qformer(Tape& t, Var states);
  Var pool(Tape& t, Var z) const;
  Var align(Tape& t, Var pooled);
  AdapterTrace forward(Tape& t, Var states);

  AdapterWeights& weights() { return weights_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  AdapterWeights weights_;
};

// Plain-value conveniences (no gradient).
Mat qformer(const Mat& states, QFormerWeights& weights, const PipelineConfig& cfg);
Mat pool(const Mat& z, int stride, PoolMode mode = PoolMode::kAverage);
Mat align(const Mat& pooled, MlpWeights& weights);

// Cross-attention read of the Q-Former (one head group): queries attend to
// states through the given projections.
Var cross_attention(Tape& t, Var queries, Var states, QFormerBlock& block, int heads);

// Closed-form parameter counts: entries "Q-Former", "Pooling", "MLP".
ParamBudget adapter_param_count(const PipelineConfig& cfg);

}  // namespace mst
