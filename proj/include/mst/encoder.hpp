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

#include "mst/audio.hpp"
#include "mst/config.hpp"
#include "mst/layers.hpp"

namespace mst {

// Hidden states H, one [L' x D_w] grid per batch item.
struct EncoderStates {
  std::vector<Mat> items;
  int size() const { return static_cast<int>(items.size()); }
};

struct EncoderBlock {
  LayerNorm attn_norm;
  Linear q, k, v, o;
  LayerNorm ff_norm;
  Linear fc1, fc2;
};

struct EncoderWeights {
  Linear conv1;  // kernel 3, stride 1: C -> D_w
  Linear conv2;  // kernel 3, stride 2: D_w -> D_w
  std::vector<EncoderBlock> blocks;
  LayerNorm final_norm;

  ParamList parameters();
};

EncoderWeights init_encoder_weights(const PipelineConfig& cfg, std::uint64_t seed);

// Marks every encoder tensor non-trainable. Optimizer steps skip
// non-trainable tensors, so their values never change afterwards.
EncoderWeights& freeze(EncoderWeights& weights);

// Whisper-style encoder in miniature: two GELU convolutions (the second with
// stride 2, so L' = L/2), sinusoidal positions, pre-norm transformer blocks.
class SpeechEncoder {
 public:
  SpeechEncoder() = default;
  SpeechEncoder(const PipelineConfig& cfg, EncoderWeights weights);

  // mel is [C x L]; returns [L' x D_w].
  Var forward(Tape& t, const Mat& mel);
  Mat encode_one(const Mat& mel);
  EncoderStates encode(const MelBatch& batch);

  EncoderWeights& weights() { return weights_; }
  const PipelineConfig& config() const { return cfg_; }

  static std::int64_t param_count(const PipelineConfig& cfg);

 private:
  PipelineConfig cfg_;
  EncoderWeights weights_;
  Mat positions_;
};

}  // namespace mst
