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

#include "mst/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "mst/error.hpp"

namespace mst {

ParamList EncoderWeights::parameters() {
  ParamList out;
  conv1.collect(out);
  conv2.collect(out);
  for (auto& b : blocks) {
    b.attn_norm.collect(out);
    b.q.collect(out);
    b.k.collect(out);
    b.v.collect(out);
    b.o.collect(out);
    b.ff_norm.collect(out);
    b.fc1.collect(out);
    b.fc2.collect(out);
  }
  final_norm.collect(out);
  return out;
}

EncoderWeights init_encoder_weights(const PipelineConfig& cfg, std::uint64_t seed) {
  Initializer init(seed, 0xE1C0DE);
  const int d = cfg.encoder_dim;
  // Residual branches start small so the stack stays close to the conv stem.
  const double resid_gain = 1.0 / std::sqrt(2.0 * std::max(1, cfg.encoder_layers));
  EncoderWeights w;
  w.conv1 = Linear("encoder.conv1", 3 * cfg.mel_bins, d, true, init);
  w.conv2 = Linear("encoder.conv2", 3 * d, d, true, init);
  for (int i = 0; i < cfg.encoder_layers; ++i) {
    const std::string p = "encoder.blocks." + std::to_string(i);
    EncoderBlock b;
    b.attn_norm = LayerNorm(p + ".attn_norm", d);
    b.q = Linear(p + ".q", d, d, true, init);
    b.k = Linear(p + ".k", d, d, true, init);
    b.v = Linear(p + ".v", d, d, true, init);
    b.o = Linear(p + ".o", d, d, true, init, resid_gain);
    b.ff_norm = LayerNorm(p + ".ff_norm", d);
    b.fc1 = Linear(p + ".fc1", d, cfg.encoder_ffn, true, init);
    b.fc2 = Linear(p + ".fc2", cfg.encoder_ffn, d, true, init, resid_gain);
    w.blocks.push_back(std::move(b));
  }
  w.final_norm = LayerNorm("encoder.final_norm", d);
  return w;
}

EncoderWeights& freeze(EncoderWeights& weights) {
  set_trainable(weights.parameters(), false);
  return weights;
}

SpeechEncoder::SpeechEncoder(const PipelineConfig& cfg, EncoderWeights weights)
    : cfg_(cfg), weights_(std::move(weights)), positions_(kernels::sinusoidal_positions(cfg.encoder_len(), cfg.encoder_dim)) {}

Var SpeechEncoder::forward(Tape& t, const Mat& mel) {
  if (mel.rows() != cfg_.mel_bins || mel.cols() != cfg_.mel_frames) {
    throw ShapeError("encoder expects mel [" + std::to_string(cfg_.mel_bins) + " x " + std::to_string(cfg_.mel_frames) +
                     "], got [" + std::to_string(mel.rows()) + " x " + std::to_string(mel.cols()) + "]");
  }
  auto& w = weights_;
  Var x = t.constant(mel.transpose());  // [L x C]
  x = ag::gelu(w.conv1(t, ag::im2col(x, 3, 1, 1)));
  x = ag::gelu(w.conv2(t, ag::im2col(x, 3, 2, 1)));
  x = ag::add_constant(x, positions_);
  AttentionSpec spec;
  spec.heads = spec.kv_heads = cfg_.encoder_heads;
  spec.head_dim = cfg_.encoder_dim / cfg_.encoder_heads;
  for (auto& b : w.blocks) {
    Var h = b.attn_norm(t, x);
    Var a = ag::attention(b.q(t, h), b.k(t, h), b.v(t, h), spec);
    x = ag::add(x, b.o(t, a));
    h = b.ff_norm(t, x);
    x = ag::add(x, b.fc2(t, ag::gelu(b.fc1(t, h))));
  }
  return w.final_norm(t, x);
}

Mat SpeechEncoder::encode_one(const Mat& mel) {
  Tape t(/*record=*/false);
  return forward(t, mel).value();
}

EncoderStates SpeechEncoder::encode(const MelBatch& batch) {
  if (batch.bins != cfg_.mel_bins || batch.frames != cfg_.mel_frames) {
    throw ShapeError("encoder: batch shape does not match the configured [C x L]");
  }
  EncoderStates out;
  out.items.reserve(batch.items.size());
  for (const auto& mel : batch.items) out.items.push_back(encode_one(mel));
  return out;
}

std::int64_t SpeechEncoder::param_count(const PipelineConfig& cfg) {
  const std::int64_t c = cfg.mel_bins, d = cfg.encoder_dim, f = cfg.encoder_ffn;
  const std::int64_t conv = (3 * c * d + d) + (3 * d * d + d);
  const std::int64_t block = 2 * d + 4 * (d * d + d) + 2 * d + (d * f + f) + (f * d + d);
  return conv + cfg.encoder_layers * block + 2 * d;
}

}  // namespace mst
