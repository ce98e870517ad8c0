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

#include "mst/adapter.hpp"

#include "mst/error.hpp"

namespace mst {

namespace {
constexpr double kQueryInitStd = 0.02;
}

ParamList QFormerWeights::parameters() {
  ParamList out{&queries};
  for (auto& b : blocks) {
    b.self_norm.collect(out);
    b.self_q.collect(out);
    b.self_k.collect(out);
    b.self_v.collect(out);
    b.self_o.collect(out);
    b.cross_norm.collect(out);
    b.cross_q.collect(out);
    b.cross_k.collect(out);
    b.cross_v.collect(out);
    b.cross_o.collect(out);
    b.ff_norm.collect(out);
    b.fc1.collect(out);
    b.fc2.collect(out);
  }
  final_norm.collect(out);
  return out;
}

ParamList MlpWeights::parameters() {
  ParamList out;
  fc1.collect(out);
  fc2.collect(out);
  return out;
}

ParamList AdapterWeights::parameters() {
  ParamList out = qformer.parameters();
  for (auto* p : mlp.parameters()) out.push_back(p);
  return out;
}

AdapterWeights init_adapter_weights(const PipelineConfig& cfg, std::uint64_t seed) {
  Initializer init(seed, 0xADA97E5);
  const int dq = cfg.query_dim, dw = cfg.encoder_dim;
  AdapterWeights w;
  w.qformer.queries = Parameter("adapter.qformer.queries", init.normal(cfg.num_queries, dq, kQueryInitStd));
  for (int i = 0; i < cfg.qformer_layers; ++i) {
    const std::string p = "adapter.qformer.blocks." + std::to_string(i);
    QFormerBlock b;
    b.self_norm = LayerNorm(p + ".self_norm", dq);
    b.self_q = Linear(p + ".self_q", dq, dq, true, init);
    b.self_k = Linear(p + ".self_k", dq, dq, true, init);
    b.self_v = Linear(p + ".self_v", dq, dq, true, init);
    b.self_o = Linear(p + ".self_o", dq, dq, true, init);
    b.cross_norm = LayerNorm(p + ".cross_norm", dq);
    b.cross_q = Linear(p + ".cross_q", dq, dq, true, init);
    b.cross_k = Linear(p + ".cross_k", dw, dq, true, init);
    b.cross_v = Linear(p + ".cross_v", dw, dq, true, init);
    b.cross_o = Linear(p + ".cross_o", dq, dq, true, init);
    b.ff_norm = LayerNorm(p + ".ff_norm", dq);
    b.fc1 = Linear(p + ".fc1", dq, cfg.qformer_ffn, true, init);
    b.fc2 = Linear(p + ".fc2", cfg.qformer_ffn, dq, true, init);
    w.qformer.blocks.push_back(std::move(b));
  }
  w.qformer.final_norm = LayerNorm("adapter.qformer.final_norm", dq);
  w.mlp.fc1 = Linear("adapter.mlp.fc1", dq, cfg.mlp_hidden, true, init);
  w.mlp.fc2 = Linear("adapter.mlp.fc2", cfg.mlp_hidden, cfg.llm_dim, true, init);
  return w;
}

Var cross_attention(Tape& t, Var queries, Var states, QFormerBlock& b, int heads) {
  AttentionSpec spec;
  spec.heads = spec.kv_heads = heads;
  spec.head_dim = static_cast<int>(queries.cols()) / heads;
  Var a = ag::attention(b.cross_q(t, queries), b.cross_k(t, states), b.cross_v(t, states), spec);
  return b.cross_o(t, a);
}

SpeechAdapter::SpeechAdapter(const PipelineConfig& cfg, AdapterWeights weights)
    : cfg_(cfg), weights_(std::move(weights)) {}

Var SpeechAdapter::qformer(Tape& t, Var states) {
  if (states.rows() != cfg_.encoder_len() || states.cols() != cfg_.encoder_dim) {
    throw ShapeError("qformer expects states [" + std::to_string(cfg_.encoder_len()) + " x " +
                     std::to_string(cfg_.encoder_dim) + "], got [" + std::to_string(states.rows()) + " x " +
                     std::to_string(states.cols()) + "]");
  }
  auto& w = weights_.qformer;
  AttentionSpec self_spec;
  self_spec.heads = self_spec.kv_heads = cfg_.qformer_heads;
  self_spec.head_dim = cfg_.query_dim / cfg_.qformer_heads;
  Var x = t.param(w.queries);
  for (auto& b : w.blocks) {
    Var h = b.self_norm(t, x);
    x = ag::add(x, b.self_o(t, ag::attention(b.self_q(t, h), b.self_k(t, h), b.self_v(t, h), self_spec)));
    h = b.cross_norm(t, x);
    x = ag::add(x, cross_attention(t, h, states, b, cfg_.qformer_heads));
    h = b.ff_norm(t, x);
    x = ag::add(x, b.fc2(t, ag::gelu(b.fc1(t, h))));
  }
  return w.final_norm(t, x);
}

Var SpeechAdapter::pool(Tape&, Var z) const {
  if (z.rows() % cfg_.pool_stride != 0) {
    throw ShapeError("pool: K=" + std::to_string(z.rows()) + " is not divisible by S=" + std::to_string(cfg_.pool_stride));
  }
  return ag::pool_rows(z, cfg_.pool_stride, cfg_.pool_mode == PoolMode::kMax);
}

Var SpeechAdapter::align(Tape& t, Var pooled) {
  if (pooled.cols() != cfg_.query_dim) throw ShapeError("align: pooled width does not match D_q");
  auto& m = weights_.mlp;
  return m.fc2(t, ag::gelu(m.fc1(t, pooled)));
}

AdapterTrace SpeechAdapter::forward(Tape& t, Var states) {
  AdapterTrace tr;
  tr.queries = qformer(t, states);
  tr.pooled = pool(t, tr.queries);
  tr.aligned = align(t, tr.pooled);
  return tr;
}

Mat qformer(const Mat& states, QFormerWeights& weights, const PipelineConfig& cfg) {
  AdapterWeights aw;
  aw.qformer = weights;  // copy: the tape needs Parameter objects it can reference
  SpeechAdapter a(cfg, std::move(aw));
  Tape t(false);
  return a.qformer(t, t.constant(states)).value();
}

Mat pool(const Mat& z, int stride, PoolMode mode) { return kernels::pool_rows(z, stride, mode == PoolMode::kMax); }

Mat align(const Mat& pooled, MlpWeights& weights) {
  if (pooled.cols() != weights.fc1.in_features()) throw ShapeError("align: pooled width does not match D_q");
  return weights.fc2.apply(kernels::gelu(weights.fc1.apply(pooled)));
}

ParamBudget adapter_param_count(const PipelineConfig& cfg) {
  const std::int64_t k = cfg.num_queries, dq = cfg.query_dim, dw = cfg.encoder_dim, f = cfg.qformer_ffn;
  const std::int64_t self_attn = 4 * (dq * dq + dq);
  const std::int64_t cross_attn = 2 * (dq * dq + dq) + 2 * (dw * dq + dq);
  const std::int64_t ffn = (dq * f + f) + (f * dq + dq);
  const std::int64_t norms = 3 * 2 * dq;
  const std::int64_t qformer = k * dq + cfg.qformer_layers * (self_attn + cross_attn + ffn + norms) + 2 * dq;
  const std::int64_t h = cfg.mlp_hidden, dl = cfg.llm_dim;
  const std::int64_t mlp = (dq * h + h) + (h * dl + dl);
  ParamBudget b;
  b.entries.push_back({"Q-Former", qformer, qformer, "queries + self/cross-attention blocks"});
  b.entries.push_back({"Pooling", 0, 0, "parameter-free " + std::string(cfg.pool_mode == PoolMode::kMax ? "max" : "average") +
                                            " pooling, stride " + std::to_string(cfg.pool_stride)});
  b.entries.push_back({"MLP", mlp, mlp, "D_q -> hidden -> D_llm"});
  return b;
}

}  // namespace mst
