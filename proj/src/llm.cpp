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

#include "mst/llm.hpp"

#include <cmath>

#include "mst/error.hpp"

namespace mst {

FusedInput fuse(const Mat& audio_prompt, const PromptEmbedding& text) {
  if (text.values.rows() > 0 && text.values.cols() != audio_prompt.cols()) {
    throw ShapeError("fuse: audio prompt width " + std::to_string(audio_prompt.cols()) + " != text width " +
                     std::to_string(text.values.cols()));
  }
  FusedInput out;
  out.boundary = static_cast<int>(audio_prompt.rows());
  out.values.resize(audio_prompt.rows() + text.values.rows(), audio_prompt.cols());
  out.values.topRows(audio_prompt.rows()) = audio_prompt;
  if (text.values.rows() > 0) out.values.bottomRows(text.values.rows()) = text.values;
  return out;
}

std::optional<LoraTarget> parse_lora_target(const std::string& name) {
  if (name == "q") return LoraTarget::kQ;
  if (name == "k") return LoraTarget::kK;
  if (name == "v") return LoraTarget::kV;
  if (name == "o") return LoraTarget::kO;
  return std::nullopt;
}

const char* lora_target_name(LoraTarget t) {
  static const char* names[] = {"q", "k", "v", "o"};
  return names[static_cast<int>(t)];
}

namespace {

std::vector<LoraTarget> resolve_targets(const LoraConfig& lora) {
  std::vector<LoraTarget> out;
  if (!lora.enabled) return out;
  for (const auto& name : lora.targets) {
    auto t = parse_lora_target(name);
    if (!t) throw ValidationError("unknown LoRA target '" + name + "' (expected q, k, v or o)");
    out.push_back(*t);
  }
  return out;
}

std::pair<int, int> projection_shape(const PipelineConfig& cfg, LoraTarget t) {
  const int d = cfg.llm_dim, qd = cfg.llm_heads * cfg.llm_head_dim, kvd = cfg.llm_kv_heads * cfg.llm_head_dim;
  switch (t) {
    case LoraTarget::kQ: return {d, qd};
    case LoraTarget::kK: return {d, kvd};
    case LoraTarget::kV: return {d, kvd};
    case LoraTarget::kO: return {qd, d};
  }
  return {0, 0};
}

AttentionSpec llm_attention_spec(const PipelineConfig& cfg) {
  AttentionSpec s;
  s.heads = cfg.llm_heads;
  s.kv_heads = cfg.llm_kv_heads;
  s.head_dim = cfg.llm_head_dim;
  s.causal = true;
  s.rope = true;
  s.rope_base = cfg.rope_base;
  return s;
}

}  // namespace

ParamList LlmWeights::base_parameters() {
  ParamList out{&embed};
  for (auto& b : blocks) {
    b.attn_norm.collect(out);
    b.q.collect(out);
    b.k.collect(out);
    b.v.collect(out);
    b.o.collect(out);
    b.ff_norm.collect(out);
    b.gate.collect(out);
    b.up.collect(out);
    b.down.collect(out);
  }
  final_norm.collect(out);
  return out;
}

ParamList LlmWeights::lora_parameters() {
  ParamList out;
  for (auto& b : blocks)
    for (auto& pair : b.lora)
      if (pair) {
        out.push_back(&pair->a);
        out.push_back(&pair->b);
      }
  return out;
}

ParamList LlmWeights::parameters() {
  ParamList out = base_parameters();
  for (auto* p : lora_parameters()) out.push_back(p);
  return out;
}

LlmWeights init_llm_weights(const PipelineConfig& cfg, const LoraConfig& lora, std::uint64_t seed) {
  Initializer init(seed, 0x11A1);
  Initializer lora_init(seed, 0x10EA);
  const int d = cfg.llm_dim, qd = cfg.llm_heads * cfg.llm_head_dim, kvd = cfg.llm_kv_heads * cfg.llm_head_dim;
  LlmWeights w;
  w.embed = Parameter("llm.embed", init.normal(cfg.vocab_size, d, 1.0 / std::sqrt(static_cast<double>(d))));
  const auto targets = resolve_targets(lora);
  for (int i = 0; i < cfg.llm_layers; ++i) {
    const std::string p = "llm.blocks." + std::to_string(i);
    LlmBlock b;
    b.attn_norm = RmsNorm(p + ".attn_norm", d);
    b.q = Linear(p + ".q", d, qd, false, init);
    b.k = Linear(p + ".k", d, kvd, false, init);
    b.v = Linear(p + ".v", d, kvd, false, init);
    b.o = Linear(p + ".o", qd, d, false, init);
    b.ff_norm = RmsNorm(p + ".ff_norm", d);
    b.gate = Linear(p + ".gate", d, cfg.llm_ffn, false, init);
    b.up = Linear(p + ".up", d, cfg.llm_ffn, false, init);
    b.down = Linear(p + ".down", cfg.llm_ffn, d, false, init);
    for (LoraTarget t : targets) {
      const auto [in, out] = projection_shape(cfg, t);
      const double std = lora.init_std > 0 ? lora.init_std : 1.0 / std::sqrt(static_cast<double>(in));
      const std::string lp = "lora.blocks." + std::to_string(i) + "." + lora_target_name(t);
      b.lora[static_cast<int>(t)] =
          LoraPair{Parameter(lp + ".a", lora_init.normal(in, lora.rank, std)), Parameter(lp + ".b", Mat::Zero(lora.rank, out))};
    }
    w.blocks.push_back(std::move(b));
  }
  w.final_norm = RmsNorm("llm.final_norm", d);
  return w;
}

LanguageModel::LanguageModel(const PipelineConfig& cfg, const LoraConfig& lora, LlmWeights weights)
    : cfg_(cfg), lora_(lora), weights_(std::move(weights)) {}

PromptEmbedding LanguageModel::embed(const std::vector<int>& ids) const {
  PromptEmbedding out;
  out.token_ids = ids;
  out.values.resize(static_cast<Eigen::Index>(ids.size()), cfg_.llm_dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= cfg_.vocab_size) {
      throw ShapeError("embed: token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(cfg_.vocab_size));
    }
    out.values.row(static_cast<Eigen::Index>(i)) = weights_.embed.value().row(ids[i]);
  }
  return out;
}

Var LanguageModel::embed(Tape& t, const std::vector<int>& ids) {
  if (ids.empty()) return t.constant(Mat(0, cfg_.llm_dim));
  return ag::gather_rows(t.param(weights_.embed), ids);
}

Var LanguageModel::project(Tape& t, LlmBlock& b, LoraTarget which, Var x) {
  Linear* base = nullptr;
  switch (which) {
    case LoraTarget::kQ: base = &b.q; break;
    case LoraTarget::kK: base = &b.k; break;
    case LoraTarget::kV: base = &b.v; break;
    case LoraTarget::kO: base = &b.o; break;
  }
  Var y = (*base)(t, x);
  auto& pair = b.lora[static_cast<int>(which)];
  if (!pair) return y;
  Var delta = ag::matmul(ag::matmul(x, t.param(pair->a)), t.param(pair->b));
  return ag::add(y, ag::scale(delta, lora_.scale()));
}

Var LanguageModel::hidden(Tape& t, Var x) {
  if (x.cols() != cfg_.llm_dim) throw ShapeError("llm: input width does not match D_llm");
  const AttentionSpec spec = llm_attention_spec(cfg_);
  for (auto& b : weights_.blocks) {
    Var h = b.attn_norm(t, x);
    Var a = ag::attention(project(t, b, LoraTarget::kQ, h), project(t, b, LoraTarget::kK, h),
                          project(t, b, LoraTarget::kV, h), spec);
    x = ag::add(x, project(t, b, LoraTarget::kO, a));
    h = b.ff_norm(t, x);
    x = ag::add(x, b.down(t, ag::mul(ag::gelu(b.gate(t, h)), b.up(t, h))));
  }
  return weights_.final_norm(t, x);
}

Var LanguageModel::logits(Tape& t, Var hidden_states) { return ag::matmul_nt(hidden_states, t.param(weights_.embed)); }

LmOutput LanguageModel::forward(Tape& t, Var prefix, const std::vector<int>& target_ids,
                                const std::vector<int>& loss_mask) {
  if (static_cast<int>(target_ids.size()) > cfg_.max_target_len) {
    throw ValidationError("target length " + std::to_string(target_ids.size()) + " exceeds max_target_len " +
                          std::to_string(cfg_.max_target_len));
  }
  if (loss_mask.size() != target_ids.size()) throw ShapeError("llm: loss mask length differs from targets");
  if (prefix.rows() < 1) throw ShapeError("llm: prefix must have at least one row");
  if (target_ids.empty()) {
    Var zero = t.constant(Mat::Zero(1, 1));
    return {t.constant(Mat(0, cfg_.vocab_size)), zero};
  }
  std::vector<int> shifted(target_ids.begin(), target_ids.end() - 1);
  Var x = shifted.empty() ? prefix : ag::concat_rows({prefix, embed(t, shifted)});
  Var h = hidden(t, x);
  Var tail = ag::slice_rows(h, prefix.rows() - 1, static_cast<Eigen::Index>(target_ids.size()));
  LmOutput out;
  out.logits = logits(t, tail);
  out.loss = ag::masked_cross_entropy(out.logits, target_ids, loss_mask);
  return out;
}

// ---- generation -----------------------------------------------------------

GenerationEngine::GenerationEngine(const LanguageModel& model) : cfg_(model.config()) {
  const auto& w = model.weights();
  embed_ = w.embed.value();
  final_norm_ = w.final_norm.gamma.value();
  const double s = model.lora().scale();
  for (const auto& b : w.blocks) {
    Layer l;
    l.attn_norm = b.attn_norm.gamma.value();
    l.ff_norm = b.ff_norm.gamma.value();
    auto merged = [&](const Linear& base, LoraTarget t) {
      Mat m = base.weight.value();
      const auto& pair = b.lora[static_cast<int>(t)];
      if (pair) m += s * (pair->a.value() * pair->b.value());
      return m;
    };
    l.wq = merged(b.q, LoraTarget::kQ);
    l.wk = merged(b.k, LoraTarget::kK);
    l.wv = merged(b.v, LoraTarget::kV);
    l.wo = merged(b.o, LoraTarget::kO);
    l.gate = b.gate.weight.value();
    l.up = b.up.weight.value();
    l.down = b.down.weight.value();
    layers_.push_back(std::move(l));
  }
}

Mat GenerationEngine::feed_forward(const Layer& l, const Mat& x) const {
  const Mat h = kernels::rms_norm(x, l.ff_norm);
  const Mat act = (kernels::gelu(h * l.gate).array() * (h * l.up).array()).matrix();
  return act * l.down;
}

namespace {

int argmax_row(const Mat& logits, Eigen::Index row) {
  Eigen::Index best = 0;
  logits.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

Mat GenerationEngine::prefill_logits(const Mat& prefix) const {
  AttentionSpec spec = llm_attention_spec(cfg_);
  Mat x = prefix;
  for (const auto& l : layers_) {
    const Mat h = kernels::rms_norm(x, l.attn_norm);
    Mat q = h * l.wq, k = h * l.wk;
    const Mat v = h * l.wv;
    kernels::apply_rope(q, spec.heads, spec.head_dim, 0, spec.rope_base);
    kernels::apply_rope(k, spec.kv_heads, spec.head_dim, 0, spec.rope_base);
    x += kernels::attention(q, k, v, spec) * l.wo;
    x += feed_forward(l, x);
  }
  return kernels::rms_norm(x, final_norm_) * embed_.transpose();
}

std::vector<int> GenerationEngine::generate(const Mat& prefix, const StopRule& stop) const {
  return generate_batch({prefix}, stop).front();
}

std::vector<std::vector<int>> GenerationEngine::generate_batch(const std::vector<Mat>& prefixes,
                                                               const StopRule& stop) const {
  const int n = static_cast<int>(prefixes.size());
  std::vector<std::vector<int>> out(n);
  if (n == 0 || stop.max_new_tokens <= 0) return out;
  const AttentionSpec base_spec = llm_attention_spec(cfg_);
  const int kvd = cfg_.llm_kv_heads * cfg_.llm_head_dim;
  const int layers = static_cast<int>(layers_.size());

  // Per item, per layer caches sized for the whole decode.
  struct Cache {
    std::vector<Mat> k, v;
    int len = 0;
  };
  std::vector<Cache> caches(n);
  std::vector<Eigen::Index> offsets(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    if (prefixes[i].cols() != cfg_.llm_dim || prefixes[i].rows() < 1) {
      throw ShapeError("generate: prefix must be [>=1 x D_llm]");
    }
    offsets[i + 1] = offsets[i] + prefixes[i].rows();
    const Eigen::Index cap = prefixes[i].rows() + stop.max_new_tokens;
    caches[i].k.assign(layers, Mat(cap, kvd));
    caches[i].v.assign(layers, Mat(cap, kvd));
    caches[i].len = static_cast<int>(prefixes[i].rows());
  }

  // Prefill every prefix in one stacked pass; attention stays per item.
  Mat x(offsets[n], cfg_.llm_dim);
  for (int i = 0; i < n; ++i) x.middleRows(offsets[i], prefixes[i].rows()) = prefixes[i];
  for (int li = 0; li < layers; ++li) {
    const Layer& l = layers_[li];
    const Mat h = kernels::rms_norm(x, l.attn_norm);
    Mat q = h * l.wq, k = h * l.wk;
    const Mat v = h * l.wv;
    Mat attn(x.rows(), q.cols());
    for (int i = 0; i < n; ++i) {
      const Eigen::Index r0 = offsets[i], len = prefixes[i].rows();
      Mat qi = q.middleRows(r0, len), ki = k.middleRows(r0, len);
      kernels::apply_rope(qi, base_spec.heads, base_spec.head_dim, 0, base_spec.rope_base);
      kernels::apply_rope(ki, base_spec.kv_heads, base_spec.head_dim, 0, base_spec.rope_base);
      caches[i].k[li].topRows(len) = ki;
      caches[i].v[li].topRows(len) = v.middleRows(r0, len);
      attn.middleRows(r0, len) = kernels::attention(qi, ki, v.middleRows(r0, len), base_spec);
    }
    x += attn * l.wo;
    x += feed_forward(l, x);
  }
  Mat last(n, cfg_.llm_dim);
  for (int i = 0; i < n; ++i) last.row(i) = x.row(offsets[i + 1] - 1);
  Mat logits = kernels::rms_norm(last, final_norm_) * embed_.transpose();

  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) active[i] = i;
  for (int step = 0; step < stop.max_new_tokens && !active.empty(); ++step) {
    std::vector<int> still;
    std::vector<int> next_tokens;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int item = active[a];
      const int tok = argmax_row(logits, static_cast<Eigen::Index>(a));
      if (tok == stop.eos_id && !stop.ignore_eos) continue;
      out[item].push_back(tok);
      if (static_cast<int>(out[item].size()) >= stop.max_new_tokens) continue;
      still.push_back(item);
      next_tokens.push_back(tok);
    }
    active = std::move(still);
    if (active.empty()) break;

    const int b = static_cast<int>(active.size());
    Mat xs(b, cfg_.llm_dim);
    for (int a = 0; a < b; ++a) xs.row(a) = embed_.row(next_tokens[a]);
    for (int li = 0; li < layers; ++li) {
      const Layer& l = layers_[li];
      const Mat h = kernels::rms_norm(xs, l.attn_norm);
      Mat q = h * l.wq, k = h * l.wk;
      const Mat v = h * l.wv;
      Mat attn(b, q.cols());
      for (int a = 0; a < b; ++a) {
        Cache& c = caches[active[a]];
        Mat qa = q.row(a), ka = k.row(a);
        kernels::apply_rope(qa, base_spec.heads, base_spec.head_dim, c.len, base_spec.rope_base);
        kernels::apply_rope(ka, base_spec.kv_heads, base_spec.head_dim, c.len, base_spec.rope_base);
        c.k[li].row(c.len) = ka.row(0);
        c.v[li].row(c.len) = v.row(a);
        AttentionSpec spec = base_spec;
        spec.causal = false;
        attn.row(a) = kernels::attention(qa, c.k[li].topRows(c.len + 1), c.v[li].topRows(c.len + 1), spec).row(0);
      }
      xs += attn * l.wo;
      xs += feed_forward(l, xs);
    }
    for (int a = 0; a < b; ++a) ++caches[active[a]].len;
    logits = kernels::rms_norm(xs, final_norm_) * embed_.transpose();
  }
  return out;
}

ParamBudget llm_param_count(const PipelineConfig& cfg, const LoraConfig& lora) {
  const std::int64_t d = cfg.llm_dim, v = cfg.vocab_size, f = cfg.llm_ffn;
  const std::int64_t qd = static_cast<std::int64_t>(cfg.llm_heads) * cfg.llm_head_dim;
  const std::int64_t kvd = static_cast<std::int64_t>(cfg.llm_kv_heads) * cfg.llm_head_dim;
  const std::int64_t block = 2 * d + d * qd + 2 * d * kvd + qd * d + 3 * d * f;
  const std::int64_t base = v * d + cfg.llm_layers * block + d;
  std::int64_t lora_total = 0;
  for (LoraTarget t : resolve_targets(lora)) {
    const auto [in, out] = projection_shape(cfg, t);
    lora_total += static_cast<std::int64_t>(lora.rank) * (in + out);
  }
  lora_total *= cfg.llm_layers;
  ParamBudget b;
  b.entries.push_back({"LLM", base, 0, "decoder-only, tied embeddings"});
  std::string targets;
  for (const auto& t : lora.targets) targets += (targets.empty() ? "" : ",") + t;
  char detail[128];
  std::snprintf(detail, sizeof(detail), "LoRA (r=%d, alpha=%g) on %s", lora.rank, lora.alpha, targets.c_str());
  b.entries.push_back({"LLM LoRA", lora_total, lora_total, lora.enabled ? detail : "disabled"});
  return b;
}

}  // namespace mst
