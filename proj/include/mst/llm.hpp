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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mst/config.hpp"
#include "mst/layers.hpp"
#include "mst/param_budget.hpp"

namespace mst {

// Text embeddings P for instruction token ids.
struct PromptEmbedding {
  Mat values;  // [P_t x D_llm]
  std::vector<int> token_ids;
};

// Audio prompt followed by text embeddings; text starts at `boundary`.
struct FusedInput {
  Mat values;
  int boundary = 0;
};

FusedInput fuse(const Mat& audio_prompt, const PromptEmbedding& text);

enum class LoraTarget { kQ = 0, kK = 1, kV = 2, kO = 3 };
std::optional<LoraTarget> parse_lora_target(const std::string& name);
const char* lora_target_name(LoraTarget t);

// Low-rank delta W + scale * A * B with A [in x r], B [r x out].
struct LoraPair {
  Parameter a;
  Parameter b;
};

struct LlmBlock {
  RmsNorm attn_norm;
  Linear q, k, v, o;  // no bias
  std::array<std::optional<LoraPair>, 4> lora;
  RmsNorm ff_norm;
  Linear gate, up, down;
};

struct LlmWeights {
  Parameter embed;  // [V x D_llm], tied with the output projection
  std::vector<LlmBlock> blocks;
  RmsNorm final_norm;

  ParamList base_parameters();
  ParamList lora_parameters();
  ParamList parameters();
};

// LoRA pairs are created for `lora.targets` when lora.enabled; A is drawn
// from a Gaussian and B starts at zero so the delta is exactly zero.
LlmWeights init_llm_weights(const PipelineConfig& cfg, const LoraConfig& lora, std::uint64_t seed);

struct LmOutput {
  Var logits;  // one row per target token
  Var loss;    // 1x1
};

// Decoder-only LM: pre-norm blocks with rotary positions, grouped-query
// attention and a GeGLU feed-forward.
class LanguageModel {
 public:
  LanguageModel() = default;
  LanguageModel(const PipelineConfig& cfg, const LoraConfig& lora, LlmWeights weights);

  PromptEmbedding embed(const std::vector<int>& ids) const;
  Var embed(Tape& t, const std::vector<int>& ids);

  // Causal pass over rows of `x`; returns final hidden states.
  Var hidden(Tape& t, Var x);
  Var logits(Tape& t, Var hidden_states);

  // Teacher-forced pass over prefix + targets. Logit row j predicts
  // target_ids[j]; the loss is the mean NLL over rows with mask != 0.
  LmOutput forward(Tape& t, Var prefix, const std::vector<int>& target_ids, const std::vector<int>& loss_mask);

  LlmWeights& weights() { return weights_; }
  const LlmWeights& weights() const { return weights_; }
  const PipelineConfig& config() const { return cfg_; }
  const LoraConfig& lora() const { return lora_; }

 private:
  Var project(Tape& t, LlmBlock& b, LoraTarget which, Var x);

  PipelineConfig cfg_;
  LoraConfig lora_;
  LlmWeights weights_;
};

struct StopRule {
  int eos_id = 1;
  int max_new_tokens = 32;
  // Benchmarks decode a fixed number of tokens regardless of EOS.
  bool ignore_eos = false;
};

// Greedy decoder with a per-item KV cache. Holds a merged, immutable copy
// of the weights, so concurrent generate calls are safe.
class GenerationEngine {
 public:
  explicit GenerationEngine(const LanguageModel& model);

  std::vector<int> generate(const Mat& prefix, const StopRule& stop) const;
  std::vector<std::vector<int>> generate_batch(const std::vector<Mat>& prefixes, const StopRule& stop) const;
  // Next-token logits for every prefix row (prefill only).
  Mat prefill_logits(const Mat& prefix) const;

 private:
  struct Layer {
    Mat attn_norm, wq, wk, wv, wo, ff_norm, gate, up, down;
  };
  Mat feed_forward(const Layer& l, const Mat& x) const;

  PipelineConfig cfg_;
  Mat embed_;
  Mat final_norm_;
  std::vector<Layer> layers_;
};

// Closed-form counts: entries "LLM" (frozen base) and "LLM LoRA".
ParamBudget llm_param_count(const PipelineConfig& cfg, const LoraConfig& lora);

}  // namespace mst
