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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mst {

enum class PoolMode { kAverage, kMax };

// Model geometry and frontend settings. Field names follow the tensor stages:
// mel [C x L] -> encoder [L' x D_w] -> queries [K x D_q] -> pooled [K/S x D_q]
// -> aligned [K/S x D_llm].
struct PipelineConfig {
  // Audio frontend.
  int sample_rate = 16000;
  int win_length = 400;  // 25 ms
  int hop_length = 160;  // 10 ms
  int n_fft = 400;
  int mel_bins = 16;     // C
  int mel_frames = 300;  // L
  double max_audio_seconds = 0.0;  // 0 disables the long-sample filter

  // Speech encoder.
  int encoder_dim = 64;  // D_w
  int encoder_layers = 2;
  int encoder_heads = 4;
  int encoder_ffn = 256;

  // Speech adapter.
  int num_queries = 60;  // K
  int query_dim = 32;    // D_q
  int qformer_layers = 2;
  int qformer_heads = 4;
  int qformer_ffn = 128;
  int pool_stride = 2;   // S
  PoolMode pool_mode = PoolMode::kAverage;
  int mlp_hidden = 64;

  // Language model.
  int llm_dim = 64;  // D_llm
  int llm_layers = 2;
  int llm_heads = 4;
  int llm_kv_heads = 2;
  int llm_head_dim = 16;
  int llm_ffn = 128;
  int vocab_size = 512;
  int max_target_len = 40;
  double rope_base = 10000.0;

  std::uint64_t seed = 1234;

  // Derived quantities.
  int encoder_len() const { return mel_frames / 2; }  // L'
  int prompt_len() const { return num_queries / pool_stride; }  // K/S
  double window_seconds() const {
    return static_cast<double>(mel_frames) * hop_length / sample_rate;
  }

  // Throws ValidationError when an invariant is broken.
  void validate() const;
};

// Desk-scale profile: every width reduced, K/S kept at 30.
PipelineConfig toy_profile();
// Full-size geometry (C=128, L=3000, D_w=1280, K=150, D_q=768, S=5) with
// a 9B decoder's width and depth for parameter accounting.
PipelineConfig large_profile();

struct LoraConfig {
  bool enabled = true;
  int rank = 16;
  double alpha = 32.0;
  // Subset of {"q","k","v","o"}.
  std::vector<std::string> targets = {"q", "v"};
  double init_std = 0.0;  // 0: 1/sqrt(fan_in)
  double scale() const { return alpha / rank; }
};

struct TrainerConfig {
  double learning_rate = 5e-5;
  int warmup_steps = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // <= 0 disables
  int batch_size = 8;
  std::uint64_t seed = 7;
};

// Step budgets per curriculum segment (wall-clock epochs are not meaningful
// at desk scale).
struct ScheduleConfig {
  int llm_pretrain_steps = 1500;
  int llm_pretrain_batch = 16;
  double llm_pretrain_lr = 3e-3;
  double llm_pretrain_slot_noise = 0.0;  // Gaussian std on audio-slot embeddings, relative to the embedding scale
  int phase1_steps_per_stage = 250;
  int phase2_steps = 400;
  int phase3_smt_steps = 150;
  int phase3_srt_steps = 300;
  int phase4_steps = 300;
  int phase2_cap = 10000;  // per language
  int phase4_cap = 100;    // per direction
  std::vector<int> expansion_stages = {2, 28, 44, 70};
};

struct SyntheticSpec {
  std::vector<std::string> languages;
  int utterances_per_lang = 120;
  int directions_per_utterance = 2;
  std::uint64_t seed = 1;
  int words_per_lang = 8;
  int min_words = 2;
  int max_words = 4;
  int token_ms = 400;
  double noise_level = 0.01;
};

// Everything a CLI invocation can configure.
struct RunConfig {
  std::string profile = "toy";
  PipelineConfig pipeline;
  LoraConfig lora;
  TrainerConfig trainer;
  ScheduleConfig schedule;
  SyntheticSpec synthetic;
  std::string language_table;  // empty: built-in registry
  double test_fraction = 0.2;
  int eval_batch = 8;
};

RunConfig default_run_config(const std::string& profile = "toy");

// Reads a JSON config document. Keys absent from the document keep their
// profile defaults; unknown keys are rejected. Environment variables named
// MST_<KEY> (upper-cased, e.g. MST_LEARNING_RATE) override file values.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& doc, bool apply_env = true);
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_from_json(const nlohmann::json& doc);

}  // namespace mst
