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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mst/adapter.hpp"
#include "mst/config.hpp"
#include "mst/encoder.hpp"
#include "mst/llm.hpp"
#include "mst/tasks.hpp"
#include "mst/tokenizer.hpp"
#include "mst/trainer.hpp"

namespace mst {

// Frozen encoder + trainable adapter + frozen LLM with optional LoRA.
struct SpeechTranslationModel {
  PipelineConfig cfg;
  LoraConfig lora;
  Tokenizer tokenizer;
  SpeechEncoder encoder;
  SpeechAdapter adapter;
  LanguageModel llm;

  // Component parameter lists in a fixed order (used for checkpoints and
  // hashing).
  ParamList encoder_parameters() { return encoder.weights().parameters(); }
  ParamList adapter_parameters() { return adapter.weights().parameters(); }
  ParamList llm_parameters() { return llm.weights().base_parameters(); }
  ParamList lora_parameters() { return llm.weights().lora_parameters(); }
  ParamList all_parameters();
  ParamList trainable_parameters();

  // Encoder and base LLM frozen; adapter trainable; LoRA trainable when
  // enabled.
  void apply_freeze();
};

// Randomly initialized model; call apply_freeze before training phases.
SpeechTranslationModel init_model(const PipelineConfig& cfg, const LoraConfig& lora, Tokenizer tokenizer);

// Closed-form budget ordered as Encoder, Q-Former, Pooling, MLP, LLM,
// LLM LoRA. Trainable counts follow the freeze rule.
ParamBudget pipeline_param_budget(const PipelineConfig& cfg, const LoraConfig& lora);

// Encoder outputs are a pure function of the audio, so they are computed
// once per record id.
class EncoderCache {
 public:
  explicit EncoderCache(int words_per_lang) : words_per_lang_(words_per_lang) {}
  const Mat& states(SpeechTranslationModel& model, const std::string& key, const AudioRef& audio);
  std::size_t size() const { return cache_.size(); }

 private:
  int words_per_lang_;
  std::map<std::string, Mat> cache_;
};

// Audio prompt Z_mlp [K/S x D_llm] for encoder states.
Var audio_prompt(Tape& t, SpeechTranslationModel& model, const Mat& states);
Mat audio_prompt(SpeechTranslationModel& model, const Mat& states);

// Teacher-forced loss of one sample given its audio prompt; EOS is appended
// to the targets.
LmOutput sample_forward(Tape& t, SpeechTranslationModel& model, Var audio, const InstructionSample& sample);

// Trains `model.trainable_parameters()` on `samples`.
std::vector<StepRecord> train_samples(SpeechTranslationModel& model, EncoderCache& cache,
                                      const std::vector<InstructionSample>& samples, int steps,
                                      const TrainerConfig& cfg, const std::string& phase,
                                      const std::function<void(const StepRecord&)>& on_step = {});

// Greedy outputs (ids without EOS) for each sample's audio + instruction.
std::vector<std::vector<int>> generate_outputs(SpeechTranslationModel& model, EncoderCache& cache,
                                               const std::vector<InstructionSample>& samples, int batch,
                                               int max_new_tokens = 0);

// Stand-in for a pretrained LLM: the text-only pass before the LLM is
// frozen. The audio slot holds the transcript's word embeddings laid out on
// the prompt's time grid, so the LLM learns to read word identity from the
// slot rows.
std::vector<int> pseudo_audio_ids(const SpeechTranslationModel& model, const ManifestRecord& record);
std::vector<StepRecord> pretrain_llm(SpeechTranslationModel& model, const std::vector<ManifestRecord>& records,
                                     const ScheduleConfig& schedule, const TrainerConfig& trainer,
                                     const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace mst
