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

#include "mst/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mst/audio.hpp"
#include "mst/error.hpp"
#include "mst/synthetic.hpp"

namespace mst {

ParamList SpeechTranslationModel::all_parameters() {
  ParamList out = encoder_parameters();
  for (auto* p : adapter_parameters()) out.push_back(p);
  for (auto* p : llm_parameters()) out.push_back(p);
  for (auto* p : lora_parameters()) out.push_back(p);
  return out;
}

ParamList SpeechTranslationModel::trainable_parameters() {
  ParamList out;
  for (auto* p : all_parameters())
    if (p->trainable()) out.push_back(p);
  return out;
}

void SpeechTranslationModel::apply_freeze() {
  freeze(encoder.weights());
  set_trainable(llm_parameters(), false);
  set_trainable(adapter_parameters(), true);
  set_trainable(lora_parameters(), lora.enabled);
}

SpeechTranslationModel init_model(const PipelineConfig& cfg, const LoraConfig& lora, Tokenizer tokenizer) {
  cfg.validate();
  if (tokenizer.size() > cfg.vocab_size) {
    throw ValidationError("tokenizer has " + std::to_string(tokenizer.size()) + " pieces but vocab_size is " +
                          std::to_string(cfg.vocab_size));
  }
  SpeechTranslationModel m;
  m.cfg = cfg;
  m.lora = lora;
  m.tokenizer = std::move(tokenizer);
  m.encoder = SpeechEncoder(cfg, init_encoder_weights(cfg, cfg.seed));
  m.adapter = SpeechAdapter(cfg, init_adapter_weights(cfg, cfg.seed));
  m.llm = LanguageModel(cfg, lora, init_llm_weights(cfg, lora, cfg.seed));
  m.apply_freeze();
  return m;
}

ParamBudget pipeline_param_budget(const PipelineConfig& cfg, const LoraConfig& lora) {
  ParamBudget b;
  const std::int64_t enc = SpeechEncoder::param_count(cfg);
  b.entries.push_back({"Encoder", enc, 0, "frozen speech encoder"});
  for (const auto& e : adapter_param_count(cfg).entries) b.entries.push_back(e);
  for (const auto& e : llm_param_count(cfg, lora).entries) b.entries.push_back(e);
  return b;
}

const Mat& EncoderCache::states(SpeechTranslationModel& model, const std::string& key, const AudioRef& audio) {
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const AudioClip clip = load_audio(audio, words_per_lang_);
  const MelSpectrogram mel = mel_spectrogram(clip, model.cfg);
  return cache_.emplace(key, model.encoder.encode_one(mel.values)).first->second;
}

Var audio_prompt(Tape& t, SpeechTranslationModel& model, const Mat& states) {
  return model.adapter.forward(t, t.constant(states)).aligned;
}

Mat audio_prompt(SpeechTranslationModel& model, const Mat& states) {
  Tape t(false);
  return audio_prompt(t, model, states).value();
}

namespace {

std::vector<int> with_eos(const std::vector<int>& ids) {
  std::vector<int> out = ids;
  out.push_back(Tokenizer::kEos);
  return out;
}

}  // namespace

LmOutput sample_forward(Tape& t, SpeechTranslationModel& model, Var audio, const InstructionSample& sample) {
  Var prefix = sample.instruction_ids.empty()
                   ? audio
                   : ag::concat_rows({audio, model.llm.embed(t, sample.instruction_ids)});
  std::vector<int> mask = sample.loss_mask;
  mask.push_back(1);
  return model.llm.forward(t, prefix, with_eos(sample.target_ids), mask);
}

std::vector<StepRecord> train_samples(SpeechTranslationModel& model, EncoderCache& cache,
                                      const std::vector<InstructionSample>& samples, int steps,
                                      const TrainerConfig& cfg, const std::string& phase,
                                      const std::function<void(const StepRecord&)>& on_step) {
  // Warm the cache first so the loop only runs adapter + LLM.
  for (const auto& s : samples) cache.states(model, s.record_id, s.audio);
  auto item_loss = [&](std::size_t i, double weight) {
    const auto& s = samples[i];
    Tape t;
    Var audio = audio_prompt(t, model, cache.states(model, s.record_id, s.audio));
    LmOutput out = sample_forward(t, model, audio, s);
    t.backward(out.loss, weight);
    return out.loss.value()(0, 0);
  };
  return train_loop(model.trainable_parameters(), samples.size(), steps, cfg, phase, item_loss, on_step);
}

std::vector<std::vector<int>> generate_outputs(SpeechTranslationModel& model, EncoderCache& cache,
                                               const std::vector<InstructionSample>& samples, int batch,
                                               int max_new_tokens) {
  const GenerationEngine engine(model.llm);
  StopRule stop;
  stop.eos_id = Tokenizer::kEos;
  stop.max_new_tokens = max_new_tokens > 0 ? max_new_tokens : model.cfg.max_target_len;
  batch = std::max(1, batch);
  std::vector<std::vector<int>> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch) {
    const std::size_t end = std::min(samples.size(), start + batch);
    std::vector<Mat> prefixes;
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = samples[i];
      const Mat audio = audio_prompt(model, cache.states(model, s.record_id, s.audio));
      prefixes.push_back(fuse(audio, model.llm.embed(s.instruction_ids)).values);
    }
    for (auto& ids : engine.generate_batch(prefixes, stop)) out.push_back(std::move(ids));
  }
  return out;
}

std::vector<int> pseudo_audio_ids(const SpeechTranslationModel& model, const ManifestRecord& record) {
  const int rows = model.cfg.prompt_len();
  std::vector<int> ids(rows, Tokenizer::kPad);
  std::vector<std::string> words;
  int token_ms = 400;
  if (record.audio.synthetic) {
    words = record.audio.synthetic->words;
    token_ms = record.audio.synthetic->token_ms;
  } else {
    std::istringstream in(record.transcript);
    for (std::string w; in >> w;) words.push_back(w);
  }
  const double row_ms = model.cfg.window_seconds() * 1000.0 / rows;
  const int per_word = std::max(1, static_cast<int>(std::lround(token_ms / row_ms)));
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto id = model.tokenizer.word_id(words[w]);
    for (int r = 0; r < per_word; ++r) {
      const std::size_t row = w * per_word + r;
      if (row < ids.size()) ids[row] = id ? *id : Tokenizer::kUnk;
    }
  }
  return ids;
}

std::vector<StepRecord> pretrain_llm(SpeechTranslationModel& model, const std::vector<ManifestRecord>& records,
                                     const ScheduleConfig& schedule, const TrainerConfig& trainer,
                                     const std::function<void(const StepRecord&)>& on_step) {
  std::map<std::string, const ManifestRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<InstructionSample> samples;
  std::vector<std::vector<int>> slots;
  for (TaskKind task : {TaskKind::kAsr, TaskKind::kSmt, TaskKind::kSrt}) {
    for (auto& s : build_samples(records, task, model.tokenizer)) {
      slots.push_back(pseudo_audio_ids(model, *by_id.at(s.record_id)));
      samples.push_back(std::move(s));
    }
  }
  set_trainable(model.encoder_parameters(), false);
  set_trainable(model.adapter_parameters(), false);
  set_trainable(model.lora_parameters(), false);
  set_trainable(model.llm_parameters(), true);
  TrainerConfig cfg = trainer;
  cfg.learning_rate = schedule.llm_pretrain_lr;
  cfg.batch_size = schedule.llm_pretrain_batch;
  std::mt19937_64 rng(trainer.seed ^ 0x5107ULL);
  const double noise_std = schedule.llm_pretrain_slot_noise / std::sqrt(static_cast<double>(model.cfg.llm_dim));
  auto item_loss = [&](std::size_t i, double weight) {
    Tape t;
    Var audio = model.llm.embed(t, slots[i]);
    if (noise_std > 0.0) {
      std::normal_distribution<double> nd(0.0, noise_std);
      Mat n(audio.rows(), audio.cols());
      for (Eigen::Index k = 0; k < n.size(); ++k) n.data()[k] = nd(rng);
      audio = ag::add_constant(audio, n);
    }
    LmOutput out = sample_forward(t, model, audio, samples[i]);
    t.backward(out.loss, weight);
    return out.loss.value()(0, 0);
  };
  auto log = train_loop(model.llm_parameters(), samples.size(), schedule.llm_pretrain_steps, cfg, "llm-pretrain",
                        item_loss, on_step);
  model.apply_freeze();
  return log;
}

}  // namespace mst
