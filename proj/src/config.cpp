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

#include "mst/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "mst/error.hpp"

namespace mst {

namespace {

constexpr int kReservedTokens = 4;  // pad, eos, unk, word boundary
constexpr int kRegistryTags = 70;

void require_positive(int v, const char* name) {
  if (v <= 0) throw ValidationError(std::string("config field ") + name + " must be > 0");
}

}  // namespace

void PipelineConfig::validate() const {
  const std::pair<int, const char*> positives[] = {
      {sample_rate, "sample_rate"},   {win_length, "win_length"},
      {hop_length, "hop_length"},     {n_fft, "n_fft"},
      {mel_bins, "mel_bins"},         {mel_frames, "mel_frames"},
      {encoder_dim, "encoder_dim"},   {encoder_layers, "encoder_layers"},
      {encoder_heads, "encoder_heads"}, {encoder_ffn, "encoder_ffn"},
      {num_queries, "num_queries"},   {query_dim, "query_dim"},
      {qformer_layers, "qformer_layers"}, {qformer_heads, "qformer_heads"},
      {qformer_ffn, "qformer_ffn"},   {pool_stride, "pool_stride"},
      {mlp_hidden, "mlp_hidden"},     {llm_dim, "llm_dim"},
      {llm_layers, "llm_layers"},     {llm_heads, "llm_heads"},
      {llm_kv_heads, "llm_kv_heads"}, {llm_head_dim, "llm_head_dim"},
      {llm_ffn, "llm_ffn"},           {vocab_size, "vocab_size"},
      {max_target_len, "max_target_len"},
  };
  for (const auto& [v, name] : positives) require_positive(v, name);
  if (num_queries % pool_stride != 0) {
    throw ValidationError("num_queries (K=" + std::to_string(num_queries) +
                          ") must be divisible by pool_stride (S=" + std::to_string(pool_stride) + ")");
  }
  if (mel_frames % 2 != 0) throw ValidationError("mel_frames must be even (encoder halves it)");
  if (n_fft < win_length) throw ValidationError("n_fft must be >= win_length");
  if (encoder_dim % encoder_heads != 0) throw ValidationError("encoder_dim must divide by encoder_heads");
  if (query_dim % qformer_heads != 0) throw ValidationError("query_dim must divide by qformer_heads");
  if (llm_heads % llm_kv_heads != 0) throw ValidationError("llm_heads must divide by llm_kv_heads");
  if (llm_head_dim % 2 != 0) throw ValidationError("llm_head_dim must be even for rotary positions");
  if (vocab_size <= kRegistryTags + kReservedTokens) {
    throw ValidationError("vocab_size must exceed the language tags plus reserved tokens");
  }
  if (max_audio_seconds < 0) throw ValidationError("max_audio_seconds must be >= 0");
}

PipelineConfig toy_profile() { return PipelineConfig{}; }

PipelineConfig large_profile() {
  PipelineConfig c;
  c.mel_bins = 128;
  c.mel_frames = 3000;
  c.encoder_dim = 1280;
  c.encoder_layers = 32;
  c.encoder_heads = 20;
  c.encoder_ffn = 5120;
  c.num_queries = 150;
  c.query_dim = 768;
  c.qformer_layers = 2;
  c.qformer_heads = 12;
  c.qformer_ffn = 3072;
  c.pool_stride = 5;
  // 9B decoder geometry.
  c.llm_dim = 3584;
  c.mlp_hidden = 3584;
  c.llm_layers = 42;
  c.llm_heads = 16;
  c.llm_kv_heads = 8;
  c.llm_head_dim = 256;
  c.llm_ffn = 14336;
  c.vocab_size = 256000;
  c.max_target_len = 256;
  return c;
}

RunConfig default_run_config(const std::string& profile) {
  RunConfig cfg;
  cfg.profile = profile;
  if (profile == "toy") {
    cfg.pipeline = toy_profile();
    cfg.trainer.learning_rate = 3e-3;
    cfg.trainer.warmup_steps = 20;
    cfg.trainer.weight_decay = 0.0;
    cfg.schedule.llm_pretrain_slot_noise = 1.0;
    cfg.lora.rank = 4;
    cfg.lora.alpha = 8.0;
    cfg.synthetic.languages = {"eng", "cmn", "deu", "fra", "jpn", "swh"};
  } else if (profile == "large") {
    cfg.pipeline = large_profile();
  } else {
    throw ValidationError("unknown profile " + profile + " (expected toy or large)");
  }
  return cfg;
}

namespace {

using nlohmann::json;

// One flat config key bound to a field of RunConfig.
struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
Field bind(T RunConfig::*group, auto member) {
  return Field{
      [group, member](const RunConfig& c) { return json((c.*group).*member); },
      [group, member](RunConfig& c, const json& v) {
        using V = std::remove_reference_t<decltype((c.*group).*member)>;
        (c.*group).*member = v.get<V>();
      }};
}

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    using P = PipelineConfig;
    auto& pc = t;
    pc["sample_rate"] = bind(&RunConfig::pipeline, &P::sample_rate);
    pc["win_length"] = bind(&RunConfig::pipeline, &P::win_length);
    pc["hop_length"] = bind(&RunConfig::pipeline, &P::hop_length);
    pc["n_fft"] = bind(&RunConfig::pipeline, &P::n_fft);
    pc["mel_bins"] = bind(&RunConfig::pipeline, &P::mel_bins);
    pc["mel_frames"] = bind(&RunConfig::pipeline, &P::mel_frames);
    pc["max_audio_seconds"] = bind(&RunConfig::pipeline, &P::max_audio_seconds);
    pc["encoder_dim"] = bind(&RunConfig::pipeline, &P::encoder_dim);
    pc["encoder_layers"] = bind(&RunConfig::pipeline, &P::encoder_layers);
    pc["encoder_heads"] = bind(&RunConfig::pipeline, &P::encoder_heads);
    pc["encoder_ffn"] = bind(&RunConfig::pipeline, &P::encoder_ffn);
    pc["num_queries"] = bind(&RunConfig::pipeline, &P::num_queries);
    pc["query_dim"] = bind(&RunConfig::pipeline, &P::query_dim);
    pc["qformer_layers"] = bind(&RunConfig::pipeline, &P::qformer_layers);
    pc["qformer_heads"] = bind(&RunConfig::pipeline, &P::qformer_heads);
    pc["qformer_ffn"] = bind(&RunConfig::pipeline, &P::qformer_ffn);
    pc["pool_stride"] = bind(&RunConfig::pipeline, &P::pool_stride);
    pc["mlp_hidden"] = bind(&RunConfig::pipeline, &P::mlp_hidden);
    pc["llm_dim"] = bind(&RunConfig::pipeline, &P::llm_dim);
    pc["llm_layers"] = bind(&RunConfig::pipeline, &P::llm_layers);
    pc["llm_heads"] = bind(&RunConfig::pipeline, &P::llm_heads);
    pc["llm_kv_heads"] = bind(&RunConfig::pipeline, &P::llm_kv_heads);
    pc["llm_head_dim"] = bind(&RunConfig::pipeline, &P::llm_head_dim);
    pc["llm_ffn"] = bind(&RunConfig::pipeline, &P::llm_ffn);
    pc["vocab_size"] = bind(&RunConfig::pipeline, &P::vocab_size);
    pc["max_target_len"] = bind(&RunConfig::pipeline, &P::max_target_len);
    pc["rope_base"] = bind(&RunConfig::pipeline, &P::rope_base);
    pc["seed"] = bind(&RunConfig::pipeline, &P::seed);
    t["pool_mode"] = Field{
        [](const RunConfig& c) { return json(c.pipeline.pool_mode == PoolMode::kMax ? "max" : "average"); },
        [](RunConfig& c, const json& v) {
          const auto s = v.get<std::string>();
          if (s == "average") c.pipeline.pool_mode = PoolMode::kAverage;
          else if (s == "max") c.pipeline.pool_mode = PoolMode::kMax;
          else throw ValidationError("pool_mode must be average or max");
        }};

    t["lora"] = bind(&RunConfig::lora, &LoraConfig::enabled);
    t["lora_rank"] = bind(&RunConfig::lora, &LoraConfig::rank);
    t["lora_alpha"] = bind(&RunConfig::lora, &LoraConfig::alpha);
    t["lora_targets"] = bind(&RunConfig::lora, &LoraConfig::targets);
    t["lora_init_std"] = bind(&RunConfig::lora, &LoraConfig::init_std);

    t["learning_rate"] = bind(&RunConfig::trainer, &TrainerConfig::learning_rate);
    t["warmup_steps"] = bind(&RunConfig::trainer, &TrainerConfig::warmup_steps);
    t["beta1"] = bind(&RunConfig::trainer, &TrainerConfig::beta1);
    t["beta2"] = bind(&RunConfig::trainer, &TrainerConfig::beta2);
    t["adam_eps"] = bind(&RunConfig::trainer, &TrainerConfig::eps);
    t["weight_decay"] = bind(&RunConfig::trainer, &TrainerConfig::weight_decay);
    t["grad_clip"] = bind(&RunConfig::trainer, &TrainerConfig::grad_clip);
    t["batch_size"] = bind(&RunConfig::trainer, &TrainerConfig::batch_size);
    t["trainer_seed"] = bind(&RunConfig::trainer, &TrainerConfig::seed);

    using S = ScheduleConfig;
    t["llm_pretrain_steps"] = bind(&RunConfig::schedule, &S::llm_pretrain_steps);
    t["llm_pretrain_batch"] = bind(&RunConfig::schedule, &S::llm_pretrain_batch);
    t["llm_pretrain_lr"] = bind(&RunConfig::schedule, &S::llm_pretrain_lr);
    t["llm_pretrain_slot_noise"] = bind(&RunConfig::schedule, &S::llm_pretrain_slot_noise);
    t["phase1_steps_per_stage"] = bind(&RunConfig::schedule, &S::phase1_steps_per_stage);
    t["phase2_steps"] = bind(&RunConfig::schedule, &S::phase2_steps);
    t["phase3_smt_steps"] = bind(&RunConfig::schedule, &S::phase3_smt_steps);
    t["phase3_srt_steps"] = bind(&RunConfig::schedule, &S::phase3_srt_steps);
    t["phase4_steps"] = bind(&RunConfig::schedule, &S::phase4_steps);
    t["phase2_cap"] = bind(&RunConfig::schedule, &S::phase2_cap);
    t["phase4_cap"] = bind(&RunConfig::schedule, &S::phase4_cap);
    t["expansion_stages"] = bind(&RunConfig::schedule, &S::expansion_stages);

    using Y = SyntheticSpec;
    t["languages"] = bind(&RunConfig::synthetic, &Y::languages);
    t["utterances_per_lang"] = bind(&RunConfig::synthetic, &Y::utterances_per_lang);
    t["directions_per_utterance"] = bind(&RunConfig::synthetic, &Y::directions_per_utterance);
    t["corpus_seed"] = bind(&RunConfig::synthetic, &Y::seed);
    t["words_per_lang"] = bind(&RunConfig::synthetic, &Y::words_per_lang);
    t["min_words"] = bind(&RunConfig::synthetic, &Y::min_words);
    t["max_words"] = bind(&RunConfig::synthetic, &Y::max_words);
    t["token_ms"] = bind(&RunConfig::synthetic, &Y::token_ms);
    t["noise_level"] = bind(&RunConfig::synthetic, &Y::noise_level);

    t["language_table"] = Field{[](const RunConfig& c) { return json(c.language_table); },
                                [](RunConfig& c, const json& v) { c.language_table = v.get<std::string>(); }};
    t["test_fraction"] = Field{[](const RunConfig& c) { return json(c.test_fraction); },
                               [](RunConfig& c, const json& v) { c.test_fraction = v.get<double>(); }};
    t["eval_batch"] = Field{[](const RunConfig& c) { return json(c.eval_batch); },
                            [](RunConfig& c, const json& v) { c.eval_batch = v.get<int>(); }};
    return t;
  }();
  return table;
}

std::string env_name(const std::string& key) {
  std::string out = "MST_";
  for (char ch : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

// Env values are parsed as JSON first so numbers, booleans and lists work;
// anything that fails to parse is taken as a plain string.
json parse_env_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
    return json(raw);
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& doc, bool apply_env) {
  if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
  std::string profile = doc.value("profile", std::string("toy"));
  if (apply_env) {
    if (const char* p = std::getenv("MST_PROFILE")) profile = p;
  }
  RunConfig cfg = default_run_config(profile);
  const auto& table = field_table();
  for (const auto& [key, value] : doc.items()) {
    if (key == "profile") continue;
    auto it = table.find(key);
    if (it == table.end()) throw ValidationError("unknown config key " + key);
    try {
      it->second.set(cfg, value);
    } catch (const json::exception& e) {
      throw ValidationError("config key " + key + ": " + e.what());
    }
  }
  if (apply_env) {
    for (const auto& [key, field] : table) {
      if (const char* raw = std::getenv(env_name(key).c_str())) {
        try {
          field.set(cfg, parse_env_value(raw));
        } catch (const json::exception& e) {
          throw ValidationError("environment override " + env_name(key) + ": " + e.what());
        }
      }
    }
  }
  cfg.pipeline.validate();
  if (cfg.lora.enabled && cfg.lora.rank <= 0) throw ValidationError("lora_rank must be > 0");
  if (cfg.trainer.batch_size <= 0) throw ValidationError("batch_size must be > 0");
  if (cfg.trainer.learning_rate <= 0) throw ValidationError("learning_rate must be > 0");
  if (cfg.trainer.warmup_steps < 0) throw ValidationError("warmup_steps must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  return run_config_from_json(doc);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json doc;
  doc["profile"] = cfg.profile;
  for (const auto& [key, field] : field_table()) doc[key] = field.get(cfg);
  return doc;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  RunConfig rc;
  rc.pipeline = cfg;
  nlohmann::json full = to_json(rc);
  nlohmann::json out;
  static const char* kPipelineKeys[] = {
      "sample_rate", "win_length", "hop_length", "n_fft", "mel_bins", "mel_frames",
      "max_audio_seconds", "encoder_dim", "encoder_layers", "encoder_heads", "encoder_ffn",
      "num_queries", "query_dim", "qformer_layers", "qformer_heads", "qformer_ffn",
      "pool_stride", "pool_mode", "mlp_hidden", "llm_dim", "llm_layers", "llm_heads",
      "llm_kv_heads", "llm_head_dim", "llm_ffn", "vocab_size", "max_target_len", "rope_base", "seed"};
  for (const char* k : kPipelineKeys) out[k] = full[k];
  return out;
}

PipelineConfig pipeline_from_json(const nlohmann::json& doc) {
  nlohmann::json wrapped = doc;
  wrapped["profile"] = "toy";
  PipelineConfig cfg = run_config_from_json(wrapped, /*apply_env=*/false).pipeline;
  return cfg;
}

}  // namespace mst
