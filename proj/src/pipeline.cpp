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

#include "mst/pipeline.hpp"

#include "mst/balance.hpp"
#include "mst/error.hpp"
#include "mst/synthetic.hpp"

namespace mst {

LanguageRegistry registry_for(const RunConfig& cfg) {
  return cfg.language_table.empty() ? LanguageRegistry::builtin() : LanguageRegistry::load(cfg.language_table);
}

Corpus make_corpus(const RunConfig& cfg, const LanguageRegistry& registry) {
  Corpus c;
  c.all = generate_synthetic_corpus(cfg.synthetic, registry);
  auto split = split_corpus(c.all, cfg.test_fraction, cfg.synthetic.seed);
  c.train = std::move(split.train);
  c.test = std::move(split.test);
  return c;
}

std::vector<std::string> languages_of(const std::vector<ManifestRecord>& records, const LanguageRegistry& registry) {
  const auto counts = count_per_language(records);
  std::vector<std::string> out;
  for (const auto& code : registry.codes())
    if (counts.count(code)) out.push_back(code);
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg, const LanguageRegistry& registry,
                                const SpeechTranslationModel& m0, const Corpus& corpus, const Ablation& ablation,
                                EncoderCache& cache, const std::string& out_dir, bool force,
                                const StepCallback& on_step) {
  ExperimentResult res;
  res.variant = ablation.tag();
  const auto langs = languages_of(corpus.train, registry);
  res.plan = apply_ablation(default_plan(cfg, registry, langs, count_per_language(corpus.train)), ablation);
  SpeechTranslationModel start = m0;
  apply_ablation(start, ablation);
  res.phases = run_curriculum(res.plan, start, corpus.train, cfg, cache, out_dir, force, on_step);
  SpeechTranslationModel& final_model = res.phases.empty() ? start : res.phases.back().model;
  res.eval = evaluate_matrix(final_model, cache, corpus.test, {}, cfg.eval_batch);
  return res;
}

std::vector<std::pair<Mat, Mat>> bench_prompts(SpeechTranslationModel& model, EncoderCache& cache,
                                               const std::vector<ManifestRecord>& records, int n) {
  std::vector<InstructionSample> pool;
  for (const auto& r : records) {
    if (r.translations.empty()) continue;
    pool.push_back(build_sample(r, TaskKind::kSrt, r.translations.begin()->first, model.tokenizer));
  }
  if (pool.empty()) throw ValidationError("bench needs records with at least one translation");
  std::vector<std::pair<Mat, Mat>> out;
  for (int i = 0; i < n; ++i) {
    const auto& s = pool[static_cast<std::size_t>(i) % pool.size()];
    out.emplace_back(audio_prompt(model, cache.states(model, s.record_id, s.audio)),
                     model.llm.embed(s.instruction_ids).values);
  }
  return out;
}

}  // namespace mst
