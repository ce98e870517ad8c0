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

#include "mst/curriculum.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "mst/balance.hpp"
#include "mst/error.hpp"

namespace mst {

std::vector<LanguageSet> expansion_schedule(const LanguageRegistry& registry, const std::vector<int>& stages,
                                            const std::map<std::string, int>& data_counts) {
  const int n = static_cast<int>(registry.size());
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i] <= 0 || stages[i] > n) {
      throw ValidationError("expansion stage size " + std::to_string(stages[i]) + " outside 1.." + std::to_string(n));
    }
    if (i > 0 && stages[i] <= stages[i - 1]) throw ValidationError("expansion stage sizes must strictly increase");
  }
  std::vector<std::string> order;
  std::set<std::string> seen;
  auto take = [&](const std::string& code) {
    if (registry.contains(code) && seen.insert(code).second) order.push_back(code);
  };
  take("eng");
  take("cmn");
  for (const auto& code : registry.small_codes()) take(code);
  std::vector<std::string> rest;
  for (const auto& code : registry.codes())
    if (!seen.count(code)) rest.push_back(code);
  auto count = [&](const std::string& c) {
    auto it = data_counts.find(c);
    return it == data_counts.end() ? 0 : it->second;
  };
  std::stable_sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) { return count(a) > count(b); });
  for (const auto& code : rest) take(code);

  std::vector<LanguageSet> out;
  for (int size : stages) {
    LanguageSet set(order.begin(), order.begin() + size);
    // Present each stage in registry order.
    std::sort(set.begin(), set.end(), [&](const auto& a, const auto& b) {
      return registry.require(a) < registry.require(b);
    });
    out.push_back(std::move(set));
  }
  check_nested(out);
  return out;
}

void check_nested(const std::vector<LanguageSet>& sets) {
  for (std::size_t i = 1; i < sets.size(); ++i) {
    const std::set<std::string> next(sets[i].begin(), sets[i].end());
    for (const auto& code : sets[i - 1]) {
      if (!next.count(code)) {
        throw ValidationError("expansion stage " + std::to_string(i + 1) + " drops language " + code +
                              " from the previous stage");
      }
    }
  }
}

TaskKind phase_task(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kAsrExpansion:
    case PhaseKind::kAsrBalanced: return TaskKind::kAsr;
    case PhaseKind::kSmt: return TaskKind::kSmt;
    case PhaseKind::kSrt:
    case PhaseKind::kSrtBalanced: return TaskKind::kSrt;
  }
  return TaskKind::kAsr;
}

const char* phase_kind_name(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::kAsrExpansion: return "asr-expansion";
    case PhaseKind::kAsrBalanced: return "asr-balanced";
    case PhaseKind::kSmt: return "smt";
    case PhaseKind::kSrt: return "srt";
    case PhaseKind::kSrtBalanced: return "srt-balanced";
  }
  return "?";
}

std::string Ablation::tag() const {
  std::string t;
  auto add = [&](const char* s) { t += (t.empty() ? "" : "+") + std::string(s); };
  if (skip_asr) add("skip_asr");
  if (skip_smt_srt) add("skip_smt_srt");
  if (no_lora) add("no_lora");
  return t.empty() ? "full" : t;
}

CurriculumPlan default_plan(const RunConfig& cfg, const LanguageRegistry& registry, const LanguageSet& languages,
                            const std::map<std::string, int>& data_counts) {
  for (const auto& l : languages) registry.require(l);
  std::vector<int> stages;
  for (int s : cfg.schedule.expansion_stages) stages.push_back(std::min(s, static_cast<int>(registry.size())));
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  const std::set<std::string> wanted(languages.begin(), languages.end());

  std::vector<LanguageSet> sets;
  for (const auto& stage : expansion_schedule(registry, stages, data_counts)) {
    LanguageSet kept;
    for (const auto& code : stage)
      if (wanted.count(code)) kept.push_back(code);
    if (kept.empty() || (!sets.empty() && sets.back() == kept)) continue;
    sets.push_back(std::move(kept));
  }
  LanguageSet all;
  for (const auto& code : registry.codes())
    if (wanted.count(code)) all.push_back(code);

  const auto& s = cfg.schedule;
  CurriculumPlan plan;
  plan.phases.push_back({"1", PhaseKind::kAsrExpansion, sets, s.phase1_steps_per_stage, 0, CapUnit::kNone, "init"});
  plan.phases.push_back({"2", PhaseKind::kAsrBalanced, {all}, s.phase2_steps, s.phase2_cap, CapUnit::kPerLanguage, "1"});
  plan.phases.push_back({"3-smt", PhaseKind::kSmt, {all}, s.phase3_smt_steps, 0, CapUnit::kNone, "2"});
  plan.phases.push_back({"3-srt", PhaseKind::kSrt, {all}, s.phase3_srt_steps, 0, CapUnit::kNone, "3-smt"});
  plan.phases.push_back({"4", PhaseKind::kSrtBalanced, {all}, s.phase4_steps, s.phase4_cap, CapUnit::kPerDirection, "3-srt"});
  return plan;
}

CurriculumPlan apply_ablation(CurriculumPlan plan, const Ablation& ablation) {
  if (ablation.skip_asr && ablation.skip_smt_srt) {
    throw ValidationError("skip_asr and skip_smt_srt are mutually exclusive");
  }
  std::vector<PhaseSpec> kept;
  for (auto& p : plan.phases) {
    const bool asr = p.kind == PhaseKind::kAsrExpansion || p.kind == PhaseKind::kAsrBalanced;
    const bool mid = p.kind == PhaseKind::kSmt || p.kind == PhaseKind::kSrt;
    if ((ablation.skip_asr && asr) || (ablation.skip_smt_srt && mid)) continue;
    p.source = kept.empty() ? "init" : kept.back().name;
    kept.push_back(std::move(p));
  }
  plan.phases = std::move(kept);
  plan.variant = ablation.tag();
  return plan;
}

void apply_ablation(SpeechTranslationModel& model, const Ablation& ablation) {
  if (!ablation.no_lora) return;
  // Dropping LoRA removes the pairs entirely; B is zero before training so
  // the base model output is unchanged.
  model.lora.enabled = false;
  for (auto& b : model.llm.weights().blocks)
    for (auto& pair : b.lora) pair.reset();
  model.llm = LanguageModel(model.cfg, model.lora, std::move(model.llm.weights()));
  model.apply_freeze();
}

const PhaseSpec& find_phase(const CurriculumPlan& plan, const std::string& name) {
  for (const auto& p : plan.phases)
    if (p.name == name) return p;
  throw ValidationError("plan has no phase '" + name + "'");
}

namespace {

std::vector<ManifestRecord> records_in(const std::vector<ManifestRecord>& records, const LanguageSet& langs) {
  const std::set<std::string> wanted(langs.begin(), langs.end());
  std::vector<ManifestRecord> out;
  for (const auto& r : records)
    if (wanted.count(r.lang)) out.push_back(r);
  return out;
}

// SMT/SRT samples whose source and target are both in the set.
std::vector<InstructionSample> pair_samples(const std::vector<ManifestRecord>& records, const LanguageSet& langs,
                                            TaskKind task, const Tokenizer& tok) {
  const std::set<std::string> wanted(langs.begin(), langs.end());
  std::vector<InstructionSample> out;
  for (auto& s : build_samples(records_in(records, langs), task, tok))
    if (wanted.count(*s.tgt)) out.push_back(std::move(s));
  return out;
}

std::uint64_t phase_salt(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

PhaseResult run_phase(const PhaseSpec& phase, SpeechTranslationModel source, const std::vector<ManifestRecord>& train,
                      const RunConfig& cfg, EncoderCache& cache, const StepCallback& on_step) {
  PhaseResult res;
  res.spec = phase;
  res.model = std::move(source);
  res.meta.phase = phase.name;
  res.meta.source_hash = state_hash(res.model);
  res.model.apply_freeze();

  TrainerConfig tc = cfg.trainer;
  tc.seed = cfg.trainer.seed ^ phase_salt(phase.name);
  const auto& tok = res.model.tokenizer;
  auto& extra = res.meta.extra;
  extra["kind"] = phase_kind_name(phase.kind);
  extra["language_sets"] = phase.language_sets;

  const auto available = count_per_language(train);
  for (const auto& set : phase.language_sets)
    for (const auto& code : set)
      if (!available.count(code)) {
        const std::string w = "phase " + phase.name + ": no training data for language " + code;
        if (std::find(res.warnings.begin(), res.warnings.end(), w) == res.warnings.end()) res.warnings.push_back(w);
      }

  auto train_on = [&](const std::vector<InstructionSample>& samples, int steps, const std::string& label) {
    auto log = train_samples(res.model, cache, samples, steps, tc, label, on_step);
    for (auto& r : log) {
      r.step += static_cast<int>(res.log.size());
      res.log.push_back(r);
    }
    tc.seed += 1;
  };

  const LanguageSet& all = phase.language_sets.empty() ? LanguageSet{} : phase.language_sets.back();
  switch (phase.kind) {
    case PhaseKind::kAsrExpansion: {
      nlohmann::json stage_counts = nlohmann::json::array();
      for (std::size_t i = 0; i < phase.language_sets.size(); ++i) {
        const auto samples = build_samples(records_in(train, phase.language_sets[i]), TaskKind::kAsr, tok);
        stage_counts.push_back(samples.size());
        train_on(samples, phase.steps, "phase1-stage" + std::to_string(i + 1));
      }
      extra["stage_samples"] = stage_counts;
      break;
    }
    case PhaseKind::kAsrBalanced: {
      const auto pool = records_in(train, all);
      const auto kept = balance_per_language(pool, phase.cap, tc.seed);
      extra["cap"] = phase.cap;
      extra["available_per_language"] = count_per_language(pool);
      extra["kept_per_language"] = count_per_language(kept);
      train_on(build_samples(kept, TaskKind::kAsr, tok), phase.steps, "phase2");
      break;
    }
    case PhaseKind::kSmt:
    case PhaseKind::kSrt: {
      const auto samples = pair_samples(train, all, phase_task(phase.kind), tok);
      extra["samples"] = samples.size();
      train_on(samples, phase.steps, "phase" + phase.name);
      break;
    }
    case PhaseKind::kSrtBalanced: {
      const auto pool = pair_samples(train, all, TaskKind::kSrt, tok);
      const auto kept = balance_per_direction(pool, phase.cap, tc.seed);
      auto to_json_counts = [](const std::map<Direction, int>& m) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [d, n] : m) j[d.first + "-" + d.second] = n;
        return j;
      };
      extra["cap"] = phase.cap;
      extra["available_per_direction"] = to_json_counts(count_per_direction(pool));
      extra["kept_per_direction"] = to_json_counts(count_per_direction(kept));
      train_on(kept, phase.steps, "phase4");
      break;
    }
  }
  res.meta.steps = static_cast<int>(res.log.size());
  res.meta.final_loss = res.log.empty() ? 0.0 : res.log.back().loss;
  res.meta.state_hash = state_hash(res.model);
  extra["warnings"] = res.warnings;
  return res;
}

std::vector<PhaseResult> run_curriculum(const CurriculumPlan& plan, const SpeechTranslationModel& init,
                                        const std::vector<ManifestRecord>& train, const RunConfig& cfg,
                                        EncoderCache& cache, const std::string& out_dir, bool force,
                                        const StepCallback& on_step) {
  std::vector<PhaseResult> results;
  for (const auto& phase : plan.phases) {
    const SpeechTranslationModel* source = &init;
    if (phase.source != "init") {
      auto it = std::find_if(results.begin(), results.end(), [&](const auto& r) { return r.spec.name == phase.source; });
      if (it == results.end()) throw ValidationError("phase " + phase.name + " starts from unknown phase " + phase.source);
      source = &it->model;
    }
    PhaseResult res;
    try {
      res = run_phase(phase, *source, train, cfg, cache, on_step);
    } catch (const Error& e) {
      throw Error("phase " + phase.name + ": " + e.what());
    }
    if (!out_dir.empty()) {
      save_checkpoint((std::filesystem::path(out_dir) / ("phase-" + phase.name)).string(), cfg, res.model, res.meta,
                      force);
    }
    results.push_back(std::move(res));
  }
  return results;
}

SpeechTranslationModel prepare_initial_model(const RunConfig& cfg, const std::vector<ManifestRecord>& train,
                                             const LanguageRegistry& registry, const StepCallback& on_step) {
  Tokenizer tok = Tokenizer::build(train, registry, cfg.pipeline.vocab_size);
  SpeechTranslationModel model = init_model(cfg.pipeline, cfg.lora, std::move(tok));
  pretrain_llm(model, train, cfg.schedule, cfg.trainer, on_step);
  return model;
}

}  // namespace mst
