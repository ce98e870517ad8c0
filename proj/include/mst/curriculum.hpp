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
#include <optional>
#include <string>
#include <vector>

#include "mst/checkpoint.hpp"
#include "mst/config.hpp"
#include "mst/language_registry.hpp"
#include "mst/model.hpp"

namespace mst {

using LanguageSet = std::vector<std::string>;

// Nested language sets of the given sizes. The first two languages are
// eng and cmn, then the registry's small set, then the remaining languages
// ordered by `data_counts` (descending, ties in registry order). Sizes must
// be strictly increasing and within the registry.
std::vector<LanguageSet> expansion_schedule(const LanguageRegistry& registry, const std::vector<int>& stages,
                                            const std::map<std::string, int>& data_counts = {});

// Throws unless each set contains the previous one.
void check_nested(const std::vector<LanguageSet>& sets);

enum class PhaseKind { kAsrExpansion, kAsrBalanced, kSmt, kSrt, kSrtBalanced };
enum class CapUnit { kNone, kPerLanguage, kPerDirection };

struct PhaseSpec {
  std::string name;  // "1", "2", "3-smt", "3-srt", "4"
  PhaseKind kind = PhaseKind::kAsrExpansion;
  std::vector<LanguageSet> language_sets;  // one per stage; single entry otherwise
  int steps = 0;                           // per stage for the expansion phase
  int cap = 0;
  CapUnit cap_unit = CapUnit::kNone;
  std::string source;  // name of the phase whose output this one starts from; "init" for M0
};

TaskKind phase_task(PhaseKind kind);
const char* phase_kind_name(PhaseKind kind);

struct Ablation {
  bool skip_asr = false;
  bool skip_smt_srt = false;
  bool no_lora = false;
  std::string tag() const;
};

struct CurriculumPlan {
  std::vector<PhaseSpec> phases;
  std::string variant = "full";
};

// Phase 1 ASR over the expansion stages, phase 2 capped ASR, phase 3 SMT
// then SRT, phase 4 capped SRT. Stage sets are intersected with `languages`;
// empty or repeated stages are dropped.
CurriculumPlan default_plan(const RunConfig& cfg, const LanguageRegistry& registry, const LanguageSet& languages,
                            const std::map<std::string, int>& data_counts);

// skip_asr drops phases 1-2; skip_smt_srt drops phase 3. The two are
// mutually exclusive. no_lora only affects the model, see apply_ablation.
CurriculumPlan apply_ablation(CurriculumPlan plan, const Ablation& ablation);
void apply_ablation(SpeechTranslationModel& model, const Ablation& ablation);

const PhaseSpec& find_phase(const CurriculumPlan& plan, const std::string& name);

struct PhaseResult {
  PhaseSpec spec;
  SpeechTranslationModel model;
  PhaseMeta meta;
  std::vector<StepRecord> log;
  std::vector<std::string> warnings;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Trains a copy of `source` on the phase's data. Languages in the phase set
// without data produce warnings, not failures.
PhaseResult run_phase(const PhaseSpec& phase, SpeechTranslationModel source, const std::vector<ManifestRecord>& train,
                      const RunConfig& cfg, EncoderCache& cache, const StepCallback& on_step = {});

// Runs every phase in order, each starting from the previous output. When
// `out_dir` is set each phase is saved to <out_dir>/phase-<name>.
std::vector<PhaseResult> run_curriculum(const CurriculumPlan& plan, const SpeechTranslationModel& init,
                                        const std::vector<ManifestRecord>& train, const RunConfig& cfg,
                                        EncoderCache& cache, const std::string& out_dir = "", bool force = false,
                                        const StepCallback& on_step = {});

// M0: tokenizer over the training records, random encoder/adapter, and an
// LLM pretrained on the training text then frozen.
SpeechTranslationModel prepare_initial_model(const RunConfig& cfg, const std::vector<ManifestRecord>& train,
                                             const LanguageRegistry& registry, const StepCallback& on_step = {});

}  // namespace mst
