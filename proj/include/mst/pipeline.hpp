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

#include <string>
#include <vector>

#include "mst/bench.hpp"
#include "mst/curriculum.hpp"
#include "mst/evaluate.hpp"

namespace mst {

LanguageRegistry registry_for(const RunConfig& cfg);

struct Corpus {
  std::vector<ManifestRecord> all, train, test;
};

// Synthetic corpus from cfg.synthetic, split per language.
Corpus make_corpus(const RunConfig& cfg, const LanguageRegistry& registry);

// Languages present in `records`, in registry order.
std::vector<std::string> languages_of(const std::vector<ManifestRecord>& records, const LanguageRegistry& registry);

struct ExperimentResult {
  std::string variant;
  CurriculumPlan plan;
  std::vector<PhaseResult> phases;
  EvalReport eval;
};

// Runs one curriculum variant from M0 and evaluates the final model on the
// test records.
ExperimentResult run_experiment(const RunConfig& cfg, const LanguageRegistry& registry,
                                const SpeechTranslationModel& m0, const Corpus& corpus, const Ablation& ablation,
                                EncoderCache& cache, const std::string& out_dir = "", bool force = false,
                                const StepCallback& on_step = {});

// {audio prompt, instruction embedding} for SRT samples drawn cyclically
// from `records`.
std::vector<std::pair<Mat, Mat>> bench_prompts(SpeechTranslationModel& model, EncoderCache& cache,
                                               const std::vector<ManifestRecord>& records, int n);

}  // namespace mst
