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

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mst/model.hpp"
#include "mst/tasks.hpp"

namespace mst {

// Scores per ordered direction; (x, x) is never present.
struct DirectionMatrix {
  std::string metric;
  std::map<Direction, double> scores;

  void set(const Direction& d, double v);
  double mean() const;
  std::vector<std::string> languages() const;
};

// Bins with edges x>=90, 90>x>=80, 80>x>=70, x<70.
struct ScoreBins {
  int ge90 = 0, ge80 = 0, ge70 = 0, lt70 = 0, total = 0;
};

ScoreBins bin_scores(const DirectionMatrix& m);

struct EvalReport {
  DirectionMatrix spbleu{"spBLEU", {}};
  DirectionMatrix exact_match{"exact-match", {}};
  ScoreBins spbleu_bins, exact_match_bins;
  std::map<std::string, double> transcript_wer;  // per source language
  std::vector<Direction> absent;                  // requested directions without test data
  int samples = 0;
  int parse_failures = 0;
  double mean_exact_match = 0.0;  // over samples, percent
};

// SRT decoding of every test sample in `directions`; the generated text is
// split with parse_srt_output and an unparseable output scores an empty
// translation. Empty `directions` means all directions present in `test`.
EvalReport evaluate_matrix(SpeechTranslationModel& model, EncoderCache& cache, const std::vector<ManifestRecord>& test,
                           const std::vector<Direction>& directions = {}, int batch = 8);

nlohmann::json to_json(const DirectionMatrix& m);
nlohmann::json to_json(const EvalReport& r);
std::string bins_csv(const std::vector<std::pair<std::string, ScoreBins>>& rows);

// Parses "eng-deu,deu-fra" or "all".
std::vector<Direction> parse_directions(const std::string& spec);

}  // namespace mst
