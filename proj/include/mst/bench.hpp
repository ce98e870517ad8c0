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

#include <nlohmann/json.hpp>

#include "mst/llm.hpp"

namespace mst {

struct BenchReport {
  std::string model_tag;
  int audio_tokens = 0;
  int batch = 0;
  int samples = 0;
  int decode_tokens = 0;
  double wall_seconds = 0.0;  // median over repeats
  double tokens_per_second = 0.0;
  std::vector<double> runs;
};

struct BenchResult {
  BenchReport short_arm;
  BenchReport long_arm;
  double speedup = 0.0;      // long / short wall time
  double compression = 0.0;  // long_tokens / short_tokens
};

struct BenchOptions {
  int long_tokens = 750;
  int batch = 8;
  int repeats = 3;
  int decode_tokens = 16;
  std::string model_tag = "toy";
};

// Decodes every prompt twice: once with its audio rows as given and once
// with the audio rows zero-padded to `long_tokens`, using the same engine.
// Each prompt is {audio rows, instruction embedding rows}.
BenchResult bench_decode(const GenerationEngine& engine, const std::vector<std::pair<Mat, Mat>>& prompts,
                         const BenchOptions& opts);

nlohmann::json to_json(const BenchReport& r);
nlohmann::json to_json(const BenchResult& r);

}  // namespace mst
