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

#include "mst/bench.hpp"

#include <algorithm>
#include <chrono>

#include "mst/error.hpp"

namespace mst {

namespace {

Mat build_prefix(const Mat& audio, const Mat& text, int audio_rows) {
  Mat out = Mat::Zero(audio_rows + text.rows(), audio.cols());
  out.topRows(audio.rows()) = audio;
  if (text.rows() > 0) out.bottomRows(text.rows()) = text;
  return out;
}

BenchReport run_arm(const GenerationEngine& engine, const std::vector<std::pair<Mat, Mat>>& prompts,
                    const BenchOptions& opts, int audio_rows) {
  StopRule stop;
  stop.max_new_tokens = opts.decode_tokens;
  stop.ignore_eos = true;
  std::vector<Mat> prefixes;
  for (const auto& [audio, text] : prompts) prefixes.push_back(build_prefix(audio, text, audio_rows));

  BenchReport r;
  r.model_tag = opts.model_tag;
  r.audio_tokens = audio_rows;
  r.batch = opts.batch;
  r.samples = static_cast<int>(prompts.size());
  r.decode_tokens = opts.decode_tokens;
  for (int rep = 0; rep < opts.repeats; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t start = 0; start < prefixes.size(); start += opts.batch) {
      const std::size_t end = std::min(prefixes.size(), start + opts.batch);
      std::vector<Mat> chunk(prefixes.begin() + start, prefixes.begin() + end);
      engine.generate_batch(chunk, stop);
    }
    r.runs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::vector<double> sorted = r.runs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.wall_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  r.tokens_per_second = r.wall_seconds > 0 ? r.samples * r.decode_tokens / r.wall_seconds : 0.0;
  return r;
}

}  // namespace

BenchResult bench_decode(const GenerationEngine& engine, const std::vector<std::pair<Mat, Mat>>& prompts,
                         const BenchOptions& opts) {
  if (prompts.empty()) throw ValidationError("bench needs at least one sample");
  if (opts.batch <= 0 || opts.repeats <= 0 || opts.decode_tokens <= 0) {
    throw ValidationError("bench batch, repeats and decode tokens must be > 0");
  }
  const int short_rows = static_cast<int>(prompts.front().first.rows());
  for (const auto& [audio, text] : prompts) {
    if (audio.rows() != short_rows) throw ShapeError("bench prompts must share one audio length");
  }
  if (opts.long_tokens < short_rows) throw ValidationError("long arm must not be shorter than the audio prompt");
  BenchResult res;
  res.short_arm = run_arm(engine, prompts, opts, short_rows);
  res.long_arm = run_arm(engine, prompts, opts, opts.long_tokens);
  res.speedup = res.long_arm.wall_seconds / std::max(res.short_arm.wall_seconds, 1e-12);
  res.compression = static_cast<double>(opts.long_tokens) / short_rows;
  return res;
}

nlohmann::json to_json(const BenchReport& r) {
  return {{"model", r.model_tag},        {"audio_tokens", r.audio_tokens},
          {"batch", r.batch},            {"samples", r.samples},
          {"decode_tokens", r.decode_tokens}, {"time_s", r.wall_seconds},
          {"tokens_per_s", r.tokens_per_second}, {"runs_s", r.runs}};
}

nlohmann::json to_json(const BenchResult& r) {
  return {{"arms", {to_json(r.short_arm), to_json(r.long_arm)}},
          {"speedup", r.speedup},
          {"compression", r.compression}};
}

}  // namespace mst
