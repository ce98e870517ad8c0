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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mst/error.hpp"
#include "mst/manifest.hpp"
#include "mst/tokenizer.hpp"

namespace mst {

enum class TaskKind { kAsr, kSmt, kSrt };

const char* task_name(TaskKind t);
TaskKind parse_task(const std::string& name);

// One tokenized training/eval instance. target_ids exclude EOS; the trainer
// appends it.
struct InstructionSample {
  TaskKind task = TaskKind::kAsr;
  std::string record_id;
  AudioRef audio;
  std::vector<int> instruction_ids;
  std::vector<int> target_ids;
  std::vector<int> loss_mask;  // one entry per target id
  std::string src;
  std::optional<std::string> tgt;
};

// Layouts:
//   ASR  instruction <|src|>                      target transcript
//   SMT  instruction transcript <|src|><|tgt|>    target translation
//   SRT  instruction <|src|><|tgt|>               target transcript <|src|><|tgt|> translation
InstructionSample build_sample(const ManifestRecord& record, TaskKind task, const std::optional<std::string>& tgt,
                               const Tokenizer& tok);

// Every (record, task) instance: one per record for ASR, one per available
// translation for SMT/SRT.
std::vector<InstructionSample> build_samples(const std::vector<ManifestRecord>& records, TaskKind task,
                                             const Tokenizer& tok);

std::string render(const std::vector<int>& ids, const Tokenizer& tok);

class ParseError : public Error {
 public:
  explicit ParseError(std::string raw)
      : Error("language tag pair not found in output: \"" + raw + "\""), raw_text(std::move(raw)) {}
  std::string raw_text;
};

struct SrtParts {
  std::string transcript;
  std::string translation;
  bool operator==(const SrtParts&) const = default;
};

// Splits at the first <|src|><|tgt|> occurrence.
SrtParts parse_srt_output(const std::string& text, const std::string& src, const std::string& tgt);
SrtParts parse_srt_output(const std::vector<int>& ids, const Tokenizer& tok, const std::string& src,
                          const std::string& tgt);

using Direction = std::pair<std::string, std::string>;
std::vector<Direction> enumerate_directions(const std::vector<std::string>& languages);

}  // namespace mst
