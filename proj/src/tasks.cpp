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

#include "mst/tasks.hpp"

#include <algorithm>
#include <set>

namespace mst {

const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::kAsr: return "ASR";
    case TaskKind::kSmt: return "SMT";
    case TaskKind::kSrt: return "SRT";
  }
  return "?";
}

TaskKind parse_task(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "ASR") return TaskKind::kAsr;
  if (up == "SMT") return TaskKind::kSmt;
  if (up == "SRT") return TaskKind::kSrt;
  throw ValidationError("unknown task '" + name + "'");
}

InstructionSample build_sample(const ManifestRecord& record, TaskKind task, const std::optional<std::string>& tgt,
                               const Tokenizer& tok) {
  InstructionSample s;
  s.task = task;
  s.record_id = record.id;
  s.audio = record.audio;
  s.src = record.lang;
  const int src_tag = tok.tag_id(record.lang);
  const auto transcript = tok.encode(record.transcript);

  if (task == TaskKind::kAsr) {
    s.instruction_ids = {src_tag};
    s.target_ids = transcript;
  } else {
    if (!tgt) throw ValidationError(std::string(task_name(task)) + " sample needs a target language");
    auto it = record.translations.find(*tgt);
    if (it == record.translations.end()) {
      throw ValidationError("record " + record.id + " has no translation for direction " + record.lang + "->" + *tgt);
    }
    s.tgt = tgt;
    const int tgt_tag = tok.tag_id(*tgt);
    const auto translation = tok.encode(it->second);
    if (task == TaskKind::kSmt) {
      s.instruction_ids = transcript;
      s.instruction_ids.push_back(src_tag);
      s.instruction_ids.push_back(tgt_tag);
      s.target_ids = translation;
    } else {
      s.instruction_ids = {src_tag, tgt_tag};
      s.target_ids = transcript;
      s.target_ids.push_back(src_tag);
      s.target_ids.push_back(tgt_tag);
      s.target_ids.insert(s.target_ids.end(), translation.begin(), translation.end());
    }
  }
  s.loss_mask.assign(s.target_ids.size(), 1);
  return s;
}

std::vector<InstructionSample> build_samples(const std::vector<ManifestRecord>& records, TaskKind task,
                                             const Tokenizer& tok) {
  std::vector<InstructionSample> out;
  for (const auto& r : records) {
    if (task == TaskKind::kAsr) {
      out.push_back(build_sample(r, task, std::nullopt, tok));
    } else {
      for (const auto& [lang, text] : r.translations) out.push_back(build_sample(r, task, lang, tok));
    }
  }
  return out;
}

std::string render(const std::vector<int>& ids, const Tokenizer& tok) { return tok.decode(ids); }

SrtParts parse_srt_output(const std::string& text, const std::string& src, const std::string& tgt) {
  const std::string pair = Tokenizer::tag_text(src) + Tokenizer::tag_text(tgt);
  const auto pos = text.find(pair);
  if (pos == std::string::npos) throw ParseError(text);
  return {text.substr(0, pos), text.substr(pos + pair.size())};
}

SrtParts parse_srt_output(const std::vector<int>& ids, const Tokenizer& tok, const std::string& src,
                          const std::string& tgt) {
  const int a = tok.tag_id(src), b = tok.tag_id(tgt);
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    if (ids[i] == a && ids[i + 1] == b) {
      return {tok.decode({ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i)}),
              tok.decode({ids.begin() + static_cast<std::ptrdiff_t>(i) + 2, ids.end()})};
    }
  }
  throw ParseError(tok.decode(ids));
}

std::vector<Direction> enumerate_directions(const std::vector<std::string>& languages) {
  std::set<std::string> seen;
  for (const auto& l : languages)
    if (!seen.insert(l).second) throw ValidationError("duplicate language " + l);
  if (languages.size() < 2) throw ValidationError("need at least two languages to form a direction");
  std::vector<Direction> out;
  out.reserve(languages.size() * (languages.size() - 1));
  for (const auto& s : languages)
    for (const auto& t : languages)
      if (s != t) out.emplace_back(s, t);
  return out;
}

}  // namespace mst
