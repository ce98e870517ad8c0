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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mst/language_registry.hpp"

namespace mst {

// Parameters of a generated utterance. The word list is the transcript; each
// word is voiced as a fixed chord for `token_ms` milliseconds.
struct SyntheticAudio {
  std::string lang;
  std::vector<std::string> words;
  int token_ms = 400;
  int sample_rate = 16000;
  double noise = 0.01;
  std::uint64_t seed = 0;

  double duration_seconds() const { return words.size() * token_ms / 1000.0; }
  bool operator==(const SyntheticAudio&) const = default;
};

// Either a path to a mono WAV file or a synthetic recipe.
struct AudioRef {
  std::optional<std::string> path;
  std::optional<SyntheticAudio> synthetic;
  bool operator==(const AudioRef&) const = default;
};

struct ManifestRecord {
  std::string id;
  AudioRef audio;
  std::string lang;
  std::string transcript;
  std::map<std::string, std::string> translations;  // target lang -> text

  bool operator==(const ManifestRecord&) const = default;
};

// Checks the record invariants against `registry`; throws ValidationError.
void validate_record(const ManifestRecord& rec, const LanguageRegistry& registry);

ManifestRecord record_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const ManifestRecord& rec);

// Line-delimited JSON. Blank lines are skipped; any malformed or invalid
// record raises ValidationError naming the 1-based line number.
std::vector<ManifestRecord> load_manifest(const std::string& path,
                                          const LanguageRegistry& registry = LanguageRegistry::builtin());
std::vector<ManifestRecord> parse_manifest(const std::string& text,
                                           const LanguageRegistry& registry = LanguageRegistry::builtin());
std::string format_manifest(const std::vector<ManifestRecord>& records);
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);

}  // namespace mst
