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

#include <nlohmann/json.hpp>

#include "mst/config.hpp"
#include "mst/model.hpp"

namespace mst {

struct PhaseMeta {
  std::string phase;        // "init" for the starting model
  std::string source_hash;  // state hash of the checkpoint this phase started from
  std::string state_hash;   // state hash of this checkpoint
  int steps = 0;
  double final_loss = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const PhaseMeta& m);
PhaseMeta phase_meta_from_json(const nlohmann::json& j);

// SHA-256 over geometry, LoRA settings, tokenizer and every tensor's name,
// shape and bytes, in component order. Equal hashes mean equal state.
std::string state_hash(SpeechTranslationModel& model);

struct Checkpoint {
  RunConfig config;
  SpeechTranslationModel model;
  PhaseMeta meta;
};

// Writes <dir>/{config.json, tokenizer.json, encoder/, adapter/, llm/, lora/,
// phase_meta.json} into a temporary sibling and renames it into place.
// meta.state_hash is filled in. Refuses to replace an existing directory
// unless `force`.
void save_checkpoint(const std::string& dir, const RunConfig& config, SpeechTranslationModel& model, PhaseMeta& meta,
                     bool force = false);

// Loads and verifies the stored state hash.
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace mst
