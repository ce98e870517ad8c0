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

#include <array>
#include <string>
#include <vector>

#include "mst/audio.hpp"
#include "mst/config.hpp"
#include "mst/manifest.hpp"

namespace mst {

// Word `concept` of language `lang` in the synthetic lexicon. Every
// (lang, concept) pair maps to a distinct word across the whole registry;
// translation maps concept indices one-to-one between languages.
std::string synthetic_word(const std::string& lang, int concept_id, int words_per_lang);
const std::vector<std::string>& synthetic_lexicon(const std::string& lang, int words_per_lang);

// Three chord frequencies (Hz) used to voice a word.
std::array<double, 3> word_chord(const std::string& lang, const std::string& word, int words_per_lang);

// Deterministic multilingual corpus. Throws ValidationError when a language
// is outside the registry or when fewer than `directions_per_utterance`
// target languages exist.
std::vector<ManifestRecord> generate_synthetic_corpus(
    const SyntheticSpec& spec, const LanguageRegistry& registry = LanguageRegistry::builtin());

// Renders the waveform for a synthetic recipe.
AudioClip synthesize_audio(const SyntheticAudio& recipe, int words_per_lang);

// Synthesizes or reads (WAV) the audio behind a manifest reference.
AudioClip load_audio(const AudioRef& ref, int words_per_lang);

// Seeded split preserving file order inside each part.
struct CorpusSplit {
  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> test;
};
CorpusSplit split_corpus(const std::vector<ManifestRecord>& records, double test_fraction, std::uint64_t seed);

}  // namespace mst
