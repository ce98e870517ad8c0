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

#include "mst/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

#include "mst/error.hpp"

namespace mst {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform index in [0, n) from a 64-bit engine, identical on every platform.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";
constexpr int kChordBands = 16;

std::string make_word(std::uint64_t h) {
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w += kConsonants[h % 14];
    h /= 14;
    w += kVowels[h % 5];
    h /= 5;
  }
  return w;
}

struct Lexicon {
  std::unordered_map<std::string, std::vector<std::string>> words;  // lang -> concepts
  std::unordered_map<std::string, int> global_index;                // word -> global slot
};

// Lexicons are built over the full built-in registry so a word never depends
// on which languages a particular corpus selects.
const Lexicon& lexicon(int words_per_lang) {
  static std::mutex mu;
  static std::map<int, Lexicon> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(words_per_lang);
  if (it != cache.end()) return it->second;
  Lexicon lex;
  std::set<std::string> used;
  int slot = 0;
  for (const auto& code : LanguageRegistry::builtin().codes()) {
    auto& list = lex.words[code];
    for (int c = 0; c < words_per_lang; ++c) {
      std::uint64_t attempt = 0;
      std::string w;
      do {
        w = make_word(splitmix64(fnv1a(code) ^ splitmix64(static_cast<std::uint64_t>(c) * 1315423911ULL + attempt)));
        ++attempt;
      } while (!used.insert(w).second);
      lex.global_index[w] = slot++;
      list.push_back(w);
    }
  }
  return cache.emplace(words_per_lang, std::move(lex)).first->second;
}

// All 3-of-16 band combinations in lexicographic order.
const std::vector<std::array<int, 3>>& chord_table() {
  static const std::vector<std::array<int, 3>> table = [] {
    std::vector<std::array<int, 3>> t;
    for (int a = 0; a < kChordBands; ++a)
      for (int b = a + 1; b < kChordBands; ++b)
        for (int c = b + 1; c < kChordBands; ++c) t.push_back({a, b, c});
    return t;
  }();
  return table;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

const std::vector<std::string>& synthetic_lexicon(const std::string& lang, int words_per_lang) {
  if (words_per_lang <= 0) throw ValidationError("words_per_lang must be > 0");
  const auto& lex = lexicon(words_per_lang);
  auto it = lex.words.find(lang);
  if (it == lex.words.end()) throw ValidationError("unknown language code " + lang);
  return it->second;
}

std::string synthetic_word(const std::string& lang, int concept_id, int words_per_lang) {
  const auto& words = synthetic_lexicon(lang, words_per_lang);
  if (concept_id < 0 || concept_id >= static_cast<int>(words.size())) {
    throw ValidationError("concept index out of range");
  }
  return words[concept_id];
}

std::array<double, 3> word_chord(const std::string& lang, const std::string& word, int words_per_lang) {
  const auto& lex = lexicon(words_per_lang);
  auto it = lex.global_index.find(word);
  if (it == lex.global_index.end()) {
    throw ValidationError("word '" + word + "' is not in the synthetic lexicon of " + lang);
  }
  const auto& table = chord_table();
  // Stride coprime with the table size scatters neighbouring slots.
  const std::size_t idx = (static_cast<std::size_t>(it->second) * 97) % table.size();
  const auto& bands = table[idx];
  // Band centres of a 16-band mel scale between 150 Hz and 7 kHz.
  const double lo = hz_to_mel(150.0), hi = hz_to_mel(7000.0);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = mel_to_hz(lo + (hi - lo) * bands[i] / (kChordBands - 1));
  return out;
}

AudioClip synthesize_audio(const SyntheticAudio& recipe, int words_per_lang) {
  AudioClip clip;
  clip.sample_rate = recipe.sample_rate;
  const std::size_t per_word = static_cast<std::size_t>(recipe.token_ms) * recipe.sample_rate / 1000;
  clip.samples.assign(per_word * recipe.words.size(), 0.0f);
  std::mt19937_64 rng(splitmix64(recipe.seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t w = 0; w < recipe.words.size(); ++w) {
    const auto freqs = word_chord(recipe.lang, recipe.words[w], words_per_lang);
    std::array<double, 3> phase{}, amp{};
    for (int i = 0; i < 3; ++i) {
      phase[i] = two_pi * unit(rng);
      amp[i] = 0.25 * (0.8 + 0.4 * unit(rng));
    }
    for (std::size_t n = 0; n < per_word; ++n) {
      const double t = static_cast<double>(n) / recipe.sample_rate;
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += amp[i] * std::sin(two_pi * freqs[i] * t + phase[i]);
      v += recipe.noise * noise(rng);
      clip.samples[w * per_word + n] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
  }
  return clip;
}

AudioClip load_audio(const AudioRef& ref, int words_per_lang) {
  if (ref.synthetic) return synthesize_audio(*ref.synthetic, words_per_lang);
  if (ref.path) return read_wav(*ref.path);
  throw ValidationError("audio reference is empty");
}

std::vector<ManifestRecord> generate_synthetic_corpus(const SyntheticSpec& spec, const LanguageRegistry& registry) {
  if (spec.languages.empty()) throw ValidationError("synthetic corpus needs at least one language");
  if (spec.utterances_per_lang <= 0 || spec.directions_per_utterance <= 0) {
    throw ValidationError("utterances_per_lang and directions_per_utterance must be > 0");
  }
  if (spec.min_words <= 0 || spec.max_words < spec.min_words) throw ValidationError("bad word count range");
  for (const auto& l : spec.languages) registry.require(l);
  if (spec.directions_per_utterance > static_cast<int>(spec.languages.size()) - 1) {
    throw ValidationError("directions_per_utterance=" + std::to_string(spec.directions_per_utterance) +
                          " exceeds the available target languages (" +
                          std::to_string(spec.languages.size() - 1) + ")");
  }
  std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5eed5eed5eedULL));
  std::vector<ManifestRecord> out;
  out.reserve(spec.languages.size() * spec.utterances_per_lang);
  for (const auto& lang : spec.languages) {
    std::vector<std::string> targets;
    for (const auto& l : spec.languages)
      if (l != lang) targets.push_back(l);
    for (int u = 0; u < spec.utterances_per_lang; ++u) {
      const int n_words = spec.min_words + static_cast<int>(draw_index(rng, spec.max_words - spec.min_words + 1));
      std::vector<int> concepts(n_words);
      for (auto& c : concepts) c = static_cast<int>(draw_index(rng, spec.words_per_lang));

      auto render = [&](const std::string& l) {
        std::string text;
        for (std::size_t i = 0; i < concepts.size(); ++i) {
          if (i) text += ' ';
          text += synthetic_word(l, concepts[i], spec.words_per_lang);
        }
        return text;
      };

      ManifestRecord rec;
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%05d", lang.c_str(), u);
      rec.id = id;
      rec.lang = lang;
      rec.transcript = render(lang);

      // Partial Fisher-Yates picks distinct target languages.
      std::vector<std::string> pool = targets;
      for (int d = 0; d < spec.directions_per_utterance; ++d) {
        const std::size_t j = d + draw_index(rng, pool.size() - d);
        std::swap(pool[d], pool[j]);
        rec.translations[pool[d]] = render(pool[d]);
      }

      SyntheticAudio audio;
      audio.lang = lang;
      for (int c : concepts) audio.words.push_back(synthetic_word(lang, c, spec.words_per_lang));
      audio.token_ms = spec.token_ms;
      audio.noise = spec.noise_level;
      audio.seed = rng();
      rec.audio.synthetic = std::move(audio);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

CorpusSplit split_corpus(const std::vector<ManifestRecord>& records, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw ValidationError("test_fraction must be in [0, 1)");
  // Split inside each language so every language keeps test coverage.
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < records.size(); ++i) by_lang[records[i].lang].push_back(i);
  std::vector<bool> is_test(records.size(), false);
  std::mt19937_64 rng(splitmix64(seed ^ 0x7e57ULL));
  for (auto& [lang, idx] : by_lang) {
    const std::size_t n_test = static_cast<std::size_t>(std::floor(idx.size() * test_fraction));
    for (std::size_t d = 0; d < n_test; ++d) {
      const std::size_t j = d + draw_index(rng, idx.size() - d);
      std::swap(idx[d], idx[j]);
      is_test[idx[d]] = true;
    }
  }
  CorpusSplit split;
  for (std::size_t i = 0; i < records.size(); ++i) (is_test[i] ? split.test : split.train).push_back(records[i]);
  return split;
}

}  // namespace mst
