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
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mst/language_registry.hpp"
#include "mst/manifest.hpp"

namespace mst {

// Word/character hybrid vocabulary with one atomic token per language tag.
//
// Layout: <pad>, </s>, <unk>, the bare space marker, the tags <|xxx|> in
// registry order, then "▁word" pieces, then single-character pieces.
// Plain text is never encoded to tag ids, even if it spells one out.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kSpace = 3;
  static constexpr int kFirstTag = 4;

  Tokenizer() = default;

  // Collects every word and character of the transcripts and translations.
  // Throws ValidationError when the result exceeds max_vocab.
  static Tokenizer build(const std::vector<ManifestRecord>& records, const LanguageRegistry& registry,
                         int max_vocab);

  int size() const { return static_cast<int>(pieces_.size()); }
  int num_tags() const { return static_cast<int>(tags_.size()); }
  const std::string& piece(int id) const;

  int tag_id(const std::string& code) const;
  bool is_tag(int id) const { return id >= kFirstTag && id < kFirstTag + num_tags(); }
  const std::string& tag_code(int id) const;
  static std::string tag_text(const std::string& code) { return "<|" + code + "|>"; }

  // Word id for a known word, if any.
  std::optional<int> word_id(const std::string& word) const;

  std::vector<int> encode(const std::string& text) const;
  // Tags render as <|xxx|>; pad and eos are skipped.
  std::string decode(const std::vector<int>& ids) const;

  nlohmann::json to_json() const;
  static Tokenizer from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Tokenizer load(const std::string& path);

  bool operator==(const Tokenizer& o) const { return pieces_ == o.pieces_ && tags_ == o.tags_; }

 private:
  void index();

  std::vector<std::string> pieces_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> lookup_;
  int first_char_ = 0;  // ids >= first_char_ are single characters
};

}  // namespace mst
