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

#include "mst/tokenizer.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

namespace {

const std::string kWordMark = "\xE2\x96\x81";  // U+2581

// Splits UTF-8 text into code point strings; invalid bytes stand alone.
std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (i + len > s.size()) len = 1;
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Tokenizer Tokenizer::build(const std::vector<ManifestRecord>& records, const LanguageRegistry& registry,
                           int max_vocab) {
  Tokenizer tok;
  tok.pieces_ = {"<pad>", "</s>", "<unk>", kWordMark};
  tok.tags_ = registry.codes();
  for (const auto& code : tok.tags_) tok.pieces_.push_back(tag_text(code));

  std::set<std::string> words, chars;
  auto scan = [&](const std::string& text) {
    for (const auto& w : split_spaces(text)) {
      if (w.empty()) continue;
      if (w.find("<|") == std::string::npos) words.insert(w);
      for (auto& c : utf8_chars(w)) chars.insert(c);
    }
  };
  for (const auto& r : records) {
    scan(r.transcript);
    for (const auto& [lang, text] : r.translations) scan(text);
  }
  for (char c = 0x21; c < 0x7f; ++c) chars.insert(std::string(1, c));

  for (const auto& w : words) tok.pieces_.push_back(kWordMark + w);
  tok.first_char_ = static_cast<int>(tok.pieces_.size());
  for (const auto& c : chars) tok.pieces_.push_back(c);
  if (tok.size() > max_vocab) {
    throw ValidationError("tokenizer needs " + std::to_string(tok.size()) + " pieces but vocab_size is " +
                          std::to_string(max_vocab));
  }
  tok.index();
  return tok;
}

void Tokenizer::index() {
  lookup_.clear();
  for (int i = 0; i < size(); ++i) lookup_.emplace(pieces_[i], i);
}

const std::string& Tokenizer::piece(int id) const {
  if (id < 0 || id >= size()) throw ValidationError("token id " + std::to_string(id) + " outside tokenizer");
  return pieces_[id];
}

int Tokenizer::tag_id(const std::string& code) const {
  for (int i = 0; i < num_tags(); ++i)
    if (tags_[i] == code) return kFirstTag + i;
  throw ValidationError("unknown language code " + code);
}

const std::string& Tokenizer::tag_code(int id) const {
  if (!is_tag(id)) throw ValidationError("token id " + std::to_string(id) + " is not a language tag");
  return tags_[id - kFirstTag];
}

std::optional<int> Tokenizer::word_id(const std::string& word) const {
  auto it = lookup_.find(kWordMark + word);
  if (it == lookup_.end() || it->second < kFirstTag + num_tags()) return std::nullopt;
  return it->second;
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  std::vector<int> ids;
  const auto segments = split_spaces(text);
  auto emit_chars = [&](const std::string& w) {
    for (const auto& c : utf8_chars(w)) {
      auto it = lookup_.find(c);
      ids.push_back(it != lookup_.end() && it->second >= first_char_ ? it->second : kUnk);
    }
  };
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const bool need_space = i > 0;
    const bool at_start = ids.empty();
    const auto& seg = segments[i];
    const auto word = seg.empty() ? std::nullopt : word_id(seg);
    if (word && need_space != at_start) {
      // A word piece renders its space everywhere except at the start.
      ids.push_back(*word);
      continue;
    }
    if (need_space) ids.push_back(kSpace);
    emit_chars(seg);
  }
  return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  bool at_start = true;
  for (int id : ids) {
    if (id == kPad || id == kEos) continue;
    // The output layer can be wider than the piece table; spare ids read as unk.
    if (id < 0 || id >= size()) id = kUnk;
    const std::string& p = piece(id);
    if (is_tag(id)) {
      out += p;
      at_start = true;
      continue;
    }
    if (id == kSpace) {
      out += ' ';
    } else if (id >= first_char_ || id == kUnk) {
      out += p;
    } else {
      if (!at_start) out += ' ';
      out += p.substr(kWordMark.size());
    }
    at_start = false;
  }
  return out;
}

nlohmann::json Tokenizer::to_json() const {
  nlohmann::json j;
  j["format"] = "mst-tokenizer-1";
  j["tags"] = tags_;
  j["first_char"] = first_char_;
  j["pieces"] = pieces_;
  return j;
}

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mst-tokenizer-1") throw ValidationError("unsupported tokenizer format");
  Tokenizer tok;
  tok.tags_ = j.at("tags").get<std::vector<std::string>>();
  tok.pieces_ = j.at("pieces").get<std::vector<std::string>>();
  tok.first_char_ = j.at("first_char").get<int>();
  if (tok.size() < kFirstTag + tok.num_tags() || tok.first_char_ > tok.size()) {
    throw ValidationError("tokenizer file is inconsistent");
  }
  for (int i = 0; i < tok.num_tags(); ++i) {
    if (tok.pieces_[kFirstTag + i] != tag_text(tok.tags_[i])) throw ValidationError("tokenizer tag table mismatch");
  }
  tok.index();
  return tok;
}

void Tokenizer::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << to_json().dump(1) << '\n';
}

Tokenizer Tokenizer::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path);
  return from_json(nlohmann::json::parse(f));
}

}  // namespace mst
