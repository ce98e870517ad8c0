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

#include "mst/manifest.hpp"

#include <fstream>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

void validate_record(const ManifestRecord& rec, const LanguageRegistry& registry) {
  if (rec.id.empty()) throw ValidationError("record has empty id");
  registry.require(rec.lang);
  if (rec.transcript.empty()) throw ValidationError("record " + rec.id + ": empty transcript");
  for (const auto& [lang, text] : rec.translations) {
    registry.require(lang);
    if (lang == rec.lang) {
      throw ValidationError("record " + rec.id + ": translations include the source language " + lang);
    }
    if (text.empty()) throw ValidationError("record " + rec.id + ": empty translation into " + lang);
  }
  if (rec.audio.path.has_value() == rec.audio.synthetic.has_value()) {
    throw ValidationError("record " + rec.id + ": audio must be exactly one of path or synthetic");
  }
  if (rec.audio.synthetic) {
    const auto& s = *rec.audio.synthetic;
    registry.require(s.lang);
    if (s.words.empty()) throw ValidationError("record " + rec.id + ": synthetic audio has no words");
    if (s.token_ms <= 0 || s.sample_rate <= 0) {
      throw ValidationError("record " + rec.id + ": synthetic audio needs positive token_ms and sample_rate");
    }
  }
}

ManifestRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  ManifestRecord rec;
  rec.id = j.at("id").get<std::string>();
  rec.lang = j.at("lang").get<std::string>();
  rec.transcript = j.at("transcript").get<std::string>();
  if (j.contains("translations")) {
    rec.translations = j.at("translations").get<std::map<std::string, std::string>>();
  }
  const auto& audio = j.at("audio");
  if (audio.contains("path")) rec.audio.path = audio.at("path").get<std::string>();
  if (audio.contains("synthetic")) {
    const auto& s = audio.at("synthetic");
    SyntheticAudio syn;
    syn.lang = s.at("lang").get<std::string>();
    syn.words = s.at("words").get<std::vector<std::string>>();
    syn.token_ms = s.value("token_ms", 400);
    syn.sample_rate = s.value("sample_rate", 16000);
    syn.noise = s.value("noise", 0.01);
    syn.seed = s.value("seed", std::uint64_t{0});
    rec.audio.synthetic = std::move(syn);
  }
  return rec;
}

nlohmann::ordered_json record_to_json(const ManifestRecord& rec) {
  nlohmann::ordered_json j;
  j["id"] = rec.id;
  nlohmann::ordered_json audio = nlohmann::ordered_json::object();
  if (rec.audio.path) audio["path"] = *rec.audio.path;
  if (rec.audio.synthetic) {
    const auto& s = *rec.audio.synthetic;
    nlohmann::ordered_json syn;
    syn["lang"] = s.lang;
    syn["words"] = s.words;
    syn["token_ms"] = s.token_ms;
    syn["sample_rate"] = s.sample_rate;
    syn["noise"] = s.noise;
    syn["seed"] = s.seed;
    audio["synthetic"] = std::move(syn);
  }
  j["audio"] = std::move(audio);
  j["lang"] = rec.lang;
  j["transcript"] = rec.transcript;
  nlohmann::ordered_json tr = nlohmann::ordered_json::object();
  for (const auto& [lang, text] : rec.translations) tr[lang] = text;
  j["translations"] = std::move(tr);
  return j;
}

std::vector<ManifestRecord> parse_manifest(const std::string& text, const LanguageRegistry& registry) {
  std::vector<ManifestRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(lineno) + ": ";
    ManifestRecord rec;
    try {
      rec = record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + "malformed record (" + e.what() + ")");
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    try {
      validate_record(rec, registry);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ManifestRecord> load_manifest(const std::string& path, const LanguageRegistry& registry) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open manifest " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str(), registry);
}

std::string format_manifest(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write manifest " + path);
  f << format_manifest(records);
}

}  // namespace mst
