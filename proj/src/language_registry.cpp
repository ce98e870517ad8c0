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

#include "mst/language_registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "mst/error.hpp"
#include "mst/registry_table.hpp"

namespace mst {

LanguageRegistry::LanguageRegistry(std::vector<LanguageInfo> langs) : langs_(std::move(langs)) {
  std::unordered_set<std::string> seen;
  for (const auto& l : langs_) {
    if (l.code.empty()) throw ValidationError("empty language code in registry");
    if (!seen.insert(l.code).second) throw ValidationError("duplicate language code " + l.code);
  }
}

const LanguageRegistry& LanguageRegistry::builtin() {
  static const LanguageRegistry reg = parse_tsv(detail::kLanguageTable);
  return reg;
}

LanguageRegistry LanguageRegistry::parse_tsv(std::string_view text) {
  std::vector<LanguageInfo> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    if (cols.size() < 5) {
      throw ValidationError("language table line " + std::to_string(lineno) + ": expected 5 columns");
    }
    LanguageInfo info;
    info.code = cols[0];
    info.name = cols[1];
    info.family = cols[2];
    info.small_set = cols[3] == "1";
    info.s2tt_hours = std::stod(cols[4]);
    out.push_back(std::move(info));
  }
  return LanguageRegistry(std::move(out));
}

LanguageRegistry LanguageRegistry::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open language table " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_tsv(ss.str());
}

std::vector<std::string> LanguageRegistry::codes() const {
  std::vector<std::string> out;
  out.reserve(langs_.size());
  for (const auto& l : langs_) out.push_back(l.code);
  return out;
}

std::vector<std::string> LanguageRegistry::small_codes() const {
  std::vector<std::string> out;
  for (const auto& l : langs_)
    if (l.small_set) out.push_back(l.code);
  return out;
}

std::optional<std::size_t> LanguageRegistry::index_of(std::string_view code) const {
  for (std::size_t i = 0; i < langs_.size(); ++i)
    if (langs_[i].code == code) return i;
  return std::nullopt;
}

std::size_t LanguageRegistry::require(std::string_view code) const {
  auto idx = index_of(code);
  if (!idx) throw ValidationError("unknown language code " + std::string(code));
  return *idx;
}

LanguageRegistry LanguageRegistry::subset(const std::vector<std::string>& codes) const {
  for (const auto& c : codes) require(c);
  std::vector<LanguageInfo> out;
  for (const auto& l : langs_)
    if (std::find(codes.begin(), codes.end(), l.code) != codes.end()) out.push_back(l);
  return LanguageRegistry(std::move(out));
}

}  // namespace mst
