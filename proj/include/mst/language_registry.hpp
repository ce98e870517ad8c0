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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

struct LanguageInfo {
  std::string code;  // ISO 639-3
  std::string name;
  std::string family;
  bool small_set = false;  // member of the 28-language set
  double s2tt_hours = 0.0;
};

// Ordered table of supported languages. Tag token ids are assigned in
// registry order, so the order is part of the checkpoint format.
class LanguageRegistry {
 public:
  LanguageRegistry() = default;
  explicit LanguageRegistry(std::vector<LanguageInfo> langs);

  // The 70-language table compiled in from data/languages.tsv.
  static const LanguageRegistry& builtin();
  static LanguageRegistry parse_tsv(std::string_view text);
  static LanguageRegistry load(const std::string& path);

  std::size_t size() const { return langs_.size(); }
  const std::vector<LanguageInfo>& languages() const { return langs_; }
  std::vector<std::string> codes() const;
  std::vector<std::string> small_codes() const;

  bool contains(std::string_view code) const { return index_of(code).has_value(); }
  std::optional<std::size_t> index_of(std::string_view code) const;
  // Throws ValidationError("unknown language code <code>") on a miss.
  std::size_t require(std::string_view code) const;
  const LanguageInfo& at(std::string_view code) const { return langs_[require(code)]; }

  // Registry restricted to `codes`, preserving registry order.
  LanguageRegistry subset(const std::vector<std::string>& codes) const;

 private:
  std::vector<LanguageInfo> langs_;
};

}  // namespace mst
