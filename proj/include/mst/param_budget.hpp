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
#include <string>
#include <vector>

namespace mst {

struct BudgetEntry {
  std::string name;
  std::int64_t total = 0;
  std::int64_t trainable = 0;
  std::string details;
};

struct ParamBudget {
  std::vector<BudgetEntry> entries;

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += e.total;
    return n;
  }
  std::int64_t trainable() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += e.trainable;
    return n;
  }
  const BudgetEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

}  // namespace mst
