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

#include "mst/balance.hpp"

#include <algorithm>
#include <random>

#include "mst/error.hpp"

namespace mst {

namespace {

// Marks up to `cap` members of each group, chosen uniformly.
template <typename Key>
std::vector<bool> select(const std::vector<Key>& keys, int cap, std::uint64_t seed) {
  if (cap <= 0) throw ValidationError("balance cap must be > 0");
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) groups[keys[i]].push_back(i);
  std::vector<bool> keep(keys.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [key, idx] : groups) {
    const std::size_t n = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cap));
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t j = d + static_cast<std::size_t>(rng() % (idx.size() - d));
      std::swap(idx[d], idx[j]);
      keep[idx[d]] = true;
    }
  }
  return keep;
}

}  // namespace

std::vector<ManifestRecord> balance_per_language(const std::vector<ManifestRecord>& records, int cap,
                                                 std::uint64_t seed) {
  std::vector<std::string> keys;
  for (const auto& r : records) keys.push_back(r.lang);
  const auto keep = select(keys, cap, seed);
  std::vector<ManifestRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(records[i]);
  return out;
}

std::vector<InstructionSample> balance_per_direction(const std::vector<InstructionSample>& samples, int cap,
                                                     std::uint64_t seed) {
  std::vector<Direction> keys;
  for (const auto& s : samples) {
    if (!s.tgt) throw ValidationError("per-direction balancing needs samples with a target language");
    keys.emplace_back(s.src, *s.tgt);
  }
  const auto keep = select(keys, cap, seed);
  std::vector<InstructionSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (keep[i]) out.push_back(samples[i]);
  return out;
}

std::map<std::string, int> count_per_language(const std::vector<ManifestRecord>& records) {
  std::map<std::string, int> out;
  for (const auto& r : records) ++out[r.lang];
  return out;
}

std::map<Direction, int> count_per_direction(const std::vector<InstructionSample>& samples) {
  std::map<Direction, int> out;
  for (const auto& s : samples)
    if (s.tgt) ++out[{s.src, *s.tgt}];
  return out;
}

}  // namespace mst
