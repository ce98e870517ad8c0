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
#include <map>
#include <string>
#include <vector>

#include "mst/manifest.hpp"
#include "mst/tasks.hpp"

namespace mst {

// Keeps min(count, cap) records per language via a seeded uniform draw
// without replacement; survivors keep their input order.
std::vector<ManifestRecord> balance_per_language(const std::vector<ManifestRecord>& records, int cap,
                                                 std::uint64_t seed);

// Same rule per ordered (src, tgt) direction.
std::vector<InstructionSample> balance_per_direction(const std::vector<InstructionSample>& samples, int cap,
                                                     std::uint64_t seed);

std::map<std::string, int> count_per_language(const std::vector<ManifestRecord>& records);
std::map<Direction, int> count_per_direction(const std::vector<InstructionSample>& samples);

}  // namespace mst
