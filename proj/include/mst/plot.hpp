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

#include <map>
#include <string>
#include <vector>

#include "mst/evaluate.hpp"

namespace mst {

// Source languages on rows, targets on columns; diagonal and missing cells
// are grey. Values are expected in [0, 100].
std::string heatmap_svg(const DirectionMatrix& m, const std::vector<std::string>& languages, const std::string& title);

std::string bar_chart_svg(const std::map<std::string, double>& values, const std::string& title,
                          double max_value = 100.0);

// Mean score per source language.
std::map<std::string, double> per_source_mean(const DirectionMatrix& m);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace mst
