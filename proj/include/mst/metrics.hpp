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

#include <string>
#include <vector>

#include "mst/tokenizer.hpp"

namespace mst {

// Corpus BLEU-4 over id sequences: clipped n-gram precisions for the orders
// the hypotheses actually contain, geometric mean, exponential brevity
// penalty. No smoothing, so any zero match count gives 0. Returns [0, 100].
double corpus_bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references);

// spBLEU: corpus BLEU over the tokenizer's pieces.
double spbleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
              const Tokenizer& tok);

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Corpus WER over whitespace tokens: total edits / total reference tokens.
double wer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

}  // namespace mst
