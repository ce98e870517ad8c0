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

#include "mst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

namespace {

std::map<std::vector<int>, int> ngram_counts(const std::vector<int>& s, std::size_t n) {
  std::map<std::vector<int>, int> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[std::vector<int>(s.begin() + i, s.begin() + i + n)];
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references) {
  if (hypotheses.size() != references.size()) {
    throw ValidationError("bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                          std::to_string(references.size()) + " references");
  }
  constexpr int kMaxOrder = 4;
  double matched[kMaxOrder] = {}, total[kMaxOrder] = {};
  double hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& h = hypotheses[i];
    const auto& r = references[i];
    hyp_len += static_cast<double>(h.size());
    ref_len += static_cast<double>(r.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [gram, c] : hc) {
        auto it = rc.find(gram);
        matched[n - 1] += std::min(c, it == rc.end() ? 0 : it->second);
        total[n - 1] += c;
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0;
  int orders = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0) continue;
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
    ++orders;
  }
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / orders);
}

double spbleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
              const Tokenizer& tok) {
  if (hypotheses.size() != references.size()) {
    throw ValidationError("spbleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                          std::to_string(references.size()) + " references");
  }
  std::vector<std::vector<int>> h, r;
  for (const auto& s : hypotheses) h.push_back(tok.encode(s));
  for (const auto& s : references) r.push_back(tok.encode(s));
  return corpus_bleu(h, r);
}

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double wer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) throw ValidationError("wer: hypothesis/reference count mismatch");
  std::size_t edits = 0, n = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto r = words(references[i]);
    edits += edit_distance(words(hypotheses[i]), r);
    n += r.size();
  }
  if (n == 0) throw ValidationError("wer: reference corpus is empty");
  return static_cast<double>(edits) / static_cast<double>(n);
}

}  // namespace mst
