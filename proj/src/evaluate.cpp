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

#include "mst/evaluate.hpp"

#include <set>
#include <sstream>

#include "mst/error.hpp"
#include "mst/metrics.hpp"

namespace mst {

void DirectionMatrix::set(const Direction& d, double v) {
  if (d.first == d.second) throw ValidationError("direction " + d.first + "->" + d.second + " has no score");
  scores[d] = v;
}

double DirectionMatrix::mean() const {
  if (scores.empty()) return 0.0;
  double s = 0;
  for (const auto& [d, v] : scores) s += v;
  return s / static_cast<double>(scores.size());
}

std::vector<std::string> DirectionMatrix::languages() const {
  std::set<std::string> s;
  for (const auto& [d, v] : scores) {
    s.insert(d.first);
    s.insert(d.second);
  }
  return {s.begin(), s.end()};
}

ScoreBins bin_scores(const DirectionMatrix& m) {
  ScoreBins b;
  for (const auto& [d, x] : m.scores) {
    if (x >= 90) ++b.ge90;
    else if (x >= 80) ++b.ge80;
    else if (x >= 70) ++b.ge70;
    else ++b.lt70;
    ++b.total;
  }
  return b;
}

EvalReport evaluate_matrix(SpeechTranslationModel& model, EncoderCache& cache, const std::vector<ManifestRecord>& test,
                           const std::vector<Direction>& directions, int batch) {
  std::map<Direction, std::vector<InstructionSample>> by_dir;
  for (auto& s : build_samples(test, TaskKind::kSrt, model.tokenizer)) by_dir[{s.src, *s.tgt}].push_back(std::move(s));

  std::vector<Direction> wanted = directions;
  if (wanted.empty())
    for (const auto& [d, v] : by_dir) wanted.push_back(d);

  EvalReport report;
  std::map<std::string, std::vector<std::string>> asr_hyp, asr_ref;
  int exact_total = 0;
  for (const auto& d : wanted) {
    auto it = by_dir.find(d);
    if (it == by_dir.end() || it->second.empty()) {
      report.absent.push_back(d);
      continue;
    }
    const auto& samples = it->second;
    const auto outputs = generate_outputs(model, cache, samples, batch);
    std::vector<std::string> hyps, refs;
    int exact = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const SrtParts ref = parse_srt_output(s.target_ids, model.tokenizer, s.src, *s.tgt);
      SrtParts hyp;
      try {
        hyp = parse_srt_output(outputs[i], model.tokenizer, s.src, *s.tgt);
      } catch (const ParseError& e) {
        hyp.transcript = e.raw_text;
        ++report.parse_failures;
      }
      hyps.push_back(hyp.translation);
      refs.push_back(ref.translation);
      exact += hyp.translation == ref.translation ? 1 : 0;
      asr_hyp[s.src].push_back(hyp.transcript);
      asr_ref[s.src].push_back(ref.transcript);
    }
    report.spbleu.set(d, spbleu(hyps, refs, model.tokenizer));
    report.exact_match.set(d, 100.0 * exact / static_cast<double>(samples.size()));
    report.samples += static_cast<int>(samples.size());
    exact_total += exact;
  }
  for (const auto& [lang, hyps] : asr_hyp) report.transcript_wer[lang] = wer(hyps, asr_ref[lang]);
  report.spbleu_bins = bin_scores(report.spbleu);
  report.exact_match_bins = bin_scores(report.exact_match);
  report.mean_exact_match = report.samples ? 100.0 * exact_total / report.samples : 0.0;
  return report;
}

nlohmann::json to_json(const DirectionMatrix& m) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [d, v] : m.scores) scores[d.first + "-" + d.second] = v;
  return {{"metric", m.metric}, {"languages", m.languages()}, {"scores", scores}, {"mean", m.mean()}};
}

namespace {

nlohmann::json bins_json(const ScoreBins& b) {
  return {{"x>=90", b.ge90}, {"90>x>=80", b.ge80}, {"80>x>=70", b.ge70}, {"x<70", b.lt70}, {"total", b.total}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json absent = nlohmann::json::array();
  for (const auto& d : r.absent) absent.push_back(d.first + "-" + d.second);
  return {{"spbleu", to_json(r.spbleu)},
          {"exact_match", to_json(r.exact_match)},
          {"bins", {{"spbleu", bins_json(r.spbleu_bins)}, {"exact_match", bins_json(r.exact_match_bins)}}},
          {"transcript_wer", r.transcript_wer},
          {"absent_directions", absent},
          {"samples", r.samples},
          {"parse_failures", r.parse_failures},
          {"mean_exact_match", r.mean_exact_match}};
}

std::string bins_csv(const std::vector<std::pair<std::string, ScoreBins>>& rows) {
  std::ostringstream out;
  out << "metric,x>=90,90>x>=80,80>x>=70,x<70,total\n";
  for (const auto& [name, b] : rows)
    out << name << ',' << b.ge90 << ',' << b.ge80 << ',' << b.ge70 << ',' << b.lt70 << ',' << b.total << '\n';
  return out.str();
}

std::vector<Direction> parse_directions(const std::string& spec) {
  std::vector<Direction> out;
  if (spec.empty() || spec == "all") return out;
  std::istringstream in(spec);
  for (std::string item; std::getline(in, item, ',');) {
    const auto dash = item.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 == item.size()) {
      throw ValidationError("bad direction '" + item + "' (expected src-tgt)");
    }
    out.emplace_back(item.substr(0, dash), item.substr(dash + 1));
    if (out.back().first == out.back().second) throw ValidationError("direction " + item + " has src == tgt");
  }
  return out;
}

}  // namespace mst
