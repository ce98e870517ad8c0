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


#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "mst/error.hpp"
#include "mst/llm.hpp"

using namespace mst;
using mst::testing::check_params;
using mst::testing::random_mat;

namespace {

PipelineConfig tiny() {
  PipelineConfig c = toy_profile();
  c.llm_dim = 8;
  c.llm_layers = 2;
  c.llm_heads = 2;
  c.llm_kv_heads = 1;
  c.llm_head_dim = 4;
  c.llm_ffn = 8;
  c.vocab_size = 80;
  c.max_target_len = 12;
  return c;
}

LoraConfig lora_all() {
  LoraConfig l;
  l.rank = 2;
  l.alpha = 4.0;
  l.targets = {"q", "k", "v", "o"};
  return l;
}

// Gives every LoRA B a random value so the delta is non-zero.
void perturb_lora(LlmWeights& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto* p : w.lora_parameters()) {
    if (p->name().ends_with(".b")) p->mutable_value() = random_mat(rng, p->value().rows(), p->value().cols(), 0.3);
  }
}

Mat tape_logits(LanguageModel& m, const Mat& x) {
  Tape t(false);
  return m.logits(t, m.hidden(t, t.constant(x))).value();
}

// Greedy decoding by recomputing the whole sequence at every step.
std::vector<int> greedy_reference(LanguageModel& m, const Mat& prefix, int steps, int eos, bool ignore_eos) {
  std::vector<int> out;
  Mat x = prefix;
  for (int s = 0; s < steps; ++s) {
    const Mat logits = tape_logits(m, x);
    Eigen::Index tok = 0;
    logits.row(logits.rows() - 1).maxCoeff(&tok);
    if (tok == eos && !ignore_eos) break;
    out.push_back(static_cast<int>(tok));
    Mat next(x.rows() + 1, x.cols());
    next << x, m.weights().embed.value().row(tok);
    x = next;
  }
  return out;
}

}  // namespace

TEST_CASE("fuse places audio rows before text") {
  std::mt19937_64 rng(1);
  const Mat audio = random_mat(rng, 30, 8);
  PromptEmbedding text;
  text.values = random_mat(rng, 5, 8);
  const FusedInput f = fuse(audio, text);
  CHECK(f.boundary == 30);
  CHECK(f.values.rows() == 35);
  CHECK(f.values.topRows(30) == audio);
  CHECK(f.values.bottomRows(5) == text.values);
  text.values = random_mat(rng, 5, 7);
  CHECK_THROWS_AS(fuse(audio, text), ShapeError);
  CHECK(fuse(audio, PromptEmbedding{}).values.rows() == 30);
}

TEST_CASE("lora targets parse and validate") {
  CHECK(parse_lora_target("q") == LoraTarget::kQ);
  CHECK(parse_lora_target("o") == LoraTarget::kO);
  CHECK_FALSE(parse_lora_target("gate").has_value());
  CHECK(std::string(lora_target_name(LoraTarget::kV)) == "v");
  LoraConfig bad;
  bad.targets = {"q", "ffn"};
  CHECK_THROWS_AS(init_llm_weights(tiny(), bad, 1), ValidationError);
}

TEST_CASE("fresh LoRA deltas are exactly zero") {
  const PipelineConfig c = tiny();
  LoraConfig off = lora_all();
  off.enabled = false;
  LanguageModel with(c, lora_all(), init_llm_weights(c, lora_all(), 4));
  LanguageModel without(c, off, init_llm_weights(c, off, 4));
  std::mt19937_64 rng(2);
  const Mat x = random_mat(rng, 6, c.llm_dim);
  CHECK(tape_logits(with, x) == tape_logits(without, x));
}

TEST_CASE("merged engine weights equal the unmerged tape") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 5));
  perturb_lora(m.weights(), 9);
  std::mt19937_64 rng(3);
  const Mat x = random_mat(rng, 7, c.llm_dim);
  const GenerationEngine engine(m);
  CHECK((engine.prefill_logits(x) - tape_logits(m, x)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kv-cache decoding equals full recomputation") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 6));
  perturb_lora(m.weights(), 10);
  const GenerationEngine engine(m);
  std::mt19937_64 rng(4);
  for (int len : {1, 4, 9}) {
    const Mat prefix = random_mat(rng, len, c.llm_dim);
    StopRule stop;
    stop.max_new_tokens = 10;
    stop.ignore_eos = true;
    CHECK(engine.generate(prefix, stop) == greedy_reference(m, prefix, 10, stop.eos_id, true));
  }
}

TEST_CASE("batched decoding equals per-item decoding") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 7));
  const GenerationEngine engine(m);
  std::mt19937_64 rng(5);
  std::vector<Mat> prefixes;
  for (int len : {3, 1, 6, 2}) prefixes.push_back(random_mat(rng, len, c.llm_dim));
  StopRule stop;
  stop.max_new_tokens = 8;
  // Make EOS likely for some items by picking a common token as "eos".
  stop.eos_id = engine.generate(prefixes[1], StopRule{-1, 1, false}).front();
  const auto batch = engine.generate_batch(prefixes, stop);
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    CHECK(batch[i] == engine.generate(prefixes[i], stop));
    CHECK(batch[i] == greedy_reference(m, prefixes[i], 8, stop.eos_id, false));
  }
}

TEST_CASE("stop rules bound the output") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 8));
  const GenerationEngine engine(m);
  std::mt19937_64 rng(6);
  const Mat prefix = random_mat(rng, 3, c.llm_dim);
  StopRule stop;
  stop.max_new_tokens = 5;
  stop.ignore_eos = true;
  const auto first = engine.generate(prefix, stop);
  CHECK(first.size() == 5);
  stop.ignore_eos = false;
  stop.eos_id = first[0];
  CHECK(engine.generate(prefix, stop).empty());
  stop.max_new_tokens = 0;
  CHECK(engine.generate(prefix, stop).empty());
  CHECK_THROWS_AS(engine.generate(Mat::Zero(2, c.llm_dim + 1), StopRule{}), ShapeError);
}

TEST_CASE("hidden states are causal") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 9));
  std::mt19937_64 rng(7);
  Mat x = random_mat(rng, 6, c.llm_dim);
  const Mat before = tape_logits(m, x);
  x.row(4) = random_mat(rng, 1, c.llm_dim);
  const Mat after = tape_logits(m, x);
  CHECK(before.topRows(4) == after.topRows(4));
  CHECK(before.row(4) != after.row(4));
}

TEST_CASE("teacher-forced loss equals the shifted-sequence cross entropy") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 10));
  std::mt19937_64 rng(8);
  const Mat prefix = random_mat(rng, 4, c.llm_dim);
  const std::vector<int> targets{7, 12, 1};
  const std::vector<int> mask{1, 0, 1};
  Tape t(false);
  const LmOutput out = m.forward(t, t.constant(prefix), targets, mask);

  Mat x(6, c.llm_dim);
  x << prefix, m.weights().embed.value().row(7), m.weights().embed.value().row(12);
  const Mat logits = tape_logits(m, x);
  double expect = 0.0;
  for (int j : {0, 2}) {
    const Eigen::RowVectorXd row = logits.row(3 + j);
    expect += std::log((row.array() - row.maxCoeff()).exp().sum()) + row.maxCoeff() - row(targets[j]);
  }
  CHECK(out.loss.value()(0, 0) == doctest::Approx(expect / 2).epsilon(1e-12));
  CHECK(out.logits.rows() == 3);
}

TEST_CASE("forward rejects malformed targets") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 11));
  Tape t(false);
  Var prefix = t.constant(Mat::Zero(2, c.llm_dim));
  CHECK_THROWS_AS(m.forward(t, prefix, std::vector<int>(13, 5), std::vector<int>(13, 1)), ValidationError);
  CHECK_THROWS_AS(m.forward(t, prefix, {5, 6}, {1}), ShapeError);
  CHECK_THROWS_AS(m.embed({c.vocab_size}), ShapeError);
}

TEST_CASE("LoRA and base gradients match finite differences") {
  const PipelineConfig c = tiny();
  LanguageModel m(c, lora_all(), init_llm_weights(c, lora_all(), 12));
  perturb_lora(m.weights(), 13);
  std::mt19937_64 rng(9);
  const Mat prefix = random_mat(rng, 3, c.llm_dim);
  auto graph = [&](Tape& t) { return m.forward(t, t.constant(prefix), {4, 9}, {1, 1}).logits; };
  CHECK(check_params(graph, m.weights().lora_parameters()).max_rel < 1e-6);
  CHECK(check_params(graph, {&m.weights().embed}).max_rel < 1e-6);
}

TEST_CASE("closed-form counts match the tensors") {
  const PipelineConfig c = tiny();
  for (LoraConfig l : {lora_all(), LoraConfig{}}) {
    LlmWeights w = init_llm_weights(c, l, 1);
    const ParamBudget b = llm_param_count(c, l);
    CHECK(b.find("LLM")->total == count_parameters(w.base_parameters()));
    CHECK(b.find("LLM LoRA")->total == count_parameters(w.lora_parameters()));
    CHECK(b.find("LLM")->trainable == 0);
  }
}

TEST_CASE("large-scale LoRA budget") {
  // Rank 16 on q and v of a 42-layer, 3584-wide GQA decoder.
  CHECK(llm_param_count(large_profile(), LoraConfig{}).find("LLM LoRA")->total == 8945664);
}
