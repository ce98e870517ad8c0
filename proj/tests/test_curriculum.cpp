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

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "mst/balance.hpp"
#include "mst/checkpoint.hpp"
#include "mst/curriculum.hpp"
#include "mst/error.hpp"
#include "mst/pipeline.hpp"
#include "mst/synthetic.hpp"

using namespace mst;
namespace fs = std::filesystem;

namespace {

std::vector<ManifestRecord> records_with_counts(const std::map<std::string, int>& counts) {
  std::vector<ManifestRecord> out;
  for (const auto& [lang, n] : counts) {
    for (int i = 0; i < n; ++i) {
      ManifestRecord r;
      r.id = lang + std::to_string(i);
      r.lang = lang;
      r.transcript = "w";
      out.push_back(r);
    }
  }
  std::shuffle(out.begin(), out.end(), std::mt19937_64(3));
  return out;
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& full) {
  std::size_t j = 0;
  for (const auto& x : full)
    if (j < sub.size() && sub[j] == x) ++j;
  return j == sub.size();
}

std::vector<std::string> ids(const std::vector<ManifestRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.id);
  return out;
}

RunConfig fast_config() {
  RunConfig cfg = default_run_config("toy");
  cfg.synthetic.languages = {"eng", "cmn", "deu", "swh"};
  cfg.synthetic.utterances_per_lang = 8;
  cfg.schedule.llm_pretrain_steps = 2;
  cfg.schedule.llm_pretrain_batch = 2;
  cfg.schedule.phase1_steps_per_stage = 1;
  cfg.schedule.phase2_steps = 1;
  cfg.schedule.phase3_smt_steps = 1;
  cfg.schedule.phase3_srt_steps = 1;
  cfg.schedule.phase4_steps = 1;
  cfg.schedule.phase2_cap = 4;
  cfg.schedule.phase4_cap = 2;
  cfg.trainer.batch_size = 2;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mst_test_curriculum_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("per-language balancing keeps min(available, cap) in input order") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, int> counts;
    for (const char* l : {"eng", "deu", "fra", "jpn"}) counts[l] = static_cast<int>(rng() % 12);
    const auto records = records_with_counts(counts);
    const int cap = 1 + static_cast<int>(rng() % 8);
    const auto kept = balance_per_language(records, cap, rng());
    const auto got = count_per_language(kept);
    for (const auto& [l, n] : counts) {
      const int expect = std::min(n, cap);
      CHECK((expect == 0 ? !got.count(l) : got.at(l) == expect));
    }
    CHECK(is_subsequence(ids(kept), ids(records)));
  }
}

TEST_CASE("balancing is seeded") {
  const auto records = records_with_counts({{"eng", 50}, {"deu", 50}});
  CHECK(balance_per_language(records, 10, 1) == balance_per_language(records, 10, 1));
  CHECK(balance_per_language(records, 10, 1) != balance_per_language(records, 10, 2));
  CHECK_THROWS_AS(balance_per_language(records, 0, 1), ValidationError);
}

TEST_CASE("per-direction balancing caps every ordered pair") {
  SyntheticSpec spec;
  spec.languages = {"eng", "deu", "fra", "jpn"};
  spec.utterances_per_lang = 30;
  const auto records = generate_synthetic_corpus(spec);
  const Tokenizer tok = Tokenizer::build(records, LanguageRegistry::builtin(), 512);
  const auto samples = build_samples(records, TaskKind::kSrt, tok);
  const auto available = count_per_direction(samples);
  for (int cap : {1, 5, 12, 1000}) {
    const auto kept = balance_per_direction(samples, cap, 4);
    const auto got = count_per_direction(kept);
    CHECK(got.size() == available.size());
    for (const auto& [d, n] : available) CHECK(got.at(d) == std::min(n, cap));
  }
  CHECK_THROWS_AS(balance_per_direction(build_samples(records, TaskKind::kAsr, tok), 3, 1), ValidationError);
}

TEST_CASE("expansion schedule starts from eng and cmn and nests") {
  const auto& reg = LanguageRegistry::builtin();
  const auto sets = expansion_schedule(reg, {2, 28, 44, 70});
  REQUIRE(sets.size() == 4);
  CHECK(sets[0] == LanguageSet{"cmn", "eng"});
  const auto small = reg.small_codes();
  CHECK(std::set<std::string>(sets[1].begin(), sets[1].end()) == std::set<std::string>(small.begin(), small.end()));
  CHECK(sets[3] == reg.codes());
  check_nested(sets);
}

TEST_CASE("languages beyond the small set are added by data volume") {
  const auto& reg = LanguageRegistry::builtin();
  std::vector<std::string> rest;
  for (const auto& c : reg.codes())
    if (!reg.at(c).small_set) rest.push_back(c);
  std::map<std::string, int> counts{{rest[5], 100}, {rest[9], 90}, {rest[0], 80}};
  const auto sets = expansion_schedule(reg, {28, 30, 31}, counts);
  std::set<std::string> added2(sets[1].begin(), sets[1].end()), added3(sets[2].begin(), sets[2].end());
  for (const auto& c : sets[0]) {
    added2.erase(c);
    added3.erase(c);
  }
  CHECK(added2 == std::set<std::string>{rest[5], rest[9]});
  CHECK(added3 == std::set<std::string>{rest[5], rest[9], rest[0]});
}

TEST_CASE("bad stage lists are rejected") {
  const auto& reg = LanguageRegistry::builtin();
  CHECK_THROWS_AS(expansion_schedule(reg, {2, 2}), ValidationError);
  CHECK_THROWS_AS(expansion_schedule(reg, {0}), ValidationError);
  CHECK_THROWS_AS(expansion_schedule(reg, {71}), ValidationError);
  CHECK_THROWS_AS(check_nested({{"eng", "cmn"}, {"eng", "deu"}}), ValidationError);
}

TEST_CASE("default plan resolves stages against the corpus languages") {
  const RunConfig cfg = default_run_config("toy");
  const auto plan = default_plan(cfg, LanguageRegistry::builtin(), cfg.synthetic.languages, {});
  REQUIRE(plan.phases.size() == 5);
  const std::vector<std::string> names{"1", "2", "3-smt", "3-srt", "4"};
  const std::vector<std::string> sources{"init", "1", "2", "3-smt", "3-srt"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(plan.phases[i].name == names[i]);
    CHECK(plan.phases[i].source == sources[i]);
  }
  const auto& p1 = plan.phases[0];
  REQUIRE(p1.language_sets.size() == 3);
  CHECK(p1.language_sets[0] == LanguageSet{"cmn", "eng"});
  CHECK(p1.language_sets[1] == LanguageSet{"cmn", "deu", "eng", "fra", "jpn"});
  CHECK(p1.language_sets[2].size() == 6);
  CHECK(plan.phases[1].cap == cfg.schedule.phase2_cap);
  CHECK(plan.phases[1].cap_unit == CapUnit::kPerLanguage);
  CHECK(plan.phases[4].cap == cfg.schedule.phase4_cap);
  CHECK(plan.phases[4].cap_unit == CapUnit::kPerDirection);
  CHECK(phase_task(plan.phases[2].kind) == TaskKind::kSmt);
  CHECK_THROWS_AS(find_phase(plan, "5"), ValidationError);
}

TEST_CASE("ablations drop phases and rechain sources") {
  const RunConfig cfg = default_run_config("toy");
  const auto plan = default_plan(cfg, LanguageRegistry::builtin(), cfg.synthetic.languages, {});
  auto names = [](const CurriculumPlan& p) {
    std::vector<std::string> out;
    for (const auto& ph : p.phases) out.push_back(ph.name + "<" + ph.source);
    return out;
  };
  CHECK(names(apply_ablation(plan, {true, false, false})) ==
        std::vector<std::string>{"3-smt<init", "3-srt<3-smt", "4<3-srt"});
  CHECK(names(apply_ablation(plan, {false, true, false})) == std::vector<std::string>{"1<init", "2<1", "4<2"});
  CHECK(apply_ablation(plan, {false, false, true}).phases.size() == 5);
  CHECK(apply_ablation(plan, {true, false, false}).variant == "skip_asr");
  CHECK(Ablation{false, true, true}.tag() == "skip_smt_srt+no_lora");
  CHECK(Ablation{}.tag() == "full");
  CHECK_THROWS_AS(apply_ablation(plan, {true, true, false}), ValidationError);
}

TEST_CASE("warmup is linear then constant") {
  TrainerConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.warmup_steps = 4;
  CHECK(lr_at(cfg, 0) == doctest::Approx(0.25));
  CHECK(lr_at(cfg, 3) == doctest::Approx(1.0));
  CHECK(lr_at(cfg, 100) == doctest::Approx(1.0));
  cfg.warmup_steps = 0;
  CHECK(lr_at(cfg, 0) == 1.0);
}

TEST_CASE("gradient clipping bounds the global norm") {
  Parameter a("a", Mat::Zero(1, 2)), b("b", Mat::Zero(1, 1));
  a.mutable_grad() = (Mat(1, 2) << 3.0, 0.0).finished();
  b.mutable_grad() = (Mat(1, 1) << 4.0).finished();
  CHECK(clip_gradients({&a, &b}, 1.0) == doctest::Approx(5.0));
  CHECK(std::sqrt(a.grad().squaredNorm() + b.grad().squaredNorm()) == doctest::Approx(1.0));
  CHECK(clip_gradients({&a, &b}, 10.0) == doctest::Approx(1.0));
}

TEST_CASE("AdamW first step moves each weight by lr against the gradient sign") {
  TrainerConfig cfg;
  cfg.weight_decay = 0.0;
  Parameter p("p", (Mat(1, 3) << 1.0, 2.0, 3.0).finished());
  Parameter frozen("f", Mat::Ones(1, 2), false);
  p.mutable_grad() = (Mat(1, 3) << 0.5, -2.0, 1e-3).finished();
  AdamW opt({&p, &frozen}, cfg);
  opt.step(0.1);
  CHECK(p.value()(0, 0) == doctest::Approx(0.9));
  CHECK(p.value()(0, 1) == doctest::Approx(2.1));
  CHECK(p.value()(0, 2) == doctest::Approx(2.9).epsilon(1e-4));
  CHECK(frozen.value() == Mat::Ones(1, 2));
}

TEST_CASE("AdamW weight decay is decoupled from the gradient") {
  TrainerConfig cfg;
  cfg.weight_decay = 0.5;
  Parameter p("p", Mat::Constant(1, 1, 2.0));
  p.mutable_grad() = Mat::Constant(1, 1, 1.0);
  AdamW opt({&p}, cfg);
  opt.step(0.1);
  CHECK(p.value()(0, 0) == doctest::Approx(2.0 * (1 - 0.05) - 0.1));
}

TEST_CASE("train loop visits every item once per epoch and is seeded") {
  Parameter w("w", Mat::Zero(1, 1));
  TrainerConfig cfg;
  cfg.batch_size = 3;
  cfg.seed = 5;
  auto run = [&](std::vector<std::size_t>& seen) {
    return train_loop({&w}, 6, 4, cfg, "t", [&](std::size_t i, double weight) {
      seen.push_back(i);
      w.mutable_grad() = Mat::Constant(1, 1, weight);
      return static_cast<double>(i);
    });
  };
  std::vector<std::size_t> a, b;
  const auto log = run(a);
  run(b);
  CHECK(a == b);
  CHECK(log.size() == 4);
  CHECK(std::set<std::size_t>(a.begin(), a.begin() + 6).size() == 6);
  CHECK(std::set<std::size_t>(a.begin() + 6, a.end()).size() == 6);
}

TEST_CASE("metrics csv writes one header") {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  const std::string path = (dir / "m.csv").string();
  {
    MetricsCsv m(path);
    m.write({0, "1", 2.5, 0.001});
  }
  {
    MetricsCsv m(path);
    m.write({1, "1", 2.0, 0.002});
  }
  std::ifstream f(path);
  std::string header, l1, l2;
  std::getline(f, header);
  std::getline(f, l1);
  std::getline(f, l2);
  CHECK(header == "step,phase,loss,lr");
  CHECK(l1 == "0,1,2.5,0.001");
  CHECK(l2 == "1,1,2,0.002");
  fs::remove_all(dir);
}

TEST_CASE("a small curriculum freezes, caps and chains") {
  const RunConfig cfg = fast_config();
  const auto registry = registry_for(cfg);
  const Corpus corpus = make_corpus(cfg, registry);
  const SpeechTranslationModel m0 = prepare_initial_model(cfg, corpus.train, registry);
  EncoderCache cache(cfg.synthetic.words_per_lang);
  const auto plan = default_plan(cfg, registry, languages_of(corpus.train, registry), count_per_language(corpus.train));
  const fs::path out = scratch("run");
  const auto results = run_curriculum(plan, m0, corpus.train, cfg, cache, out.string());
  REQUIRE(results.size() == 5);

  SpeechTranslationModel init = m0;
  std::string prev = state_hash(init);
  for (const auto& r : results) {
    CHECK(r.meta.source_hash == prev);
    const Checkpoint ck = load_checkpoint((out / ("phase-" + r.spec.name)).string());
    CHECK(ck.meta.state_hash == r.meta.state_hash);
    prev = r.meta.state_hash;
  }

  SpeechTranslationModel last = results.back().model;
  auto before = init.encoder_parameters();
  auto after = last.encoder_parameters();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->value() == after[i]->value());
  before = init.llm_parameters();
  after = last.llm_parameters();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->value() == after[i]->value());

  const auto& p2 = results[1].meta.extra;
  for (const auto& [lang, n] : p2["available_per_language"].items()) {
    CHECK(p2["kept_per_language"][lang].get<int>() == std::min(n.get<int>(), cfg.schedule.phase2_cap));
  }
  const auto& p4 = results[4].meta.extra;
  for (const auto& [dir, n] : p4["available_per_direction"].items()) {
    CHECK(p4["kept_per_direction"][dir].get<int>() == std::min(n.get<int>(), cfg.schedule.phase4_cap));
  }
  fs::remove_all(out);
}

TEST_CASE("checkpoints round-trip, refuse overwrites and detect tampering") {
  RunConfig cfg = fast_config();
  const auto registry = registry_for(cfg);
  const Corpus corpus = make_corpus(cfg, registry);
  SpeechTranslationModel m = init_model(cfg.pipeline, cfg.lora, Tokenizer::build(corpus.train, registry, 512));
  const fs::path dir = scratch("ckpt");
  PhaseMeta meta;
  meta.phase = "init";
  save_checkpoint(dir.string(), cfg, m, meta);
  CHECK(meta.state_hash == state_hash(m));
  CHECK(meta.state_hash.size() == 64);

  Checkpoint ck = load_checkpoint(dir.string());
  CHECK(state_hash(ck.model) == meta.state_hash);
  CHECK(ck.model.tokenizer == m.tokenizer);
  CHECK(to_json(ck.config) == to_json(cfg));

  CHECK_THROWS_AS(save_checkpoint(dir.string(), cfg, m, meta), ValidationError);
  m.adapter_parameters().front()->mutable_value()(0, 0) += 1.0;
  save_checkpoint(dir.string(), cfg, m, meta, true);
  CHECK(load_checkpoint(dir.string()).meta.state_hash == state_hash(m));
  for (const auto& e : fs::directory_iterator(dir.parent_path()))
    CHECK(e.path().filename().string().find(dir.filename().string() + ".tmp") == std::string::npos);

  {
    std::fstream f(dir / "adapter" / "tensors.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16);
    const char junk[8] = {1, 2, 3, 4, 5, 6, 7, 8};
    f.write(junk, 8);
  }
  CHECK_THROWS_AS(load_checkpoint(dir.string()), ValidationError);
  CHECK_THROWS_AS(load_checkpoint((dir / "nope").string()), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("no_lora removes the adapters from the trainable set") {
  RunConfig cfg = fast_config();
  const auto registry = registry_for(cfg);
  const Corpus corpus = make_corpus(cfg, registry);
  SpeechTranslationModel m = init_model(cfg.pipeline, cfg.lora, Tokenizer::build(corpus.train, registry, 512));
  m.apply_freeze();
  CHECK(count_trainable(m.all_parameters()) ==
        count_parameters(m.adapter_parameters()) + count_parameters(m.lora_parameters()));
  apply_ablation(m, Ablation{false, false, true});
  CHECK(m.lora_parameters().empty());
  CHECK(count_trainable(m.all_parameters()) == count_parameters(m.adapter_parameters()));
}
