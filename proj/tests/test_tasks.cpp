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
#include <set>

#include "mst/error.hpp"
#include "mst/language_registry.hpp"
#include "mst/synthetic.hpp"
#include "mst/tasks.hpp"
#include "mst/tokenizer.hpp"

using namespace mst;

namespace {

ManifestRecord rec(const std::string& id, const std::string& lang, const std::string& text,
                   std::map<std::string, std::string> tr) {
  ManifestRecord r;
  r.id = id;
  r.lang = lang;
  r.transcript = text;
  r.translations = std::move(tr);
  r.audio.path = id + ".wav";
  return r;
}

const std::vector<ManifestRecord>& corpus() {
  static const auto records = std::vector<ManifestRecord>{
      rec("a", "eng", "the cat sat", {{"deu", "die katze sass"}, {"fra", "le chat"}}),
      rec("b", "deu", "hallo welt", {{"eng", "hello world"}}),
      rec("c", "jpn", "ねこ が いる", {{"eng", "a cat is here"}}),
  };
  return records;
}

const Tokenizer& tok() {
  static const Tokenizer t = Tokenizer::build(corpus(), LanguageRegistry::builtin(), 512);
  return t;
}

}  // namespace

TEST_CASE("reserved ids and tag ids follow the registry") {
  const auto& t = tok();
  CHECK(t.piece(Tokenizer::kPad) == "<pad>");
  CHECK(t.piece(Tokenizer::kEos) == "</s>");
  CHECK(t.piece(Tokenizer::kUnk) == "<unk>");
  CHECK(t.num_tags() == 70);
  const auto codes = LanguageRegistry::builtin().codes();
  for (std::size_t i = 0; i < codes.size(); ++i) {
    CHECK(t.tag_id(codes[i]) == Tokenizer::kFirstTag + static_cast<int>(i));
    CHECK(t.piece(t.tag_id(codes[i])) == Tokenizer::tag_text(codes[i]));
    CHECK(t.tag_code(t.tag_id(codes[i])) == codes[i]);
  }
  CHECK_THROWS_AS(t.tag_id("qqq"), ValidationError);
  CHECK_THROWS_AS(t.tag_code(Tokenizer::kUnk), ValidationError);
}

TEST_CASE("known words are single pieces") {
  const auto ids = tok().encode("the cat sat");
  CHECK(ids.size() == 3);
  CHECK(tok().decode(ids) == "the cat sat");
  CHECK(tok().word_id("cat").has_value());
  CHECK_FALSE(tok().word_id("dog").has_value());
}

TEST_CASE("decode inverts encode for in-vocabulary text") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> atoms{"the", "cat", "sat", "hallo", "ねこ", "dog", "x", "<|eng|>", "Q!", "", " "};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += atoms[rng() % atoms.size()];
    }
    CAPTURE(s);
    CHECK(tok().decode(tok().encode(s)) == s);
  }
}

TEST_CASE("tag text in plain text never becomes a tag id") {
  for (int id : tok().encode("<|eng|><|deu|> cat")) CHECK_FALSE(tok().is_tag(id));
}

TEST_CASE("characters outside the vocabulary become unk") {
  const auto ids = tok().encode("cat \xC3\xA9");
  CHECK(ids.back() == Tokenizer::kUnk);
}

TEST_CASE("ids past the piece table decode as unk") {
  const int spare = tok().size() + 5;
  CHECK(tok().decode({tok().encode("cat").front(), spare}) == "cat<unk>");
  CHECK_THROWS_AS(tok().piece(spare), ValidationError);
}

TEST_CASE("vocabulary overflow is reported") {
  CHECK_THROWS_AS(Tokenizer::build(corpus(), LanguageRegistry::builtin(), 100), ValidationError);
}

TEST_CASE("tokenizer json round-trips") {
  const Tokenizer back = Tokenizer::from_json(tok().to_json());
  CHECK(back == tok());
  CHECK(back.encode("die katze sass") == tok().encode("die katze sass"));
  auto j = tok().to_json();
  j["format"] = "other";
  CHECK_THROWS_AS(Tokenizer::from_json(j), ValidationError);
  j = tok().to_json();
  j["pieces"][4] = "<|xxx|>";
  CHECK_THROWS_AS(Tokenizer::from_json(j), ValidationError);
}

TEST_CASE("instruction layouts") {
  const auto& t = tok();
  const auto& r = corpus()[0];
  const int eng = t.tag_id("eng"), deu = t.tag_id("deu");
  const auto transcript = t.encode(r.transcript);
  const auto translation = t.encode("die katze sass");

  const auto asr = build_sample(r, TaskKind::kAsr, std::nullopt, t);
  CHECK(asr.instruction_ids == std::vector<int>{eng});
  CHECK(asr.target_ids == transcript);

  const auto smt = build_sample(r, TaskKind::kSmt, "deu", t);
  std::vector<int> smt_instr = transcript;
  smt_instr.insert(smt_instr.end(), {eng, deu});
  CHECK(smt.instruction_ids == smt_instr);
  CHECK(smt.target_ids == translation);

  const auto srt = build_sample(r, TaskKind::kSrt, "deu", t);
  std::vector<int> srt_target = transcript;
  srt_target.insert(srt_target.end(), {eng, deu});
  srt_target.insert(srt_target.end(), translation.begin(), translation.end());
  CHECK(srt.instruction_ids == std::vector<int>{eng, deu});
  CHECK(srt.target_ids == srt_target);
  CHECK(srt.tgt == "deu");

  for (const auto* s : {&asr, &smt, &srt}) {
    CHECK(s->loss_mask.size() == s->target_ids.size());
    CHECK(std::all_of(s->loss_mask.begin(), s->loss_mask.end(), [](int m) { return m == 1; }));
  }
}

TEST_CASE("missing translations name the direction") {
  try {
    build_sample(corpus()[1], TaskKind::kSrt, "jpn", tok());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "record b has no translation for direction deu->jpn");
  }
  CHECK_THROWS_AS(build_sample(corpus()[1], TaskKind::kSmt, std::nullopt, tok()), ValidationError);
}

TEST_CASE("build_samples yields one sample per available direction") {
  CHECK(build_samples(corpus(), TaskKind::kAsr, tok()).size() == 3);
  CHECK(build_samples(corpus(), TaskKind::kSrt, tok()).size() == 4);
  CHECK(build_samples(corpus(), TaskKind::kSmt, tok()).size() == 4);
}

TEST_CASE("task names parse case-insensitively") {
  CHECK(parse_task("srt") == TaskKind::kSrt);
  CHECK(parse_task("Asr") == TaskKind::kAsr);
  CHECK(std::string(task_name(TaskKind::kSmt)) == "SMT");
  CHECK_THROWS_AS(parse_task("tts"), ValidationError);
}

TEST_CASE("srt output splits at the first tag pair") {
  const SrtParts p = parse_srt_output("a b<|eng|><|deu|>c d", "eng", "deu");
  CHECK(p.transcript == "a b");
  CHECK(p.translation == "c d");
  CHECK(parse_srt_output("<|eng|><|deu|>", "eng", "deu") == SrtParts{"", ""});
  CHECK(parse_srt_output("x<|eng|><|deu|>y<|eng|><|deu|>z", "eng", "deu").translation == "y<|eng|><|deu|>z");
}

TEST_CASE("missing tag pairs raise ParseError with the raw text") {
  try {
    parse_srt_output("a b<|deu|><|eng|>c", "eng", "deu");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.raw_text == "a b<|deu|><|eng|>c");
  }
  CHECK_THROWS_AS(parse_srt_output(std::vector<int>{tok().tag_id("eng")}, tok(), "eng", "deu"), ParseError);
}

TEST_CASE("id-level parsing ignores tag text spelled in characters") {
  const auto& t = tok();
  std::vector<int> ids = t.encode("<|eng|><|deu|>x");
  ids.push_back(t.tag_id("eng"));
  ids.push_back(t.tag_id("deu"));
  const auto tail = t.encode("cat");
  ids.insert(ids.end(), tail.begin(), tail.end());
  const SrtParts p = parse_srt_output(ids, t, "eng", "deu");
  CHECK(p.transcript == "<|eng|><|deu|>x");
  CHECK(p.translation == "cat");
}

TEST_CASE("srt targets round-trip on synthetic samples") {
  SyntheticSpec spec;
  spec.languages = {"eng", "cmn", "deu", "fra", "jpn", "swh"};
  spec.utterances_per_lang = 30;
  const auto records = generate_synthetic_corpus(spec);
  const Tokenizer t = Tokenizer::build(records, LanguageRegistry::builtin(), 512);
  for (const auto& s : build_samples(records, TaskKind::kSrt, t)) {
    const auto& r = *std::find_if(records.begin(), records.end(), [&](const auto& x) { return x.id == s.record_id; });
    const SrtParts expect{r.transcript, r.translations.at(*s.tgt)};
    CHECK(parse_srt_output(render(s.target_ids, t), s.src, *s.tgt) == expect);
    CHECK(parse_srt_output(s.target_ids, t, s.src, *s.tgt) == expect);
  }
}

TEST_CASE("direction enumeration") {
  const auto& reg = LanguageRegistry::builtin();
  CHECK(enumerate_directions(reg.codes()).size() == 4830);
  CHECK(enumerate_directions(reg.small_codes()).size() == 756);
  const auto d = enumerate_directions({"eng", "deu", "fra"});
  CHECK(d.size() == 6);
  CHECK(std::set<Direction>(d.begin(), d.end()).size() == 6);
  for (const auto& [s, t] : d) CHECK(s != t);
  CHECK_THROWS_AS(enumerate_directions({"eng"}), ValidationError);
  CHECK_THROWS_AS(enumerate_directions({"eng", "deu", "eng"}), ValidationError);
}
