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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "mst/audio.hpp"
#include "mst/error.hpp"
#include "mst/synthetic.hpp"

using namespace mst;

namespace {

AudioClip tone(double hz, double seconds, int rate = 16000, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  const int n = static_cast<int>(seconds * rate);
  for (int i = 0; i < n; ++i) c.samples.push_back(static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate)));
  return c;
}

std::filesystem::path tmp_dir() {
  auto d = std::filesystem::temp_directory_path() / "mst_test_audio";
  std::filesystem::create_directories(d);
  return d;
}

struct TmpCleanup {
  ~TmpCleanup() { std::filesystem::remove_all(std::filesystem::temp_directory_path() / "mst_test_audio"); }
} tmp_cleanup;

}  // namespace

TEST_CASE("mel filterbank is triangular and covers the spectrum") {
  const RowMatrix fb = mel_filterbank(16, 400, 16000);
  CHECK(fb.rows() == 16);
  CHECK(fb.cols() == 201);
  CHECK(fb.minCoeff() >= 0.0);
  CHECK(fb.maxCoeff() <= 1.0 + 1e-12);
  // Between the first and last centre every FFT bin belongs to some band.
  const int lo = static_cast<int>(std::ceil(mel_band_center_hz(0, 16, 16000) / 40.0));
  const int hi = static_cast<int>(std::floor(mel_band_center_hz(15, 16, 16000) / 40.0));
  for (int b = lo; b <= hi; ++b) CHECK(fb.col(b).sum() > 0.0);
}

TEST_CASE("a tone lights up its own band") {
  PipelineConfig cfg = toy_profile();
  for (int band : {2, 7, 12}) {
    const MelSpectrogram mel = mel_spectrogram(tone(mel_band_center_hz(band, cfg.mel_bins, 16000), 1.0), cfg);
    Eigen::Index arg = 0;
    mel.values.col(50).maxCoeff(&arg);
    CHECK(arg == band);
  }
}

TEST_CASE("every duration yields exactly C x L") {
  PipelineConfig cfg = toy_profile();
  for (double s : {0.1, 1.0, 3.0, 30.0, 60.0}) {
    const MelSpectrogram mel = mel_spectrogram(tone(440.0, s), cfg);
    CHECK(mel.bins() == cfg.mel_bins);
    CHECK(mel.frames() == cfg.mel_frames);
    CHECK(mel.values.allFinite());
  }
}

TEST_CASE("frames past the clip sit at the floor") {
  PipelineConfig cfg = toy_profile();
  const MelSpectrogram mel = mel_spectrogram(tone(1000.0, 0.5), cfg);
  const double floor = mel.values.minCoeff();
  for (int t = 60; t < cfg.mel_frames; ++t) CHECK(mel.values.col(t).maxCoeff() == floor);
  CHECK(mel.values.col(20).maxCoeff() > floor);
}

TEST_CASE("silence maps to the log floor") {
  PipelineConfig cfg = toy_profile();
  AudioClip c;
  c.samples.assign(8000, 0.0f);
  const MelSpectrogram mel = mel_spectrogram(c, cfg);
  CHECK(mel.values.isConstant(log_floor_value()));
}

TEST_CASE("dynamic range is bounded below the utterance peak") {
  PipelineConfig cfg = toy_profile();
  const MelSpectrogram mel = mel_spectrogram(tone(300.0, 2.0), cfg);
  CHECK(mel.values.maxCoeff() - mel.values.minCoeff() <= 2.0 + 1e-9);  // 8 decades / 4
}

TEST_CASE("bad clips are rejected") {
  PipelineConfig cfg = toy_profile();
  CHECK_THROWS_AS(mel_spectrogram(AudioClip{}, cfg), ValidationError);
  CHECK_THROWS_AS(mel_spectrogram(tone(440.0, 0.2, 8000), cfg), ValidationError);
  AudioClip nan = tone(440.0, 0.2);
  nan.samples[100] = std::nanf("");
  CHECK_THROWS_AS(mel_spectrogram(nan, cfg), ValidationError);
}

TEST_CASE("collate stacks equal shapes and refuses mixed ones") {
  PipelineConfig cfg = toy_profile();
  std::vector<MelSpectrogram> mels{mel_spectrogram(tone(200.0, 0.3), cfg), mel_spectrogram(tone(900.0, 2.0), cfg)};
  const MelBatch b = collate(mels);
  CHECK(b.size() == 2);
  CHECK(b.bins == cfg.mel_bins);
  CHECK(b.frames == cfg.mel_frames);
  mels[1].values = RowMatrix::Zero(cfg.mel_bins, 10);
  CHECK_THROWS_AS(collate(mels), ShapeError);
  CHECK_THROWS_AS(collate(std::vector<MelSpectrogram>{}), ShapeError);
}

TEST_CASE("float wav round-trips exactly") {
  const auto path = (tmp_dir() / "tone.wav").string();
  const AudioClip c = tone(523.25, 0.25);
  write_wav(path, c);
  const AudioClip back = read_wav(path);
  CHECK(back.sample_rate == c.sample_rate);
  CHECK(back.samples == c.samples);
}

TEST_CASE("pcm16 wav is read and scaled") {
  const auto path = (tmp_dir() / "pcm.wav").string();
  const std::vector<std::int16_t> pcm{0, 16384, -32768, 32767};
  {
    std::ofstream f(path, std::ios::binary);
    auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto put16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
    f.write("RIFF", 4);
    put32(36 + 8);
    f.write("WAVEfmt ", 8);
    put32(16);
    put16(1);
    put16(1);
    put32(16000);
    put32(32000);
    put16(2);
    put16(16);
    f.write("data", 4);
    put32(8);
    f.write(reinterpret_cast<const char*>(pcm.data()), 8);
  }
  const AudioClip c = read_wav(path);
  REQUIRE(c.samples.size() == 4);
  CHECK(c.samples[1] == doctest::Approx(0.5));
  CHECK(c.samples[2] == doctest::Approx(-1.0));
}

TEST_CASE("malformed wav files are rejected") {
  const auto path = (tmp_dir() / "junk.wav").string();
  std::ofstream(path) << "definitely not audio";
  CHECK_THROWS_AS(read_wav(path), ValidationError);
  CHECK_THROWS_AS(read_wav((tmp_dir() / "missing.wav").string()), Error);
}

TEST_CASE("synthetic words are voiced by distinct chords") {
  std::set<std::array<double, 3>> chords;
  for (const char* lang : {"eng", "cmn", "swh"}) {
    for (const auto& w : synthetic_lexicon(lang, 8)) chords.insert(word_chord(lang, w, 8));
  }
  CHECK(chords.size() == 24);
  CHECK_THROWS_AS(word_chord("eng", "notaword", 8), ValidationError);
}

TEST_CASE("synthetic audio is deterministic and sized by word count") {
  SyntheticAudio s;
  s.lang = "eng";
  s.words = {synthetic_word("eng", 0, 8), synthetic_word("eng", 3, 8)};
  s.seed = 42;
  const AudioClip a = synthesize_audio(s, 8);
  CHECK(a.samples == synthesize_audio(s, 8).samples);
  CHECK(a.duration_seconds() == doctest::Approx(s.duration_seconds()));
  s.seed = 43;
  CHECK(a.samples != synthesize_audio(s, 8).samples);
}
