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

#include <span>
#include <string>
#include <vector>

#include "mst/config.hpp"
#include "mst/tensor.hpp"

namespace mst {

struct AudioClip {
  std::vector<float> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 16000;

  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Log-mel features laid out [C x L] (bins x frames).
struct MelSpectrogram {
  RowMatrix values;

  int bins() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
};

// Value of a frame with no energy after log compression and scaling.
double log_floor_value();

// Triangular mel filterbank, shape [C x (n_fft/2 + 1)], HTK mel scale
// spanning 0 Hz to Nyquist.
RowMatrix mel_filterbank(int mel_bins, int n_fft, int sample_rate);
// Centre frequency (Hz) of mel band `band` in a C-band bank.
double mel_band_center_hz(int band, int mel_bins, int sample_rate);

// Hann-windowed STFT power -> mel -> log, truncated or padded to exactly
// cfg.mel_frames frames. Throws on empty clips, non-finite samples, or a
// sample-rate mismatch.
MelSpectrogram mel_spectrogram(const AudioClip& clip, const PipelineConfig& cfg);

// Batched mel grid [N x C x L] stored as N slices.
struct MelBatch {
  int bins = 0;
  int frames = 0;
  std::vector<RowMatrix> items;

  int size() const { return static_cast<int>(items.size()); }
};

MelBatch collate(std::span<const MelSpectrogram> mels);

// Mono WAV reader (16-bit PCM or 32-bit float).
AudioClip read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioClip& clip);

}  // namespace mst
