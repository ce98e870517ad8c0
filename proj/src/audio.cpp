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

#include "mst/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "mst/error.hpp"

namespace mst {

namespace {

constexpr double kPowerFloor = 1e-10;
constexpr double kDynamicRange = 8.0;  // decades kept below the utterance max

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double scale_log(double log10_power) { return (log10_power + 4.0) / 4.0; }

// FFTW planning is not thread-safe; plans are created once per size and
// executed through the new-array interface, which is.
struct FftPlan {
  fftw_plan plan = nullptr;
};

fftw_plan plan_for(int n_fft) {
  static std::mutex mu;
  static std::map<int, FftPlan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n_fft);
  if (it != plans.end()) return it->second.plan;
  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(n_fft / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(n_fft, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans[n_fft].plan = p;
  return p;
}

struct FftwBuffer {
  explicit FftwBuffer(int n_fft) : in(fftw_alloc_real(n_fft)), out(fftw_alloc_complex(n_fft / 2 + 1)) {}
  ~FftwBuffer() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* in;
  fftw_complex* out;
};

}  // namespace

double log_floor_value() { return scale_log(std::log10(kPowerFloor)); }

double mel_band_center_hz(int band, int mel_bins, int sample_rate) {
  const double lo = hz_to_mel(0.0), hi = hz_to_mel(sample_rate / 2.0);
  return mel_to_hz(lo + (hi - lo) * (band + 1) / (mel_bins + 1));
}

RowMatrix mel_filterbank(int mel_bins, int n_fft, int sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> edges(mel_bins + 2);
  const double lo = hz_to_mel(0.0), hi = hz_to_mel(sample_rate / 2.0);
  for (int i = 0; i < mel_bins + 2; ++i) edges[i] = mel_to_hz(lo + (hi - lo) * i / (mel_bins + 1));
  RowMatrix fb = RowMatrix::Zero(mel_bins, n_bins);
  for (int m = 0; m < mel_bins; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      const double up = (f - left) / (centre - left);
      const double down = (right - f) / (right - centre);
      fb(m, b) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const PipelineConfig& cfg) {
  if (clip.samples.empty()) throw ValidationError("audio clip is empty");
  if (clip.sample_rate <= 0) throw ValidationError("audio clip has non-positive sample rate");
  if (clip.sample_rate != cfg.sample_rate) {
    throw ValidationError("audio sample rate " + std::to_string(clip.sample_rate) + " does not match configured " +
                          std::to_string(cfg.sample_rate));
  }
  for (float s : clip.samples)
    if (!std::isfinite(s)) throw ValidationError("audio clip contains non-finite samples");

  const int n_fft = cfg.n_fft, win = cfg.win_length, hop = cfg.hop_length;
  const int n_bins = n_fft / 2 + 1;
  const int total = static_cast<int>(clip.samples.size());
  const int available = (total + hop - 1) / hop;
  const int frames = std::min(available, cfg.mel_frames);

  static thread_local std::map<std::tuple<int, int, int>, RowMatrix> fb_cache;
  auto key = std::make_tuple(cfg.mel_bins, n_fft, cfg.sample_rate);
  auto fb_it = fb_cache.find(key);
  if (fb_it == fb_cache.end()) fb_it = fb_cache.emplace(key, mel_filterbank(cfg.mel_bins, n_fft, cfg.sample_rate)).first;
  const RowMatrix& fb = fb_it->second;

  std::vector<double> window(win);
  for (int n = 0; n < win; ++n) window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / win);

  MelSpectrogram mel;
  mel.values = RowMatrix::Constant(cfg.mel_bins, cfg.mel_frames, std::log10(kPowerFloor));
  fftw_plan plan = plan_for(n_fft);
  FftwBuffer buf(n_fft);
  Eigen::VectorXd power(n_bins);
  for (int t = 0; t < frames; ++t) {
    const int start = t * hop;
    std::fill(buf.in, buf.in + n_fft, 0.0);
    for (int n = 0; n < win && start + n < total; ++n) buf.in[n] = window[n] * clip.samples[start + n];
    fftw_execute_dft_r2c(plan, buf.in, buf.out);
    for (int b = 0; b < n_bins; ++b) power[b] = buf.out[b][0] * buf.out[b][0] + buf.out[b][1] * buf.out[b][1];
    Eigen::VectorXd energies = fb * power;
    for (int m = 0; m < cfg.mel_bins; ++m) mel.values(m, t) = std::log10(std::max(energies[m], kPowerFloor));
  }
  const double ceiling = mel.values.maxCoeff();
  mel.values = mel.values.unaryExpr([&](double v) { return scale_log(std::max(v, ceiling - kDynamicRange)); });
  return mel;
}

MelBatch collate(std::span<const MelSpectrogram> mels) {
  if (mels.empty()) throw ShapeError("collate needs at least one mel spectrogram");
  MelBatch batch;
  batch.bins = mels.front().bins();
  batch.frames = mels.front().frames();
  for (const auto& m : mels) {
    if (m.bins() != batch.bins || m.frames() != batch.frames) {
      throw ShapeError("collate: mixed mel shapes [" + std::to_string(m.bins()) + " x " + std::to_string(m.frames()) +
                       "] vs [" + std::to_string(batch.bins) + " x " + std::to_string(batch.frames) + "]");
    }
    batch.items.push_back(m.values);
  }
  return batch;
}

namespace {

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open audio file " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError(path + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::uint32_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* chunk = bytes.data() + pos;
    const auto len = read_le<std::uint32_t>(chunk + 4);
    if (pos + 8 + len > bytes.size()) throw ValidationError(path + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0 && len >= 16) {
      format = read_le<std::uint16_t>(chunk + 8);
      channels = read_le<std::uint16_t>(chunk + 10);
      rate = read_le<std::uint32_t>(chunk + 12);
      bits = read_le<std::uint16_t>(chunk + 22);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (!data || rate == 0) throw ValidationError(path + ": missing fmt or data chunk");
  if (channels != 1) throw ValidationError(path + ": only mono audio is supported");
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    for (std::uint32_t i = 0; i + 1 < data_len; i += 2) clip.samples.push_back(read_le<std::int16_t>(data + i) / 32768.0f);
  } else if (format == 3 && bits == 32) {
    for (std::uint32_t i = 0; i + 3 < data_len; i += 4) clip.samples.push_back(read_le<float>(data + i));
  } else {
    throw ValidationError(path + ": unsupported sample format (need PCM16 or float32)");
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write audio file " + path);
  auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto put16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * 4);
  f.write("RIFF", 4);
  put32(36 + data_len);
  f.write("WAVEfmt ", 8);
  put32(16);
  put16(3);
  put16(1);
  put32(static_cast<std::uint32_t>(clip.sample_rate));
  put32(static_cast<std::uint32_t>(clip.sample_rate * 4));
  put16(4);
  put16(32);
  f.write("data", 4);
  put32(data_len);
  f.write(reinterpret_cast<const char*>(clip.samples.data()), data_len);
}

}  // namespace mst
