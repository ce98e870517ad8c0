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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mst/autograd.hpp"

namespace mst {

using ag::Parameter;
using ag::Tape;
using ag::Var;
using ParamList = std::vector<Parameter*>;
using ConstParamList = std::vector<const Parameter*>;

// Seeded weight initializer. Each component derives its own stream from the
// pipeline seed and a salt so adding a component never shifts another's init.
class Initializer {
 public:
  Initializer(std::uint64_t seed, std::uint64_t salt);
  Mat normal(Eigen::Index rows, Eigen::Index cols, double stddev);
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct Linear {
  Parameter weight;  // [in x out]
  Parameter bias;    // [1 x out], empty when the layer has no bias
  bool has_bias = true;

  Linear() = default;
  Linear(const std::string& name, int in, int out, bool with_bias, Initializer& init, double gain = 1.0);

  Var operator()(Tape& t, Var x);
  Mat apply(const Mat& x) const;
  void collect(ParamList& out);
  int in_features() const { return static_cast<int>(weight.value().rows()); }
  int out_features() const { return static_cast<int>(weight.value().cols()); }
};

struct LayerNorm {
  Parameter gamma, beta;
  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);
  Var operator()(Tape& t, Var x);
  Mat apply(const Mat& x) const { return kernels::layer_norm(x, gamma.value(), beta.value()); }
  void collect(ParamList& out);
};

struct RmsNorm {
  Parameter gamma;
  RmsNorm() = default;
  RmsNorm(const std::string& name, int dim);
  Var operator()(Tape& t, Var x);
  Mat apply(const Mat& x) const { return kernels::rms_norm(x, gamma.value()); }
  void collect(ParamList& out);
};

void set_trainable(const ParamList& params, bool trainable);
std::int64_t count_parameters(const ParamList& params);
std::int64_t count_trainable(const ParamList& params);

}  // namespace mst
