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

#include "mst/layers.hpp"

#include <cmath>

namespace mst {

Initializer::Initializer(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  rng_.seed(seq);
}

Mat Initializer::normal(Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng_);
  return m;
}

Linear::Linear(const std::string& name, int in, int out, bool with_bias, Initializer& init, double gain)
    : weight(name + ".weight", init.normal(in, out, gain / std::sqrt(static_cast<double>(in)))),
      bias(name + ".bias", Mat::Zero(with_bias ? 1 : 0, with_bias ? out : 0)),
      has_bias(with_bias) {}

Var Linear::operator()(Tape& t, Var x) {
  Var y = ag::matmul(x, t.param(weight));
  return has_bias ? ag::add_bias(y, t.param(bias)) : y;
}

Mat Linear::apply(const Mat& x) const {
  Mat y = x * weight.value();
  if (has_bias) y.rowwise() += bias.value().row(0);
  return y;
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", Mat::Ones(1, dim)), beta(name + ".beta", Mat::Zero(1, dim)) {}

Var LayerNorm::operator()(Tape& t, Var x) { return ag::layer_norm(x, t.param(gamma), t.param(beta)); }

void LayerNorm::collect(ParamList& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

RmsNorm::RmsNorm(const std::string& name, int dim) : gamma(name + ".gamma", Mat::Ones(1, dim)) {}

Var RmsNorm::operator()(Tape& t, Var x) { return ag::rms_norm(x, t.param(gamma)); }

void RmsNorm::collect(ParamList& out) { out.push_back(&gamma); }

void set_trainable(const ParamList& params, bool trainable) {
  for (auto* p : params) p->set_trainable(trainable);
}

std::int64_t count_parameters(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

std::int64_t count_trainable(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto* p : params)
    if (p->trainable()) n += p->size();
  return n;
}

}  // namespace mst
