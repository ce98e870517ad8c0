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

#include <algorithm>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "mst/adapter.hpp"
#include "mst/error.hpp"

using namespace mst;
using mst::testing::check_params;
using mst::testing::random_mat;

namespace {

PipelineConfig tiny() {
  PipelineConfig c = toy_profile();
  c.mel_frames = 8;  // L' = 4
  c.encoder_dim = 6;
  c.num_queries = 4;
  c.query_dim = 8;
  c.qformer_heads = 2;
  c.qformer_layers = 1;
  c.qformer_ffn = 8;
  c.pool_stride = 2;
  c.mlp_hidden = 8;
  c.llm_dim = 8;
  return c;
}

}  // namespace

TEST_CASE("adapter stage shapes at toy geometry") {
  const PipelineConfig c = toy_profile();
  SpeechAdapter a(c, init_adapter_weights(c, 3));
  std::mt19937_64 rng(1);
  Tape t(false);
  const AdapterTrace tr = a.forward(t, t.constant(random_mat(rng, c.encoder_len(), c.encoder_dim)));
  CHECK(tr.queries.rows() == c.num_queries);
  CHECK(tr.queries.cols() == c.query_dim);
  CHECK(tr.pooled.rows() == c.prompt_len());
  CHECK(tr.pooled.cols() == c.query_dim);
  CHECK(tr.aligned.rows() == 30);
  CHECK(tr.aligned.cols() == c.llm_dim);
}

TEST_CASE("pooling matches loops for both modes") {
  std::mt19937_64 rng(2);
  const Mat z = random_mat(rng, 12, 5);
  for (int s : {1, 2, 3, 4, 6}) {
    const Mat avg = pool(z, s, PoolMode::kAverage);
    const Mat mx = pool(z, s, PoolMode::kMax);
    REQUIRE(avg.rows() == 12 / s);
    for (Eigen::Index r = 0; r < avg.rows(); ++r) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        double sum = 0.0, best = -1e300;
        for (int k = 0; k < s; ++k) {
          sum += z(r * s + k, c);
          best = std::max(best, z(r * s + k, c));
        }
        CHECK(avg(r, c) == doctest::Approx(sum / s).epsilon(1e-14));
        CHECK(mx(r, c) == best);
      }
    }
  }
  CHECK_THROWS_AS(pool(z, 5), ShapeError);
}

TEST_CASE("Q-Former reads states as an unordered set") {
  // No positional signal is added inside the adapter, so permuting the
  // encoder rows must leave every query output unchanged.
  const PipelineConfig c = toy_profile();
  AdapterWeights w = init_adapter_weights(c, 8);
  std::mt19937_64 rng(4);
  const Mat states = random_mat(rng, c.encoder_len(), c.encoder_dim);
  std::vector<int> perm(states.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mat shuffled(states.rows(), states.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.row(i) = states.row(perm[i]);
  const Mat a = qformer(states, w.qformer, c);
  const Mat b = qformer(shuffled, w.qformer, c);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cross-attention matches a hand-rolled softmax read") {
  const PipelineConfig c = tiny();
  AdapterWeights w = init_adapter_weights(c, 21);
  auto& b = w.qformer.blocks[0];
  std::mt19937_64 rng(5);
  const Mat q_in = random_mat(rng, 3, c.query_dim);
  const Mat s_in = random_mat(rng, 5, c.encoder_dim);
  Tape t(false);
  const Mat got = cross_attention(t, t.constant(q_in), t.constant(s_in), b, 2).value();

  const Mat q = b.cross_q.apply(q_in), k = b.cross_k.apply(s_in), v = b.cross_v.apply(s_in);
  const int hd = c.query_dim / 2;
  Mat heads(3, c.query_dim);
  for (int h = 0; h < 2; ++h) {
    Mat scores = q.middleCols(h * hd, hd) * k.middleCols(h * hd, hd).transpose() / std::sqrt(double(hd));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const double m = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - m).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    heads.middleCols(h * hd, hd) = scores * v.middleCols(h * hd, hd);
  }
  const Mat expect = b.cross_o.apply(heads);
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adapter gradients match finite differences") {
  const PipelineConfig c = tiny();
  SpeechAdapter a(c, init_adapter_weights(c, 6));
  std::mt19937_64 rng(7);
  const Mat states = random_mat(rng, c.encoder_len(), c.encoder_dim);
  const auto rep = check_params(
      [&](Tape& t) { return a.forward(t, t.constant(states)).aligned; }, a.weights().parameters());
  CHECK(rep.checked == count_parameters(a.weights().parameters()));
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("closed-form counts match the tensors") {
  for (PipelineConfig c : {tiny(), toy_profile()}) {
    AdapterWeights w = init_adapter_weights(c, 1);
    const ParamBudget b = adapter_param_count(c);
    CHECK(b.find("Q-Former")->total == count_parameters(w.qformer.parameters()));
    CHECK(b.find("MLP")->total == count_parameters(w.mlp.parameters()));
    CHECK(b.find("Pooling")->total == 0);
  }
}

TEST_CASE("shape errors name the expectation") {
  const PipelineConfig c = tiny();
  SpeechAdapter a(c, init_adapter_weights(c, 6));
  Tape t(false);
  CHECK_THROWS_AS(a.qformer(t, t.constant(Mat::Zero(c.encoder_len() + 1, c.encoder_dim))), ShapeError);
  CHECK_THROWS_AS(a.align(t, t.constant(Mat::Zero(2, c.query_dim + 1))), ShapeError);
  MlpWeights& mlp = a.weights().mlp;
  CHECK_THROWS_AS(align(Mat::Zero(2, 3), mlp), ShapeError);
}

TEST_CASE("max pooling routes gradient to the winning row only") {
  Tape t;
  Mat z(4, 1);
  z << 1.0, 3.0, -2.0, -5.0;
  Var in = t.input(z);
  t.backward(ag::sum_all(ag::pool_rows(in, 2, true)));
  const Mat& g = t.grad(in);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(2, 0) == 1.0);
  CHECK(g(3, 0) == 0.0);
}
