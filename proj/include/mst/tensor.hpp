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
#include <vector>

#include <Eigen/Core>

namespace mst {

// Rows are sequence positions, columns are features.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = Mat;

struct AttentionSpec {
  int heads = 1;
  int kv_heads = 1;
  int head_dim = 1;
  bool causal = false;
  bool rope = false;
  double rope_base = 10000.0;
  // Absolute position of query row 0; key row j sits at position j.
  int q_offset = 0;
};

// Plain forward kernels. The autograd ops and the KV-cache decoder both call
// these so the two paths cannot drift apart.
namespace kernels {

constexpr double kNormEps = 1e-5;

Mat gelu(const Mat& x);
// d gelu(x) / dx, elementwise.
Mat gelu_derivative(const Mat& x);

// Row-wise layer norm; optionally returns the per-row reciprocal std.
Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, Eigen::VectorXd* rstd = nullptr);
Mat rms_norm(const Mat& x, const Mat& gamma, Eigen::VectorXd* rinv = nullptr);

void softmax_rows(Mat& x);

// Rotates interleaved feature pairs of every head in place; row r is at
// absolute position `offset + r`. `inverse` applies the transpose rotation.
void apply_rope(Mat& x, int heads, int head_dim, int offset, double base, bool inverse = false);

// Multi-head (grouped-query) attention on pre-projected q/k/v. When `probs`
// is non-null it receives the per-head probability matrices. q and k are
// expected to be rotated already if the spec asks for rope.
Mat attention(const Mat& q, const Mat& k, const Mat& v, const AttentionSpec& spec,
              std::vector<Mat>* probs = nullptr);

// Non-overlapping pooling over groups of `stride` rows.
Mat pool_rows(const Mat& x, int stride, bool max_pool, std::vector<int>* argmax = nullptr);

// 1-D convolution input unfolding: row t holds the kernel-sized window of
// input rows starting at t*stride - pad, zero outside the input.
Mat im2col(const Mat& x, int kernel, int stride, int pad);

// Fixed sinusoidal position table [rows x dim].
Mat sinusoidal_positions(int rows, int dim);

}  // namespace kernels
}  // namespace mst
