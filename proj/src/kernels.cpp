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

#include <cmath>
#include <limits>
#include <numbers>

#include "mst/error.hpp"
#include "mst/tensor.hpp"

namespace mst::kernels {

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); });
}

Mat gelu_derivative(const Mat& x) {
  return x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  });
}

Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, Eigen::VectorXd* rstd) {
  const Eigen::Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d) throw ShapeError("layer_norm: gain/bias width mismatch");
  Mat out(x.rows(), d);
  if (rstd) rstd->resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    if (rstd) (*rstd)[r] = inv;
    out.row(r) = ((x.row(r).array() - mean) * inv * gamma.row(0).array() + beta.row(0).array()).matrix();
  }
  return out;
}

Mat rms_norm(const Mat& x, const Mat& gamma, Eigen::VectorXd* rinv) {
  const Eigen::Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d) throw ShapeError("rms_norm: gain width mismatch");
  Mat out(x.rows(), d);
  if (rinv) rinv->resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double inv = 1.0 / std::sqrt(x.row(r).squaredNorm() / d + kNormEps);
    if (rinv) (*rinv)[r] = inv;
    out.row(r) = (x.row(r).array() * inv * gamma.row(0).array()).matrix();
  }
  return out;
}

void softmax_rows(Mat& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    x.row(r) = (x.row(r).array() - m).exp().matrix();
    x.row(r) /= x.row(r).sum();
  }
}

void apply_rope(Mat& x, int heads, int head_dim, int offset, double base, bool inverse) {
  if (x.cols() != static_cast<Eigen::Index>(heads) * head_dim) throw ShapeError("apply_rope: width mismatch");
  const int half = head_dim / 2;
  std::vector<double> inv_freq(half);
  for (int i = 0; i < half; ++i) inv_freq[i] = std::pow(base, -2.0 * i / head_dim);
  const double sign = inverse ? -1.0 : 1.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double pos = static_cast<double>(offset + r);
    for (int i = 0; i < half; ++i) {
      const double angle = sign * pos * inv_freq[i];
      const double c = std::cos(angle), s = std::sin(angle);
      for (int h = 0; h < heads; ++h) {
        const Eigen::Index col = static_cast<Eigen::Index>(h) * head_dim + 2 * i;
        const double a = x(r, col), b = x(r, col + 1);
        x(r, col) = a * c - b * s;
        x(r, col + 1) = a * s + b * c;
      }
    }
  }
}

Mat attention(const Mat& q, const Mat& k, const Mat& v, const AttentionSpec& spec, std::vector<Mat>* probs) {
  const int dh = spec.head_dim;
  if (spec.heads % spec.kv_heads != 0) throw ShapeError("attention: heads must be a multiple of kv_heads");
  if (q.cols() != spec.heads * dh || k.cols() != spec.kv_heads * dh || v.cols() != spec.kv_heads * dh) {
    throw ShapeError("attention: q/k/v widths do not match the head layout");
  }
  if (k.rows() != v.rows()) throw ShapeError("attention: k and v lengths differ");
  const int group = spec.heads / spec.kv_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat out(q.rows(), q.cols());
  if (probs) probs->assign(spec.heads, Mat());
  for (int h = 0; h < spec.heads; ++h) {
    const int g = h / group;
    Mat scores = (q.middleCols(h * dh, dh) * k.middleCols(g * dh, dh).transpose()) * scale;
    if (spec.causal) {
      for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const Eigen::Index last = i + spec.q_offset;
        for (Eigen::Index j = last + 1; j < scores.cols(); ++j) scores(i, j) = -std::numeric_limits<double>::infinity();
      }
    }
    softmax_rows(scores);
    out.middleCols(h * dh, dh) = scores * v.middleCols(g * dh, dh);
    if (probs) (*probs)[h] = std::move(scores);
  }
  return out;
}

Mat pool_rows(const Mat& x, int stride, bool max_pool, std::vector<int>* argmax) {
  if (stride <= 0 || x.rows() % stride != 0) {
    throw ShapeError("pool: row count " + std::to_string(x.rows()) + " is not divisible by stride " +
                     std::to_string(stride));
  }
  const Eigen::Index out_rows = x.rows() / stride;
  Mat out(out_rows, x.cols());
  if (argmax) argmax->assign(static_cast<std::size_t>(out_rows * x.cols()), 0);
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    if (!max_pool) {
      out.row(r) = x.middleRows(r * stride, stride).colwise().sum() / static_cast<double>(stride);
      continue;
    }
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = 0;
      double v = x.col(c).segment(r * stride, stride).maxCoeff(&best);
      out(r, c) = v;
      if (argmax) (*argmax)[r * x.cols() + c] = static_cast<int>(r * stride + best);
    }
  }
  return out;
}

Mat im2col(const Mat& x, int kernel, int stride, int pad) {
  const Eigen::Index in_rows = x.rows(), width = x.cols();
  const Eigen::Index out_rows = (in_rows + 2 * pad - kernel) / stride + 1;
  Mat cols = Mat::Zero(out_rows, kernel * width);
  for (Eigen::Index t = 0; t < out_rows; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t * stride - pad + j;
      if (src >= 0 && src < in_rows) cols.block(t, j * width, 1, width) = x.row(src);
    }
  }
  return cols;
}

Mat sinusoidal_positions(int rows, int dim) {
  Mat pos(rows, dim);
  const int half = dim / 2;
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
      pos(r, i) = std::sin(r * freq);
      pos(r, half + i) = std::cos(r * freq);
    }
    if (dim % 2) pos(r, dim - 1) = 0.0;
  }
  return pos;
}

}  // namespace mst::kernels
