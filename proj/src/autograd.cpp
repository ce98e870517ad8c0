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

#include "mst/autograd.hpp"

#include <cmath>
#include <string>

#include "mst/error.hpp"

namespace mst::ag {

Mat& Parameter::mutable_grad() {
  if (grad_.rows() != value_.rows() || grad_.cols() != value_.cols()) grad_ = Mat::Zero(value_.rows(), value_.cols());
  return grad_;
}

const Mat& Var::value() const { return tape->value(id); }

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), false, nullptr, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Mat value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Mat(), record_ && requires_grad, nullptr, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{Mat(), Mat(), record_ && p.trainable(), nullptr, &p});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Mat* Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return nullptr;
  const Mat& val = value(v.id);
  if (n.grad.size() == 0) n.grad = Mat::Zero(val.rows(), val.cols());
  return &n.grad;
}

Var Tape::push(Mat value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::push(Mat value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  if (record_) {
    for (const Var& v : inputs) {
      if (v.tape != this) throw Error("autograd: mixing nodes from different tapes");
      needs = needs || nodes_[v.id].needs_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), Mat(), needs, needs ? std::move(backward) : nullptr, nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Mat& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

const Mat& Tape::grad(Var v) const { return nodes_[v.id].grad; }

void Tape::backward(Var loss, double seed) {
  if (!record_) throw Error("autograd: backward on a non-recording tape");
  if (loss.value().size() != 1) throw ShapeError("autograd: backward needs a scalar loss");
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad = Mat::Constant(1, 1, seed);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) n.param->mutable_grad() += n.grad;
  }
}

// ---- ops ----------------------------------------------------------------

namespace {

void check_rows_cols(bool ok, const char* op, const Mat& a, const Mat& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes [" + std::to_string(a.rows()) + " x " +
                     std::to_string(a.cols()) + "] and [" + std::to_string(b.rows()) + " x " +
                     std::to_string(b.cols()) + "]");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  check_rows_cols(a.cols() == b.rows(), "matmul", a.value(), b.value());
  Mat out = a.value() * b.value();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  check_rows_cols(a.cols() == b.cols(), "matmul_nt", a.value(), b.value());
  Mat out = a.value() * b.value().transpose();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value());
    if (t.needs_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  check_rows_cols(a.rows() == b.rows() && a.cols() == b.cols(), "add", a.value(), b.value());
  Mat out = a.value() + b.value();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_bias(Var x, Var bias) {
  check_rows_cols(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias", x.value(), bias.value());
  Mat out = x.value().rowwise() + bias.value().row(0);
  return x.tape->push(std::move(out), {x, bias}, [x, bias](Tape& t, const Mat& g) {
    t.accumulate(x, g);
    if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

Var add_constant(Var x, const Mat& c) {
  check_rows_cols(x.rows() == c.rows() && x.cols() == c.cols(), "add_constant", x.value(), c);
  Mat out = x.value() + c;
  return x.tape->push(std::move(out), {x}, [x](Tape& t, const Mat& g) { t.accumulate(x, g); });
}

Var scale(Var x, double s) {
  Mat out = x.value() * s;
  return x.tape->push(std::move(out), {x}, [x, s](Tape& t, const Mat& g) { t.accumulate(x, g * s); });
}

Var gelu(Var x) {
  Mat out = kernels::gelu(x.value());
  return x.tape->push(std::move(out), {x}, [x](Tape& t, const Mat& g) {
    t.accumulate(x, (g.array() * kernels::gelu_derivative(x.value()).array()).matrix());
  });
}

Var mul(Var a, Var b) {
  check_rows_cols(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a.value(), b.value());
  Mat out = (a.value().array() * b.value().array()).matrix();
  return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.needs_grad(a)) t.accumulate(a, (g.array() * b.value().array()).matrix());
    if (t.needs_grad(b)) t.accumulate(b, (g.array() * a.value().array()).matrix());
  });
}

Var layer_norm(Var x, Var gamma, Var beta) {
  Eigen::VectorXd rstd;
  Mat out = kernels::layer_norm(x.value(), gamma.value(), beta.value(), &rstd);
  return x.tape->push(std::move(out), {x, gamma, beta}, [x, gamma, beta, rstd](Tape& t, const Mat& g) {
    const Mat& xv = x.value();
    const Eigen::Index d = xv.cols();
    Mat xhat(xv.rows(), d);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) xhat.row(r) = (xv.row(r).array() - xv.row(r).mean()) * rstd[r];
    if (t.needs_grad(gamma)) t.accumulate(gamma, (g.array() * xhat.array()).matrix().colwise().sum());
    if (t.needs_grad(beta)) t.accumulate(beta, g.colwise().sum());
    if (t.needs_grad(x)) {
      Mat dx(xv.rows(), d);
      for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        Eigen::RowVectorXd dxhat = (g.row(r).array() * gamma.value().row(0).array()).matrix();
        const double m1 = dxhat.mean();
        const double m2 = (dxhat.array() * xhat.row(r).array()).mean();
        dx.row(r) = rstd[r] * (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
      }
      t.accumulate(x, dx);
    }
  });
}

Var rms_norm(Var x, Var gamma) {
  Eigen::VectorXd rinv;
  Mat out = kernels::rms_norm(x.value(), gamma.value(), &rinv);
  return x.tape->push(std::move(out), {x, gamma}, [x, gamma, rinv](Tape& t, const Mat& g) {
    const Mat& xv = x.value();
    const double d = static_cast<double>(xv.cols());
    if (t.needs_grad(gamma)) {
      Mat normed = xv;
      for (Eigen::Index r = 0; r < xv.rows(); ++r) normed.row(r) *= rinv[r];
      t.accumulate(gamma, (g.array() * normed.array()).matrix().colwise().sum());
    }
    if (t.needs_grad(x)) {
      Mat dx(xv.rows(), xv.cols());
      for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        Eigen::RowVectorXd gg = (g.row(r).array() * gamma.value().row(0).array()).matrix();
        const double dot = gg.dot(xv.row(r));
        const double ri = rinv[r];
        dx.row(r) = ri * gg - xv.row(r) * (ri * ri * ri * dot / d);
      }
      t.accumulate(x, dx);
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape* tape = parts.front().tape;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: width mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    if (p.rows() > 0) out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return tape->push(std::move(out), parts, [parts](Tape& t, const Mat& g) {
    Eigen::Index off = 0;
    for (const Var& p : parts) {
      if (t.needs_grad(p) && p.rows() > 0) t.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var slice_rows(Var x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) throw ShapeError("slice_rows: range out of bounds");
  Mat out = x.value().middleRows(start, count);
  return x.tape->push(std::move(out), {x}, [x, start, count](Tape& t, const Mat& g) {
    Mat dx = Mat::Zero(x.rows(), x.cols());
    dx.middleRows(start, count) = g;
    t.accumulate(x, dx);
  });
}

Var pool_rows(Var x, int stride, bool max_pool) {
  std::vector<int> argmax;
  Mat out = kernels::pool_rows(x.value(), stride, max_pool, max_pool ? &argmax : nullptr);
  return x.tape->push(std::move(out), {x}, [x, stride, max_pool, argmax](Tape& t, const Mat& g) {
    Mat dx = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (max_pool) {
        for (Eigen::Index c = 0; c < g.cols(); ++c) dx(argmax[r * g.cols() + c], c) += g(r, c);
      } else {
        for (int s = 0; s < stride; ++s) dx.row(r * stride + s) += g.row(r) / static_cast<double>(stride);
      }
    }
    t.accumulate(x, dx);
  });
}

Var gather_rows(Var table, const std::vector<int>& ids) {
  Mat out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(table.rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  return table.tape->push(std::move(out), {table}, [table, ids](Tape& t, const Mat& g) {
    Mat* dt = t.grad_buffer(table);
    if (!dt) return;
    for (std::size_t i = 0; i < ids.size(); ++i) dt->row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var im2col(Var x, int kernel, int stride, int pad) {
  Mat out = kernels::im2col(x.value(), kernel, stride, pad);
  return x.tape->push(std::move(out), {x}, [x, kernel, stride, pad](Tape& t, const Mat& g) {
    const Eigen::Index width = x.cols();
    Mat dx = Mat::Zero(x.rows(), width);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (int j = 0; j < kernel; ++j) {
        const Eigen::Index src = r * stride - pad + j;
        if (src >= 0 && src < x.rows()) dx.row(src) += g.block(r, j * width, 1, width);
      }
    }
    t.accumulate(x, dx);
  });
}

Var attention(Var q, Var k, Var v, const AttentionSpec& spec) {
  Mat qr = q.value(), kr = k.value();
  if (spec.rope) {
    kernels::apply_rope(qr, spec.heads, spec.head_dim, spec.q_offset, spec.rope_base);
    kernels::apply_rope(kr, spec.kv_heads, spec.head_dim, 0, spec.rope_base);
  }
  std::vector<Mat> probs;
  const bool record = q.tape->recording();
  Mat out = kernels::attention(qr, kr, v.value(), spec, record ? &probs : nullptr);
  return q.tape->push(
      std::move(out), {q, k, v},
      [q, k, v, spec, qr = std::move(qr), kr = std::move(kr), probs = std::move(probs)](Tape& t, const Mat& g) {
        const int dh = spec.head_dim;
        const int group = spec.heads / spec.kv_heads;
        const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
        Mat dq = Mat::Zero(qr.rows(), qr.cols());
        Mat dk = Mat::Zero(kr.rows(), kr.cols());
        Mat dv = Mat::Zero(v.rows(), v.cols());
        for (int h = 0; h < spec.heads; ++h) {
          const int gi = h / group;
          const Mat& p = probs[h];
          const auto go = g.middleCols(h * dh, dh);
          dv.middleCols(gi * dh, dh) += p.transpose() * go;
          Mat dp = go * v.value().middleCols(gi * dh, dh).transpose();
          Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
          Mat ds = (p.array() * (dp.colwise() - row_dot).array()).matrix();
          dq.middleCols(h * dh, dh) += (ds * kr.middleCols(gi * dh, dh)) * sc;
          dk.middleCols(gi * dh, dh) += (ds.transpose() * qr.middleCols(h * dh, dh)) * sc;
        }
        if (spec.rope) {
          kernels::apply_rope(dq, spec.heads, dh, spec.q_offset, spec.rope_base, /*inverse=*/true);
          kernels::apply_rope(dk, spec.kv_heads, dh, 0, spec.rope_base, /*inverse=*/true);
        }
        t.accumulate(q, dq);
        t.accumulate(k, dk);
        t.accumulate(v, dv);
      });
}

Var sum_all(Var x) {
  Mat out = Mat::Constant(1, 1, x.value().sum());
  return x.tape->push(std::move(out), {x}, [x](Tape& t, const Mat& g) {
    t.accumulate(x, Mat::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var masked_cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<int>& mask) {
  const Mat& lv = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != lv.rows() || mask.size() != targets.size()) {
    throw ShapeError("masked_cross_entropy: targets/mask must have one entry per logit row");
  }
  int count = 0;
  for (int m : mask) count += m != 0;
  double total = 0.0;
  Mat probs = Mat::Zero(lv.rows(), lv.cols());
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || targets[r] >= lv.cols()) throw ShapeError("masked_cross_entropy: target id out of range");
    const double m = lv.row(r).maxCoeff();
    probs.row(r) = (lv.row(r).array() - m).exp().matrix();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    total -= (lv(r, targets[r]) - m) - std::log(z);
  }
  const double loss = count ? total / count : 0.0;
  return logits.tape->push(Mat::Constant(1, 1, loss), {logits},
                           [logits, targets, mask, count, probs = std::move(probs)](Tape& t, const Mat& g) {
                             if (count == 0) {
                               t.accumulate(logits, Mat::Zero(logits.rows(), logits.cols()));
                               return;
                             }
                             Mat d = probs;
                             for (Eigen::Index r = 0; r < d.rows(); ++r)
                               if (mask[r]) d(r, targets[r]) -= 1.0;
                             t.accumulate(logits, d * (g(0, 0) / count));
                           });
}

}  // namespace mst::ag
