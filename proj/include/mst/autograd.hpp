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

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mst/tensor.hpp"

namespace mst::ag {

// A named weight. `grad` accumulates across Tape::backward calls until the
// optimizer clears it.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Mat value, bool trainable = true)
      : name_(std::move(name)), value_(std::move(value)), trainable_(trainable) {}

  const std::string& name() const { return name_; }
  const Mat& value() const { return value_; }
  Mat& mutable_value() { return value_; }
  const Mat& grad() const { return grad_; }
  Mat& mutable_grad();
  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }
  void zero_grad() { grad_.resize(0, 0); }
  bool has_grad() const { return grad_.size() > 0; }
  Eigen::Index size() const { return value_.size(); }

 private:
  std::string name_;
  Mat value_;
  Mat grad_;
  bool trainable_ = true;
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Records operations eagerly and replays them backwards. A tape built with
// record=false only computes values (inference).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Mat value);
  // Leaf whose gradient is kept on the tape (read it with grad()).
  Var input(Mat value, bool requires_grad = true);
  // Gradient reaches the parameter only if it is trainable. The node reads
  // the parameter in place, so it must not change while the tape lives;
  // repeated calls return the same node.
  Var param(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and accumulates parameter grads.
  void backward(Var loss, double seed = 1.0);
  const Mat& grad(Var v) const;

  // Op plumbing.
  using BackwardFn = std::function<void(Tape&, const Mat& grad_out)>;
  Var push(Mat value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Mat value, const std::vector<Var>& inputs, BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  void accumulate(Var v, const Mat& g);
  // Zero-initialized gradient buffer of a node, for ops that scatter into
  // it. Returns nullptr when the node needs no gradient.
  Mat* grad_buffer(Var v);
  const Mat& value(int id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value() : n.value;
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;  // unused for parameter nodes, which read the parameter
    Mat grad;
    bool needs_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool record_;
};

// ---- ops ----------------------------------------------------------------
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_bias(Var x, Var bias);  // bias is [1 x cols], broadcast over rows
Var add_constant(Var x, const Mat& c);
Var scale(Var x, double s);
Var gelu(Var x);
Var mul(Var a, Var b);  // elementwise
Var layer_norm(Var x, Var gamma, Var beta);
Var rms_norm(Var x, Var gamma);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var x, Eigen::Index start, Eigen::Index count);
Var pool_rows(Var x, int stride, bool max_pool);
Var gather_rows(Var table, const std::vector<int>& ids);
Var im2col(Var x, int kernel, int stride, int pad);
Var attention(Var q, Var k, Var v, const AttentionSpec& spec);
Var sum_all(Var x);
// Mean NLL of `targets` under row-wise softmax(logits), over rows whose
// mask is non-zero. Returns a 1x1 node; an all-zero mask yields 0 with zero
// gradient.
Var masked_cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<int>& mask);

}  // namespace mst::ag
