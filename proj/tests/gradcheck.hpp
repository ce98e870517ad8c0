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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mst/autograd.hpp"
#include "mst/layers.hpp"

namespace mst::testing {

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

// Reduces a matrix-valued output to a scalar with fixed random weights so
// every output element contributes a distinct gradient.
using Graph = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradReport {
  double max_rel = 0.0;
  int checked = 0;
};

// Relative error ||a - n|| / (||a|| + ||n||). Gradients that are zero by
// symmetry (e.g. a key bias under softmax) leave only finite-difference
// noise, so below `kZeroNorm` the absolute difference is reported instead.
constexpr double kZeroNorm = 1e-7;

inline double grad_error(const Mat& a, const Mat& n) {
  const double scale = a.norm() + n.norm();
  return scale < kZeroNorm ? (a - n).norm() : (a - n).norm() / scale;
}

// Central differences against Tape gradients for every element of every
// input.
inline GradReport check_inputs(const Graph& graph, std::vector<Mat> inputs, std::uint64_t seed = 11,
                               double h = 1e-6) {
  std::mt19937_64 rng(seed);
  Mat proj;
  auto scalar = [&](Tape& t, const std::vector<Var>& vars) {
    Var out = graph(t, vars);
    if (proj.size() == 0) proj = random_mat(rng, out.rows(), out.cols());
    return ag::sum_all(ag::mul(out, t.constant(proj)));
  };
  std::vector<Mat> analytic;
  {
    Tape t;
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(t.input(m));
    Var loss = scalar(t, vars);
    t.backward(loss);
    for (const auto& v : vars) analytic.push_back(t.grad(v));
  }
  auto eval = [&](const std::vector<Mat>& in) {
    Tape t(false);
    std::vector<Var> vars;
    for (const auto& m : in) vars.push_back(t.constant(m));
    return scalar(t, vars).value()(0, 0);
  };
  GradReport rep;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Mat numeric(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double x0 = inputs[k].data()[i];
      inputs[k].data()[i] = x0 + h;
      const double fp = eval(inputs);
      inputs[k].data()[i] = x0 - h;
      const double fm = eval(inputs);
      inputs[k].data()[i] = x0;
      numeric.data()[i] = (fp - fm) / (2.0 * h);
      ++rep.checked;
    }
    const Mat& a = analytic[k].size() ? analytic[k] : Mat::Zero(numeric.rows(), numeric.cols()).eval();
    rep.max_rel = std::max(rep.max_rel, grad_error(a, numeric));
  }
  return rep;
}

// Same check for parameters reached through a closure (layers, adapters).
inline GradReport check_params(const std::function<Var(Tape&)>& graph, const ParamList& params,
                               std::uint64_t seed = 13, double h = 1e-6) {
  std::mt19937_64 rng(seed);
  Mat proj;
  auto scalar = [&](Tape& t) {
    Var out = graph(t);
    if (proj.size() == 0) proj = random_mat(rng, out.rows(), out.cols());
    return ag::sum_all(ag::mul(out, t.constant(proj)));
  };
  for (auto* p : params) p->zero_grad();
  {
    Tape t;
    t.backward(scalar(t));
  }
  GradReport rep;
  for (auto* p : params) {
    Mat a = p->has_grad() ? p->grad() : Mat::Zero(p->value().rows(), p->value().cols()).eval();
    Mat numeric(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < p->size(); ++i) {
      double& x = p->mutable_value().data()[i];
      const double x0 = x;
      x = x0 + h;
      double fp, fm;
      {
        Tape t(false);
        fp = scalar(t).value()(0, 0);
      }
      x = x0 - h;
      {
        Tape t(false);
        fm = scalar(t).value()(0, 0);
      }
      x = x0;
      numeric.data()[i] = (fp - fm) / (2.0 * h);
      ++rep.checked;
    }
    rep.max_rel = std::max(rep.max_rel, grad_error(a, numeric));
    p->zero_grad();
  }
  return rep;
}

}  // namespace mst::testing
