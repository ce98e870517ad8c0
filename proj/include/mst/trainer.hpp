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
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mst/config.hpp"
#include "mst/layers.hpp"

namespace mst {

struct StepRecord {
  int step = 0;
  std::string phase;
  double loss = 0.0;
  double lr = 0.0;
};

// Linear warmup to the base rate, then constant.
double lr_at(const TrainerConfig& cfg, int step);

// Scales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_gradients(const ParamList& params, double max_norm);

// AdamW with decoupled weight decay. Only parameters flagged trainable are
// touched; frozen ones keep their exact values.
class AdamW {
 public:
  AdamW(ParamList params, const TrainerConfig& cfg);
  void step(double lr);
  void zero_grad();
  int steps_taken() const { return t_; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  TrainerConfig cfg_;
  std::vector<Mat> m_, v_;
  int t_ = 0;
};

// Appends step/phase/loss/lr rows; writes the header when the file is new.
class MetricsCsv {
 public:
  MetricsCsv() = default;
  explicit MetricsCsv(const std::string& path);
  void write(const StepRecord& r);
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

// Computes one item's loss, backpropagates it scaled by `weight`, and
// returns the unscaled loss.
using ItemLoss = std::function<double(std::size_t item, double weight)>;

// Mini-batch loop over `n_items` items: seeded shuffles per epoch, batch
// loss is the mean of per-item losses.
std::vector<StepRecord> train_loop(const ParamList& params, std::size_t n_items, int steps, const TrainerConfig& cfg,
                                   const std::string& phase, const ItemLoss& item_loss,
                                   const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace mst
