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

#include "mst/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "mst/error.hpp"

namespace mst {

double lr_at(const TrainerConfig& cfg, int step) {
  if (cfg.warmup_steps <= 0) return cfg.learning_rate;
  const double frac = std::min(1.0, static_cast<double>(step + 1) / cfg.warmup_steps);
  return cfg.learning_rate * frac;
}

double clip_gradients(const ParamList& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params)
    if (p->trainable() && p->has_grad()) sq += p->grad().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (auto* p : params)
      if (p->trainable() && p->has_grad()) p->mutable_grad() *= s;
  }
  return norm;
}

AdamW::AdamW(ParamList params, const TrainerConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.resize(params_.size());
  v_.resize(params_.size());
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    if (!p->trainable() || !p->has_grad()) continue;
    if (m_[i].size() == 0) {
      m_[i] = Mat::Zero(p->value().rows(), p->value().cols());
      v_[i] = m_[i];
    }
    const Mat& g = p->grad();
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    Mat& w = p->mutable_value();
    if (cfg_.weight_decay > 0) w *= (1.0 - lr * cfg_.weight_decay);
    w.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

void AdamW::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

MetricsCsv::MetricsCsv(const std::string& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open metrics file " + path);
  if (fresh) out_ << "step,phase,loss,lr\n";
}

void MetricsCsv::write(const StepRecord& r) {
  if (!out_.is_open()) return;
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",%.8g,%.8g\n", r.loss, r.lr);
  out_ << r.step << ',' << r.phase << buf;
  out_.flush();
}

std::vector<StepRecord> train_loop(const ParamList& params, std::size_t n_items, int steps, const TrainerConfig& cfg,
                                   const std::string& phase, const ItemLoss& item_loss,
                                   const std::function<void(const StepRecord&)>& on_step) {
  std::vector<StepRecord> log;
  if (steps <= 0 || n_items == 0) return log;
  if (cfg.batch_size <= 0) throw ValidationError("batch_size must be > 0");
  AdamW opt(params, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n_items;
  const std::size_t batch = std::min<std::size_t>(cfg.batch_size, n_items);
  for (int step = 0; step < steps; ++step) {
    opt.zero_grad();
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == n_items) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      loss += item_loss(order[cursor++], 1.0 / batch);
    }
    loss /= batch;
    clip_gradients(params, cfg.grad_clip);
    const double lr = lr_at(cfg, step);
    opt.step(lr);
    StepRecord r{step, phase, loss, lr};
    log.push_back(r);
    if (on_step) on_step(r);
  }
  opt.zero_grad();
  return log;
}

}  // namespace mst
