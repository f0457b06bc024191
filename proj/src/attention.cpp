// Copyright 2026 The VQS Toolkit Authors
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

#include "vqs/attention.hpp"

#include <algorithm>
#include <cmath>

#include "vqs/error.hpp"
#include "vqs/random.hpp"

namespace vqs {

namespace {

struct Shapes {
  std::size_t region_dim;
  std::size_t question_dim;
  std::size_t hidden;
};

Shapes shapes_of(const ParamSet& params) {
  const Tensor& w_r = params.at("W_r");
  const Tensor& w_q = params.at("W_q");
  const Tensor& w = params.at("w");
  const Tensor& p_q = params.at("P_q");
  if (w_r.shape.size() != 2 || w_q.shape.size() != 2 || w.shape.size() != 1 ||
      p_q.shape.size() != 2 || w_r.shape[1] != w.shape[0] ||
      w_q.shape[1] != w.shape[0] || p_q.shape[0] != w_q.shape[0] ||
      p_q.shape[1] != w_r.shape[0]) {
    fail(ErrorCode::kShapeMismatch, "inconsistent attention parameter shapes");
  }
  return {w_r.shape[0], w_q.shape[0], w.shape[0]};
}

void check_inputs(const Shapes& s, std::span<const double> question,
                  const RegionGrid& regions) {
  if (question.size() != s.question_dim) {
    fail(ErrorCode::kDimensionMismatch,
         "question vector has " + std::to_string(question.size()) +
             " values, model expects " + std::to_string(s.question_dim));
  }
  if (regions.dim != s.region_dim || regions.g < 1 ||
      regions.features.size() != regions.regions() * regions.dim) {
    fail(ErrorCode::kDimensionMismatch,
         "region grid does not match model region dim " +
             std::to_string(s.region_dim));
  }
}

// Hidden activations (R x hidden) and scores u (R).
struct Forward {
  Vec hidden;
  Vec scores;
  Vec weights;
  double log_norm = 0.0;  // log sum exp(u)
};

Forward run_forward(const Shapes& s, std::span<const double> question,
                    const RegionGrid& regions, const ParamSet& params) {
  const Vec& w_r = params.at("W_r").data;
  const Vec& w_q = params.at("W_q").data;
  const Vec& w = params.at("w").data;
  const std::size_t h = s.hidden;
  const std::size_t R = regions.regions();

  Vec q_proj(h, 0.0);
  for (std::size_t k = 0; k < s.question_dim; ++k) {
    const double qk = question[k];
    if (qk == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) q_proj[j] += qk * w_q[k * h + j];
  }

  Forward f;
  f.hidden.assign(R * h, 0.0);
  f.scores.assign(R, 0.0);
  for (std::size_t i = 0; i < R; ++i) {
    double* a = f.hidden.data() + i * h;
    std::copy(q_proj.begin(), q_proj.end(), a);
    const auto r = regions.region(i);
    for (std::size_t k = 0; k < s.region_dim; ++k) {
      const double rk = r[k];
      if (rk == 0.0) continue;
      for (std::size_t j = 0; j < h; ++j) a[j] += rk * w_r[k * h + j];
    }
    double u = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      a[j] = std::tanh(a[j]);
      u += w[j] * a[j];
    }
    f.scores[i] = u;
  }
  const double top = *std::max_element(f.scores.begin(), f.scores.end());
  double z = 0.0;
  f.weights.resize(R);
  for (std::size_t i = 0; i < R; ++i) {
    f.weights[i] = std::exp(f.scores[i] - top);
    z += f.weights[i];
  }
  for (auto& p : f.weights) p /= z;
  f.log_norm = top + std::log(z);
  return f;
}

}  // namespace

ParamSet init_attention(const AttentionConfig& config) {
  ParamSet params;
  params.add("W_r", {config.region_dim, config.hidden});
  params.add("W_q", {config.question_dim, config.hidden});
  params.add("w", {config.hidden});
  params.add("P_q", {config.question_dim, config.region_dim});
  Rng rng(config.seed);
  for (auto& t : params.tensors()) {
    for (auto& v : t.data) v = uniform_real(rng, -config.init_scale, config.init_scale);
  }
  return params;
}

AttentionOutput attention_forward(std::span<const double> question,
                                  const RegionGrid& regions,
                                  const ParamSet& params) {
  const Shapes s = shapes_of(params);
  check_inputs(s, question, regions);
  Forward f = run_forward(s, question, regions, params);

  AttentionOutput out;
  out.x_att.assign(s.region_dim, 0.0);
  for (std::size_t i = 0; i < regions.regions(); ++i) {
    const auto r = regions.region(i);
    for (std::size_t k = 0; k < s.region_dim; ++k) out.x_att[k] += f.weights[i] * r[k];
  }
  const Vec& p_q = params.at("P_q").data;
  for (std::size_t k = 0; k < s.question_dim; ++k) {
    for (std::size_t m = 0; m < s.region_dim; ++m) {
      out.x_att[m] += question[k] * p_q[k * s.region_dim + m];
    }
  }
  out.weights = std::move(f.weights);
  return out;
}

ProbGrid attention_target(const VqsRecord& record, const Dataset& dataset, int g) {
  return normalize_l1(downsample_to_grid(ground_truth_mask(record, dataset), g));
}

double attention_loss(std::span<const double> weights, const ProbGrid& target) {
  if (weights.size() != target.cells.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "attention has " + std::to_string(weights.size()) + " cells, target " +
             std::to_string(target.cells.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (target.cells[i] > 0.0) loss -= target.cells[i] * std::log(weights[i]);
  }
  return loss;
}

double attention_loss_and_grad(std::span<const double> question,
                               const RegionGrid& regions,
                               const ProbGrid& target, const ParamSet& params,
                               ParamSet* grad) {
  const Shapes s = shapes_of(params);
  check_inputs(s, question, regions);
  if (target.g != regions.g || target.cells.size() != regions.regions()) {
    fail(ErrorCode::kDimensionMismatch,
         "target grid " + std::to_string(target.g) + " vs region grid " +
             std::to_string(regions.g));
  }
  const Forward f = run_forward(s, question, regions, params);
  const std::size_t R = regions.regions();
  const std::size_t h = s.hidden;

  double mass = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    mass += target.cells[i];
    loss -= target.cells[i] * (f.scores[i] - f.log_norm);
  }
  if (!grad) return loss;

  const Vec& w = params.at("w").data;
  Vec& d_wr = grad->at("W_r").data;
  Vec& d_wq = grad->at("W_q").data;
  Vec& d_w = grad->at("w").data;
  Vec d_a_sum(h, 0.0);
  Vec d_a(h);
  for (std::size_t i = 0; i < R; ++i) {
    const double delta = f.weights[i] * mass - target.cells[i];
    const double* hid = f.hidden.data() + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      d_w[j] += delta * hid[j];
      d_a[j] = delta * w[j] * (1.0 - hid[j] * hid[j]);
      d_a_sum[j] += d_a[j];
    }
    const auto r = regions.region(i);
    for (std::size_t k = 0; k < s.region_dim; ++k) {
      const double rk = r[k];
      if (rk == 0.0) continue;
      for (std::size_t j = 0; j < h; ++j) d_wr[k * h + j] += rk * d_a[j];
    }
  }
  for (std::size_t k = 0; k < s.question_dim; ++k) {
    const double qk = question[k];
    if (qk == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) d_wq[k * h + j] += qk * d_a_sum[j];
  }
  // P_q does not influence the weights, so its gradient stays zero.
  return loss;
}

AttentionTrainResult train_attention(std::size_t n_examples,
                                     const AttentionExampleFn& example,
                                     const AttentionConfig& model,
                                     const TrainConfig& config) {
  AttentionTrainResult result{init_attention(model), {}};
  auto batch_loss = [&](const ParamSet& params, std::span<const std::size_t> batch,
                        ParamSet* grad) {
    double total = 0.0;
    for (std::size_t idx : batch) {
      const AttentionExample ex = example(idx);
      total += attention_loss_and_grad(ex.question, ex.regions, ex.target, params, grad);
    }
    const double n = static_cast<double>(batch.size());
    if (grad) {
      for (auto& t : grad->tensors()) {
        for (auto& v : t.data) v /= n;
      }
    }
    return total / n;
  };
  result.report = fit(result.params, n_examples, config, batch_loss);
  return result;
}

AttentionTrainResult train_attention(std::span<const AttentionExample> examples,
                                     const AttentionConfig& model,
                                     const TrainConfig& config) {
  return train_attention(
      examples.size(), [&](std::size_t i) { return examples[i]; }, model, config);
}

}  // namespace vqs
