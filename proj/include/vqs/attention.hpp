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

// Supervised region attention.
//
// For a question vector q and regional features r_1..r_R (R = g*g):
//   h_i = tanh(W_r^T r_i + W_q^T q),  u_i = w . h_i,  p = softmax(u)
//   x_att = sum_i p_i r_i + P_q^T q
// The weights p are trained with cross-entropy against targets obtained by
// down-sampling the ground-truth answer mask to the g x g grid and
// l1-normalizing it.

#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "vqs/dataset.hpp"
#include "vqs/mask.hpp"
#include "vqs/optim.hpp"

namespace vqs {

inline constexpr int kDefaultGrid = 14;

// g*g regions of `dim` features each, in the same row-major cell order as
// ProbGrid.
struct RegionGrid {
  int g = 0;
  std::size_t dim = 0;
  Vec features;

  std::size_t regions() const { return static_cast<std::size_t>(g) * g; }
  std::span<const double> region(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

struct AttentionConfig {
  std::size_t question_dim = 0;
  std::size_t region_dim = 0;
  std::size_t hidden = 512;
  std::uint64_t seed = 0;
  double init_scale = 0.05;  // uniform(-s, s)
};

// Tensors "W_r" [region_dim, hidden], "W_q" [question_dim, hidden],
// "w" [hidden], "P_q" [question_dim, region_dim].
ParamSet init_attention(const AttentionConfig& config);

struct AttentionOutput {
  Vec weights;  // p, sums to one
  Vec x_att;    // region_dim values
};

// Throws kDimensionMismatch.
AttentionOutput attention_forward(std::span<const double> question,
                                  const RegionGrid& regions,
                                  const ParamSet& params);

// normalize_l1(downsample_to_grid(ground_truth_mask(record), g)). Throws
// kFlaggedRecord.
ProbGrid attention_target(const VqsRecord& record, const Dataset& dataset, int g);

// -sum_i t_i log p_i; cells with t_i == 0 contribute nothing.
double attention_loss(std::span<const double> weights, const ProbGrid& target);

// Loss of one example; when `grad` is non-null the parameter gradient is
// added to it.
double attention_loss_and_grad(std::span<const double> question,
                               const RegionGrid& regions,
                               const ProbGrid& target, const ParamSet& params,
                               ParamSet* grad);

struct AttentionExample {
  Vec question;
  RegionGrid regions;
  ProbGrid target;
};

struct AttentionTrainResult {
  ParamSet params;
  TrainReport report;
};

AttentionTrainResult train_attention(std::span<const AttentionExample> examples,
                                     const AttentionConfig& model,
                                     const TrainConfig& config);

// Builds example i on demand.
using AttentionExampleFn = std::function<AttentionExample(std::size_t)>;

AttentionTrainResult train_attention(std::size_t n_examples,
                                     const AttentionExampleFn& example,
                                     const AttentionConfig& model,
                                     const TrainConfig& config);

}  // namespace vqs
