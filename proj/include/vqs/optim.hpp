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

// Training machinery shared by the attention network, the multiple-choice
// MLP and the mask aggregator: named parameter tensors, Adam, mini-batches,
// a central-difference gradient checker and checkpoint files.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqs/features.hpp"

namespace vqs {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  Vec data;  // row-major

  std::size_t numel() const;
};

class ParamSet {
 public:
  ParamSet() = default;

  // Zero-filled tensor; returns its index.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return tensors_.size(); }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  // Throws kNotFound.
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const Tensor* find(const std::string& name) const;

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  bool same_shape(const ParamSet& other) const;
  std::size_t numel() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<Tensor> tensors_;
};

struct AdamState {
  std::uint64_t step = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Vec> m;
  std::vector<Vec> v;

  static AdamState fresh(const ParamSet& params, double lr = 0.001);
};

// One bias-corrected Adam update. An all-zero gradient leaves parameters and
// state untouched. Throws kShapeMismatch.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

// Returns the loss at `params`; fills `grad` (already shaped like params,
// zeroed by the caller) when non-null.
using LossFn = std::function<double(const ParamSet& params, ParamSet* grad)>;

// Max over coordinates of |a - n| / max(1e-8, |a| + |n|), with n the central
// difference (f(theta + h) - f(theta - h)) / 2h.
double grad_check(const LossFn& loss, const ParamSet& params, double h = 1e-3);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double lr = 0.001;
};

// Every index in [0, n) exactly once; the order is a seeded permutation per
// epoch when shuffling, else identity.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                   const TrainConfig& config,
                                                   std::size_t epoch = 0);

// Mean loss over a batch of example indices, with its gradient.
using BatchLossFn = std::function<double(const ParamSet& params,
                                         std::span<const std::size_t> batch,
                                         ParamSet* grad)>;

struct TrainReport {
  double initial_loss = 0.0;       // full pass before the first update
  std::vector<double> epoch_loss;  // mean batch loss seen during each epoch
  double final_loss = 0.0;         // full pass after the last update
};

// Runs config.epochs of mini-batch Adam, single-threaded and deterministic
// for a given seed.
TrainReport fit(ParamSet& params, std::size_t n_examples,
                const TrainConfig& config, const BatchLossFn& loss);

// Full-pass mean loss over all n examples.
double mean_loss(const ParamSet& params, std::size_t n_examples,
                 const BatchLossFn& loss);

// Named binary32 tensors plus optional Adam moments.
//   "VQSC" | u32 version (1) | u32 n_tensors |
//   per tensor: u32 name_len | name | u32 rank | rank x u64 dims | data |
//   u8 has_adam | [u64 step | f64 lr, beta1, beta2, eps | m and v tensors
//   in parameter order].
struct Checkpoint {
  ParamSet params;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const AdamState* adam = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vqs
