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

// Multiple-choice VQA as a stack of binary problems:
//   y = sigmoid(W2 . relu(W1^T x) + b)
// scored for each of a question's candidate answers, plus accuracy and
// convex ensembles of decision values.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "vqs/dataset.hpp"
#include "vqs/optim.hpp"

namespace vqs {

inline constexpr std::size_t kDefaultMlpHidden = 8096;

struct MlpConfig {
  std::size_t input_dim = 0;
  std::size_t hidden = kDefaultMlpHidden;
  std::uint64_t seed = 0;
  double init_scale = 0.05;
};

// Tensors "W1" [input_dim, hidden], "W2" [hidden], "b" [1]; W1 and W2 are
// uniform(-s, s), b starts at zero.
ParamSet init_mlp(const MlpConfig& config);

// Throws kDimensionMismatch.
double mlp_forward(std::span<const double> x, const ParamSet& params);

double bce_loss(double y, int label);

// bce_loss(mlp_forward(x), label), evaluated from the logit so it stays
// finite for saturated scores. Adds the gradient to `grad` when non-null.
double mlp_loss_and_grad(std::span<const double> x, int label,
                         const ParamSet& params, ParamSet* grad);

struct ChoiceItem {
  Id question_id = 0;
  std::size_t candidate = 0;
  Vec input;
  int label = 0;
};

// Arg max, lowest index on ties.
std::size_t predict_choice(std::span<const double> scores);

// Scores for the items of one question, ordered by candidate index. Throws
// kIncompleteCandidates unless candidates 0..17 each appear exactly once.
Vec score_question(std::span<const ChoiceItem> items, const ParamSet& params);
std::size_t predict_question(std::span<const ChoiceItem> items,
                             const ParamSet& params);

// Fraction of questions whose prediction equals the labeled candidate.
// Throws kIdMismatch when the two maps cover different questions.
double accuracy(const std::map<Id, std::size_t>& predictions,
                const std::map<Id, std::size_t>& truth);

struct MlpTrainResult {
  ParamSet params;
  TrainReport report;
};

// Builds the input of item i on demand, so large sets need not be resident.
using InputFn = std::function<Vec(std::size_t)>;

// Mean binary cross-entropy over mini-batches of items.
MlpTrainResult train_mlp(std::span<const ChoiceItem> items,
                         const MlpConfig& model, const TrainConfig& config);
MlpTrainResult train_mlp(const InputFn& input, std::span<const int> labels,
                         const MlpConfig& model, const TrainConfig& config);

// Decision values of one model: scores[question][candidate].
using ModelScores = std::vector<Vec>;

// Per-question weighted sum of decision values followed by predict_choice.
// Throws kInvalidSimplex for weights that are negative, of the wrong count or
// do not sum to one within 1e-6.
std::vector<std::size_t> apply_ensemble(std::span<const ModelScores> models,
                                        std::span<const double> weights);

double choice_accuracy(std::span<const std::size_t> predicted,
                       std::span<const std::size_t> labels);

// Coordinate ascent on the simplex grid with spacing `step`: starts from the
// best single-model corner and moves weight between pairs of models while
// validation accuracy strictly improves. The scan order is fixed, so equal
// inputs give equal weights.
Vec tune_ensemble(std::span<const ModelScores> models,
                  std::span<const std::size_t> labels, double step = 0.05);

enum class AnswerType { kYesNo, kNumber, kOther };

std::string_view answer_type_name(AnswerType type);
// "yes"/"no" -> yes/no; a parseable count -> number; anything else -> other.
AnswerType answer_type(std::string_view answer);

}  // namespace vqs
