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

#include "vqs/vqa.hpp"

#include <algorithm>
#include <cmath>

#include "vqs/error.hpp"
#include "vqs/random.hpp"
#include "vqs/text.hpp"

namespace vqs {

namespace {

std::size_t hidden_of(const ParamSet& params, std::size_t input_dim) {
  const Tensor& w1 = params.at("W1");
  const Tensor& w2 = params.at("W2");
  const Tensor& b = params.at("b");
  if (w1.shape.size() != 2 || w2.shape.size() != 1 || w1.shape[1] != w2.shape[0] ||
      b.data.size() != 1) {
    fail(ErrorCode::kShapeMismatch, "inconsistent MLP parameter shapes");
  }
  if (input_dim != w1.shape[0]) {
    fail(ErrorCode::kDimensionMismatch,
         "MLP input has " + std::to_string(input_dim) + " values, model expects " +
             std::to_string(w1.shape[0]));
  }
  return w1.shape[1];
}

// Pre-activations of the hidden layer.
Vec hidden_pre(std::span<const double> x, const Vec& w1, std::size_t h) {
  Vec pre(h, 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double* row = w1.data() + k * h;
    for (std::size_t j = 0; j < h; ++j) pre[j] += xk * row[j];
  }
  return pre;
}

double logit(const Vec& pre, const Vec& w2, double b) {
  double z = b;
  for (std::size_t j = 0; j < pre.size(); ++j) {
    if (pre[j] > 0.0) z += w2[j] * pre[j];
  }
  return z;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

ParamSet init_mlp(const MlpConfig& config) {
  ParamSet params;
  params.add("W1", {config.input_dim, config.hidden});
  params.add("W2", {config.hidden});
  params.add("b", {1});
  Rng rng(config.seed);
  for (auto* t : {&params.at("W1"), &params.at("W2")}) {
    for (auto& v : t->data) v = uniform_real(rng, -config.init_scale, config.init_scale);
  }
  return params;
}

double mlp_forward(std::span<const double> x, const ParamSet& params) {
  const std::size_t h = hidden_of(params, x.size());
  const Vec pre = hidden_pre(x, params.at("W1").data, h);
  return sigmoid(logit(pre, params.at("W2").data, params.at("b").data[0]));
}

double bce_loss(double y, int label) {
  return label ? -std::log(y) : -std::log(1.0 - y);
}

double mlp_loss_and_grad(std::span<const double> x, int label,
                         const ParamSet& params, ParamSet* grad) {
  const std::size_t h = hidden_of(params, x.size());
  const Vec& w2 = params.at("W2").data;
  const Vec pre = hidden_pre(x, params.at("W1").data, h);
  const double z = logit(pre, w2, params.at("b").data[0]);
  const double t = label ? 1.0 : 0.0;
  // softplus(z) - t z, written to avoid overflow.
  const double loss = std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)));
  if (!grad) return loss;

  const double dz = sigmoid(z) - t;
  Vec& d_w1 = grad->at("W1").data;
  Vec& d_w2 = grad->at("W2").data;
  grad->at("b").data[0] += dz;
  Vec d_pre(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    if (pre[j] > 0.0) {
      d_w2[j] += dz * pre[j];
      d_pre[j] = dz * w2[j];
    }
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    double* row = d_w1.data() + k * h;
    for (std::size_t j = 0; j < h; ++j) row[j] += xk * d_pre[j];
  }
  return loss;
}

std::size_t predict_choice(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorCode::kIncompleteCandidates, "no candidate scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Vec score_question(std::span<const ChoiceItem> items, const ParamSet& params) {
  if (items.size() != kNumCandidates) {
    fail(ErrorCode::kIncompleteCandidates,
         "question has " + std::to_string(items.size()) + " candidates, expected " +
             std::to_string(kNumCandidates));
  }
  Vec scores(kNumCandidates, 0.0);
  std::vector<bool> seen(kNumCandidates, false);
  for (const auto& item : items) {
    if (item.candidate >= kNumCandidates || seen[item.candidate] ||
        item.question_id != items.front().question_id) {
      fail(ErrorCode::kIncompleteCandidates,
           "question " + std::to_string(items.front().question_id) +
               " has a repeated, foreign or out-of-range candidate");
    }
    seen[item.candidate] = true;
    scores[item.candidate] = mlp_forward(item.input, params);
  }
  return scores;
}

std::size_t predict_question(std::span<const ChoiceItem> items,
                             const ParamSet& params) {
  return predict_choice(score_question(items, params));
}

double accuracy(const std::map<Id, std::size_t>& predictions,
                const std::map<Id, std::size_t>& truth) {
  if (predictions.size() != truth.size()) {
    fail(ErrorCode::kIdMismatch,
         std::to_string(predictions.size()) + " predictions for " +
             std::to_string(truth.size()) + " questions");
  }
  if (truth.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [qid, label] : truth) {
    auto it = predictions.find(qid);
    if (it == predictions.end()) {
      fail(ErrorCode::kIdMismatch, "no prediction for question " + std::to_string(qid));
    }
    correct += it->second == label;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

MlpTrainResult train_mlp(const InputFn& input, std::span<const int> labels,
                         const MlpConfig& model, const TrainConfig& config) {
  MlpTrainResult result{init_mlp(model), {}};
  auto batch_loss = [&](const ParamSet& params, std::span<const std::size_t> batch,
                        ParamSet* grad) {
    double total = 0.0;
    for (std::size_t idx : batch) {
      total += mlp_loss_and_grad(input(idx), labels[idx], params, grad);
    }
    const double n = static_cast<double>(batch.size());
    if (grad) {
      for (auto& t : grad->tensors()) {
        for (auto& v : t.data) v /= n;
      }
    }
    return total / n;
  };
  result.report = fit(result.params, labels.size(), config, batch_loss);
  return result;
}

MlpTrainResult train_mlp(std::span<const ChoiceItem> items,
                         const MlpConfig& model, const TrainConfig& config) {
  std::vector<int> labels;
  labels.reserve(items.size());
  for (const auto& item : items) labels.push_back(item.label);
  return train_mlp([&](std::size_t i) { return items[i].input; }, labels, model, config);
}

namespace {

void check_models(std::span<const ModelScores> models) {
  if (models.empty()) fail(ErrorCode::kInvalidArgument, "ensemble of no models");
  for (const auto& m : models) {
    if (m.size() != models.front().size()) {
      fail(ErrorCode::kDimensionMismatch, "models score different question sets");
    }
    for (std::size_t q = 0; q < m.size(); ++q) {
      if (m[q].size() != models.front()[q].size()) {
        fail(ErrorCode::kDimensionMismatch,
             "models disagree on the candidate count of question " + std::to_string(q));
      }
    }
  }
}

std::vector<std::size_t> combine(std::span<const ModelScores> models,
                                 std::span<const double> weights) {
  const std::size_t n_questions = models.front().size();
  std::vector<std::size_t> out(n_questions);
  Vec combined;
  for (std::size_t q = 0; q < n_questions; ++q) {
    combined.assign(models.front()[q].size(), 0.0);
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (weights[m] == 0.0) continue;
      for (std::size_t c = 0; c < combined.size(); ++c) {
        combined[c] += weights[m] * models[m][q][c];
      }
    }
    out[q] = predict_choice(combined);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> apply_ensemble(std::span<const ModelScores> models,
                                        std::span<const double> weights) {
  check_models(models);
  if (weights.size() != models.size()) {
    fail(ErrorCode::kInvalidSimplex,
         std::to_string(weights.size()) + " weights for " +
             std::to_string(models.size()) + " models");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvalidSimplex, "negative ensemble weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorCode::kInvalidSimplex, "ensemble weights sum to " + std::to_string(sum));
  }
  return combine(models, weights);
}

double choice_accuracy(std::span<const std::size_t> predicted,
                       std::span<const std::size_t> labels) {
  if (predicted.size() != labels.size()) {
    fail(ErrorCode::kIdMismatch, "prediction and label counts differ");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Vec tune_ensemble(std::span<const ModelScores> models,
                  std::span<const std::size_t> labels, double step) {
  check_models(models);
  if (!(step > 0.0) || step > 1.0) {
    fail(ErrorCode::kInvalidArgument, "ensemble grid step must be in (0, 1]");
  }
  const std::size_t M = models.size();
  const auto units = static_cast<long>(std::lround(1.0 / step));
  // Weights live on the grid as integer units summing to `units`.
  std::vector<long> best_units(M, 0);
  auto score = [&](const std::vector<long>& u) {
    Vec w(M);
    for (std::size_t m = 0; m < M; ++m) w[m] = static_cast<double>(u[m]) / units;
    return choice_accuracy(combine(models, w), labels);
  };

  double best = -1.0;
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<long> corner(M, 0);
    corner[m] = units;
    const double acc = score(corner);
    if (acc > best) {
      best = acc;
      best_units = corner;
    }
  }

  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t to = 0; to < M; ++to) {
      for (std::size_t from = 0; from < M; ++from) {
        if (to == from) continue;
        for (long k = 1; k <= best_units[from]; ++k) {
          std::vector<long> trial = best_units;
          trial[from] -= k;
          trial[to] += k;
          const double acc = score(trial);
          if (acc > best) {
            best = acc;
            best_units = trial;
            improved = true;
            break;
          }
        }
      }
    }
  }

  Vec weights(M);
  for (std::size_t m = 0; m < M; ++m) {
    weights[m] = static_cast<double>(best_units[m]) / units;
  }
  return weights;
}

std::string_view answer_type_name(AnswerType type) {
  switch (type) {
    case AnswerType::kYesNo: return "yes/no";
    case AnswerType::kNumber: return "number";
    case AnswerType::kOther: return "other";
  }
  return "other";
}

AnswerType answer_type(std::string_view answer) {
  const auto tokens = tokenize(answer);
  if (tokens.size() == 1 && (tokens[0] == "yes" || tokens[0] == "no")) {
    return AnswerType::kYesNo;
  }
  if (parse_count(answer)) return AnswerType::kNumber;
  return AnswerType::kOther;
}

}  // namespace vqs
