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

// Question-focused segmentation by mask aggregation.
//
// Each of N proposal masks e_i with feature z_i gets a weight
//   s_i = softmax_i(x_q^T A z_i)
// and the answer is threshold(sum_i s_i e_i, tau). A is fit by minimizing the
// per-pixel mean squared error against the ground-truth mask.
//
// The oracle upper bound replaces proposals by the image's instance segments
// and decides inclusion per segment with the multiple-choice MLP applied to
// (segment feature | question feature).

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vqs/dataset.hpp"
#include "vqs/mask.hpp"
#include "vqs/optim.hpp"
#include "vqs/vqa.hpp"

namespace vqs {

inline constexpr std::size_t kDefaultProposals = 25;
inline constexpr double kDefaultTau = 0.5;

struct ProposalSet {
  Id image_id = 0;
  std::vector<BinaryMask> masks;
  std::vector<Vec> features;
};

// Tensor "A" [question_dim, proposal_dim], all zeros.
ParamSet init_aggregator(std::size_t question_dim, std::size_t proposal_dim);

// Throws kDimensionMismatch.
Vec score_proposals(std::span<const double> question,
                    const ProposalSet& proposals, const ParamSet& params);

struct QfssPrediction {
  SoftMask soft;
  BinaryMask binary;
  Vec weights;
};

QfssPrediction predict_mask(std::span<const double> question,
                            const ProposalSet& proposals,
                            const ParamSet& params, double tau = kDefaultTau);

// (1/P) sum_p (E(p) - gt(p))^2. Throws kDimensionMismatch.
double qfss_loss(const SoftMask& soft, const BinaryMask& ground_truth);

// Pixel statistics that make the loss a quadratic form in s:
//   P * loss = s^T O s - 2 s^T c + |gt|
struct ProposalOverlap {
  std::size_t n = 0;
  Vec gram;     // O[i][j] = |e_i & e_j|, n x n
  Vec overlap;  // c[i] = |e_i & gt|
  double gt_pixels = 0.0;
  double pixels = 0.0;
};

ProposalOverlap proposal_overlap(const ProposalSet& proposals,
                                 const BinaryMask& ground_truth);

// Softmax weights from proposal features alone.
Vec score_features(std::span<const double> question, std::span<const Vec> features,
                   const ParamSet& params);

// Loss of one question through score_proposals; adds dL/dA to `grad` when
// non-null.
double aggregator_loss_and_grad(std::span<const double> question,
                                std::span<const Vec> features,
                                const ProposalOverlap& overlap,
                                const ParamSet& params, ParamSet* grad);

struct AggregatorExample {
  Id question_id = 0;
  Vec question;
  ProposalSet proposals;
  BinaryMask ground_truth;
};

struct AggregatorTrainResult {
  ParamSet params;
  TrainReport report;
};

// Everything training needs from one question; masks are only seen through
// their overlap statistics.
struct AggregatorSample {
  Id question_id = 0;
  Vec question;
  std::vector<Vec> features;
  ProposalOverlap overlap;
};

AggregatorSample make_sample(const AggregatorExample& example);

// Throws kMissingProposals for an example with no proposals.
AggregatorTrainResult train_aggregator(std::span<const AggregatorSample> samples,
                                       const TrainConfig& config);
AggregatorTrainResult train_aggregator(std::span<const AggregatorExample> examples,
                                       const TrainConfig& config);

double mean_iou(std::span<const AggregatorExample> examples,
                const ParamSet& params, double tau);

inline constexpr std::array<double, 9> kTauGrid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                                   0.6, 0.7, 0.8, 0.9};

// Given one score per kTauGrid entry, keeps 0.5 unless another value is
// strictly better; the first such maximum wins.
double pick_tau(std::span<const double> scores);

// pick_tau over the mean IOU of each grid value on the given examples.
double select_tau(std::span<const AggregatorExample> examples,
                  const ParamSet& params);

struct OracleCandidate {
  Id segment_id = 0;
  BinaryMask mask;
  Vec features;
};

struct OracleQuestion {
  Id question_id = 0;
  Vec question;
  std::vector<OracleCandidate> candidates;
  std::vector<int> labels;  // 1 when the candidate is part of the answer
};

// segment features followed by question features.
Vec oracle_input(const OracleCandidate& candidate, std::span<const double> question);

// Trains the binary classifier on every (candidate, question) pair.
MlpTrainResult train_oracle(std::span<const OracleQuestion> questions,
                            const MlpConfig& model, const TrainConfig& config);

// Union of candidates scoring >= 0.5; when none does, the single
// highest-scoring candidate. Throws kMissingFeatures without candidates.
BinaryMask oracle_predict(const OracleQuestion& question, const ParamSet& params);

struct IouRow {
  std::string type;
  std::size_t count = 0;
  double mean_selected = 0.0;
  double mean_candidates = 0.0;
  double mean_iou = 0.0;
};

// Row "All" first, then one row per question type in report order.
struct IouTable {
  std::vector<IouRow> rows;
};

// One evaluated question.
struct IouSample {
  QuestionType type = QuestionType::kOthers;
  std::size_t selected = 0;
  std::size_t candidates = 0;
  double iou = 0.0;
};

IouTable summarize_iou(std::span<const IouSample> samples);

// Throws kMissingPrediction when a listed question has no prediction.
IouTable evaluate_iou(const std::map<Id, BinaryMask>& predictions,
                      const Dataset& dataset,
                      std::span<const VqsRecord* const> questions);

std::string format_iou_table(const IouTable& table);

}  // namespace vqs
