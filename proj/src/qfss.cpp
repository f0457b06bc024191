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

#include "vqs/qfss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vqs/error.hpp"

namespace vqs {

namespace {

const Tensor& aggregator_matrix(const ParamSet& params) {
  const Tensor& a = params.at("A");
  if (a.shape.size() != 2) fail(ErrorCode::kShapeMismatch, "A must be a matrix");
  return a;
}

void check_features(std::span<const Vec> features, const Tensor& a,
                    std::size_t question_dim) {
  if (features.empty()) fail(ErrorCode::kMissingProposals, "no proposals to score");
  if (question_dim != a.shape[0]) {
    fail(ErrorCode::kDimensionMismatch,
         "question vector has " + std::to_string(question_dim) +
             " values, A has " + std::to_string(a.shape[0]) + " rows");
  }
  for (const auto& z : features) {
    if (z.size() != a.shape[1]) {
      fail(ErrorCode::kDimensionMismatch,
           "proposal feature has " + std::to_string(z.size()) +
               " values, A has " + std::to_string(a.shape[1]) + " columns");
    }
  }
}

// x_q^T A, a row of proposal_dim values.
Vec project_question(std::span<const double> question, const Tensor& a) {
  const std::size_t cols = a.shape[1];
  Vec out(cols, 0.0);
  for (std::size_t k = 0; k < question.size(); ++k) {
    const double qk = question[k];
    if (qk == 0.0) continue;
    for (std::size_t m = 0; m < cols; ++m) out[m] += qk * a.data[k * cols + m];
  }
  return out;
}

Vec softmax(const Vec& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  Vec s(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::exp(logits[i] - top);
    z += s[i];
  }
  for (auto& v : s) v /= z;
  return s;
}

}  // namespace

ParamSet init_aggregator(std::size_t question_dim, std::size_t proposal_dim) {
  ParamSet params;
  params.add("A", {question_dim, proposal_dim});
  return params;
}

Vec score_features(std::span<const double> question, std::span<const Vec> features,
                   const ParamSet& params) {
  const Tensor& a = aggregator_matrix(params);
  check_features(features, a, question.size());
  const Vec qa = project_question(question, a);
  Vec logits(features.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const Vec& z = features[i];
    for (std::size_t m = 0; m < z.size(); ++m) logits[i] += qa[m] * z[m];
  }
  return softmax(logits);
}

Vec score_proposals(std::span<const double> question,
                    const ProposalSet& proposals, const ParamSet& params) {
  if (proposals.masks.empty()) {
    fail(ErrorCode::kMissingProposals,
         "no proposals for image " + std::to_string(proposals.image_id));
  }
  if (proposals.features.size() != proposals.masks.size()) {
    fail(ErrorCode::kDimensionMismatch,
         std::to_string(proposals.masks.size()) + " proposal masks but " +
             std::to_string(proposals.features.size()) + " feature vectors");
  }
  return score_features(question, proposals.features, params);
}

QfssPrediction predict_mask(std::span<const double> question,
                            const ProposalSet& proposals,
                            const ParamSet& params, double tau) {
  QfssPrediction out;
  out.weights = score_proposals(question, proposals, params);
  out.soft = aggregate(proposals.masks, out.weights);
  out.binary = threshold(out.soft, tau);
  return out;
}

double qfss_loss(const SoftMask& soft, const BinaryMask& ground_truth) {
  if (soft.height != ground_truth.height() || soft.width != ground_truth.width() ||
      soft.values.size() != ground_truth.size()) {
    fail(ErrorCode::kDimensionMismatch, "soft mask and ground truth differ in size");
  }
  const auto& gt = ground_truth.bits();
  double sum = 0.0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    const double d = soft.values[p] - static_cast<double>(gt[p]);
    sum += d * d;
  }
  return sum / static_cast<double>(gt.size());
}

ProposalOverlap proposal_overlap(const ProposalSet& proposals,
                                 const BinaryMask& ground_truth) {
  const std::size_t n = proposals.masks.size();
  ProposalOverlap o;
  o.n = n;
  o.gram.assign(n * n, 0.0);
  o.overlap.assign(n, 0.0);
  o.gt_pixels = static_cast<double>(ground_truth.count());
  o.pixels = static_cast<double>(ground_truth.size());
  const auto& gt = ground_truth.bits();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ei = proposals.masks[i];
    if (ei.height() != ground_truth.height() || ei.width() != ground_truth.width()) {
      fail(ErrorCode::kDimensionMismatch,
           "proposal " + std::to_string(i) + " differs in size from the ground truth");
    }
    const auto& bi = ei.bits();
    std::size_t hit = 0;
    for (std::size_t p = 0; p < bi.size(); ++p) hit += bi[p] & gt[p];
    o.overlap[i] = static_cast<double>(hit);
    for (std::size_t j = i; j < n; ++j) {
      const auto& bj = proposals.masks[j].bits();
      std::size_t both = 0;
      for (std::size_t p = 0; p < bi.size(); ++p) both += bi[p] & bj[p];
      o.gram[i * n + j] = o.gram[j * n + i] = static_cast<double>(both);
    }
  }
  return o;
}

double aggregator_loss_and_grad(std::span<const double> question,
                                std::span<const Vec> features,
                                const ProposalOverlap& overlap,
                                const ParamSet& params, ParamSet* grad) {
  const Tensor& a = aggregator_matrix(params);
  const Vec s = score_features(question, features, params);
  const std::size_t n = s.size();
  if (overlap.n != n) {
    fail(ErrorCode::kDimensionMismatch, "overlap statistics cover a different proposal count");
  }
  Vec os(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) os[i] += overlap.gram[i * n + j] * s[j];
  }
  double quad = overlap.gt_pixels;
  for (std::size_t i = 0; i < n; ++i) quad += s[i] * os[i] - 2.0 * s[i] * overlap.overlap[i];
  const double loss = quad / overlap.pixels;
  if (!grad) return loss;

  // dL/ds, then back through the softmax.
  Vec g(n);
  double mean_g = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = 2.0 * (os[i] - overlap.overlap[i]) / overlap.pixels;
    mean_g += s[i] * g[i];
  }
  const std::size_t cols = a.shape[1];
  Vec dz(cols, 0.0);  // sum_i delta_i z_i
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = s[i] * (g[i] - mean_g);
    const Vec& z = features[i];
    for (std::size_t m = 0; m < cols; ++m) dz[m] += delta * z[m];
  }
  Vec& d_a = grad->at("A").data;
  for (std::size_t k = 0; k < question.size(); ++k) {
    for (std::size_t m = 0; m < cols; ++m) d_a[k * cols + m] += question[k] * dz[m];
  }
  return loss;
}

AggregatorSample make_sample(const AggregatorExample& example) {
  if (example.proposals.masks.empty()) {
    fail(ErrorCode::kMissingProposals,
         "question " + std::to_string(example.question_id) + " has no proposals");
  }
  return {example.question_id, example.question, example.proposals.features,
          proposal_overlap(example.proposals, example.ground_truth)};
}

AggregatorTrainResult train_aggregator(std::span<const AggregatorSample> samples,
                                       const TrainConfig& config) {
  if (samples.empty()) fail(ErrorCode::kMissingProposals, "no training questions");
  for (const auto& sample : samples) {
    if (sample.features.empty()) {
      fail(ErrorCode::kMissingProposals,
           "question " + std::to_string(sample.question_id) + " has no proposals");
    }
  }
  const auto& first = samples.front();
  AggregatorTrainResult result{
      init_aggregator(first.question.size(), first.features.front().size()), {}};
  auto batch_loss = [&](const ParamSet& params, std::span<const std::size_t> batch,
                        ParamSet* grad) {
    double total = 0.0;
    for (std::size_t idx : batch) {
      const auto& sample = samples[idx];
      total += aggregator_loss_and_grad(sample.question, sample.features,
                                        sample.overlap, params, grad);
    }
    const double n = static_cast<double>(batch.size());
    if (grad) {
      for (auto& v : grad->at("A").data) v /= n;
    }
    return total / n;
  };
  result.report = fit(result.params, samples.size(), config, batch_loss);
  return result;
}

AggregatorTrainResult train_aggregator(std::span<const AggregatorExample> examples,
                                       const TrainConfig& config) {
  std::vector<AggregatorSample> samples;
  samples.reserve(examples.size());
  for (const auto& ex : examples) samples.push_back(make_sample(ex));
  return train_aggregator(std::span<const AggregatorSample>(samples), config);
}

double mean_iou(std::span<const AggregatorExample> examples,
                const ParamSet& params, double tau) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    total += iou(predict_mask(ex.question, ex.proposals, params, tau).binary,
                 ex.ground_truth);
  }
  return total / static_cast<double>(examples.size());
}

double pick_tau(std::span<const double> scores) {
  if (scores.size() != kTauGrid.size()) {
    fail(ErrorCode::kInvalidArgument, "expected one score per threshold");
  }
  std::size_t best = 4;
  for (std::size_t k = 0; k < kTauGrid.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return kTauGrid[best];
}

double select_tau(std::span<const AggregatorExample> examples,
                  const ParamSet& params) {
  std::array<double, kTauGrid.size()> scores{};
  for (std::size_t k = 0; k < kTauGrid.size(); ++k) {
    scores[k] = mean_iou(examples, params, kTauGrid[k]);
  }
  return pick_tau(scores);
}

Vec oracle_input(const OracleCandidate& candidate, std::span<const double> question) {
  Vec x(candidate.features);
  x.insert(x.end(), question.begin(), question.end());
  return x;
}

MlpTrainResult train_oracle(std::span<const OracleQuestion> questions,
                            const MlpConfig& model, const TrainConfig& config) {
  std::vector<ChoiceItem> items;
  for (const auto& q : questions) {
    if (q.labels.size() != q.candidates.size()) {
      fail(ErrorCode::kDimensionMismatch,
           "question " + std::to_string(q.question_id) + " has " +
               std::to_string(q.labels.size()) + " labels for " +
               std::to_string(q.candidates.size()) + " candidates");
    }
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
      items.push_back({q.question_id, i, oracle_input(q.candidates[i], q.question),
                       q.labels[i]});
    }
  }
  return train_mlp(items, model, config);
}

BinaryMask oracle_predict(const OracleQuestion& question, const ParamSet& params) {
  if (question.candidates.empty()) {
    fail(ErrorCode::kMissingFeatures,
         "question " + std::to_string(question.question_id) + " has no candidate segments");
  }
  std::vector<BinaryMask> chosen;
  std::size_t top = 0;
  double top_score = -1.0;
  for (std::size_t i = 0; i < question.candidates.size(); ++i) {
    const auto& c = question.candidates[i];
    const double y = mlp_forward(oracle_input(c, question.question), params);
    if (y >= 0.5) chosen.push_back(c.mask);
    if (y > top_score) {
      top_score = y;
      top = i;
    }
  }
  if (chosen.empty()) return question.candidates[top].mask;
  return mask_union(chosen);
}

IouTable summarize_iou(std::span<const IouSample> samples) {
  struct Acc {
    std::size_t n = 0;
    double selected = 0.0;
    double candidates = 0.0;
    double iou = 0.0;
  };
  Acc all;
  std::map<QuestionType, Acc> by_type;
  for (const auto& sample : samples) {
    for (Acc* acc : {&all, &by_type[sample.type]}) {
      ++acc->n;
      acc->selected += static_cast<double>(sample.selected);
      acc->candidates += static_cast<double>(sample.candidates);
      acc->iou += sample.iou;
    }
  }
  auto row = [](std::string name, const Acc& a) {
    IouRow out{std::move(name), a.n, 0.0, 0.0, 0.0};
    if (a.n > 0) {
      const auto n = static_cast<double>(a.n);
      out.mean_selected = a.selected / n;
      out.mean_candidates = a.candidates / n;
      out.mean_iou = a.iou / n;
    }
    return out;
  };
  IouTable table;
  table.rows.push_back(row("All", all));
  for (QuestionType type : kAllQuestionTypes) {
    table.rows.push_back(row(std::string(question_type_name(type)), by_type[type]));
  }
  return table;
}

IouTable evaluate_iou(const std::map<Id, BinaryMask>& predictions,
                      const Dataset& dataset,
                      std::span<const VqsRecord* const> questions) {
  std::vector<IouSample> samples;
  samples.reserve(questions.size());
  for (const VqsRecord* r : questions) {
    auto it = predictions.find(r->question_id);
    if (it == predictions.end()) {
      fail(ErrorCode::kMissingPrediction,
           "no prediction for question " + std::to_string(r->question_id));
    }
    samples.push_back({classify_question(r->question), r->selected_segment_ids.size(),
                       dataset.segment_count(r->image_id),
                       iou(it->second, ground_truth_mask(*r, dataset))});
  }
  return summarize_iou(samples);
}

std::string format_iou_table(const IouTable& table) {
  std::string out = "Type           Num.   #seg ans/candts   IOU\n";
  char line[128];
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof(line), "%-14s %-6zu %4.1f/%-12.1f %.4f\n",
                  r.type.c_str(), r.count, r.mean_selected, r.mean_candidates,
                  r.mean_iou);
    out += line;
  }
  return out;
}

}  // namespace vqs
