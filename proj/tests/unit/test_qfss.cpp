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

#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "vqs/error.hpp"
#include "vqs/qfss.hpp"

using namespace vqs;

namespace {

ProposalSet random_proposals(Rng& rng, std::size_t n, std::size_t dim, int h, int w) {
  ProposalSet p;
  for (std::size_t i = 0; i < n; ++i) {
    p.masks.push_back(test::random_mask(rng, h, w, uniform_real(rng, 0.1, 0.7)));
    Vec z(dim);
    for (auto& x : z) x = uniform_real(rng, -1, 1);
    p.features.push_back(std::move(z));
  }
  return p;
}

ParamSet random_a(Rng& rng, std::size_t qd, std::size_t zd, double scale) {
  auto a = init_aggregator(qd, zd);
  for (auto& x : a.at("A").data) x = uniform_real(rng, -scale, scale);
  return a;
}

Vec random_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (auto& x : v) x = uniform_real(rng, -1, 1);
  return v;
}

}  // namespace

TEST_CASE("aggregator starts at zero and scores uniformly") {
  auto a = init_aggregator(3, 4);
  for (double x : a.at("A").data) CHECK(x == 0.0);
  Rng rng(1);
  auto p = random_proposals(rng, 5, 4, 4, 4);
  auto s = score_proposals(Vec{1, 2, 3}, p, a);
  for (double x : s) CHECK(x == doctest::Approx(0.2));
}

TEST_CASE("softmax of logits one and zero") {
  // 1-d question and features: logit = q * A * z
  auto a = init_aggregator(1, 1);
  a.at("A").data[0] = 1.0;
  ProposalSet p;
  p.masks = {BinaryMask(1, 2), BinaryMask(1, 2)};
  p.features = {{1.0}, {0.0}};
  auto s = score_proposals(Vec{1.0}, p, a);
  const double e = std::exp(1.0);
  CHECK(s[0] == doctest::Approx(e / (e + 1.0)));
  CHECK(s[1] == doctest::Approx(1.0 / (e + 1.0)));
  CHECK(s[0] == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("scores are a simplex and shift invariant") {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    auto p = random_proposals(rng, 6, 3, 3, 3);
    auto a = random_a(rng, 2, 3, 20.0);
    Vec q = random_vec(rng, 2);
    auto s = score_proposals(q, p, a);
    double sum = 0.0;
    for (double x : s) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    // a constant extra feature coordinate with a matching column adds the
    // same amount to every logit
    auto shifted = p;
    for (auto& z : shifted.features) z.push_back(1.0);
    auto a2 = init_aggregator(2, 4);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 3; ++j) a2.at("A").data[i * 4 + j] = a.at("A").data[i * 3 + j];
      a2.at("A").data[i * 4 + 3] = 7.5;
    }
    auto s2 = score_proposals(q, shifted, a2);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s2[i] == doctest::Approx(s[i]).epsilon(1e-9));
  }
}

TEST_CASE("score_proposals errors") {
  auto a = init_aggregator(2, 3);
  ProposalSet empty;
  try {
    score_proposals(Vec{1, 1}, empty, a);
    FAIL("expected MissingProposals");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingProposals);
  }
  Rng rng(3);
  auto p = random_proposals(rng, 2, 3, 2, 2);
  CHECK_THROWS_AS(score_proposals(Vec{1, 1, 1}, p, a), Error);
  p.features.pop_back();
  CHECK_THROWS_AS(score_proposals(Vec{1, 1}, p, a), Error);
}

TEST_CASE("predict_mask examples") {
  Rng rng(4);
  auto a = random_a(rng, 2, 3, 3.0);
  auto one = random_proposals(rng, 1, 3, 5, 5);
  for (double tau : {0.1, 0.5, 0.9, 1.0})
    CHECK(predict_mask(Vec{0.3, -0.2}, one, a, tau).binary == one.masks[0]);

  auto same = random_proposals(rng, 3, 3, 5, 5);
  same.masks = {same.masks[0], same.masks[0], same.masks[0]};
  CHECK(predict_mask(Vec{1, 1}, same, a, 0.5).binary == same.masks[0]);

  // weights (0.8, 0.2) from logits log 4 and 0
  auto b = init_aggregator(1, 1);
  b.at("A").data[0] = std::log(4.0);
  ProposalSet d;
  BinaryMask left(1, 2), right(1, 2);
  left.set(0, 0);
  right.set(0, 1);
  d.masks = {left, right};
  d.features = {{1.0}, {0.0}};
  auto pred = predict_mask(Vec{1.0}, d, b, 0.5);
  CHECK(pred.weights[0] == doctest::Approx(0.8));
  CHECK(pred.binary == left);
}

TEST_CASE("qfss_loss examples") {
  Rng rng(5);
  auto gt = test::random_mask(rng, 4, 5, 0.5);
  CHECK(qfss_loss(to_soft(gt), gt) == 0.0);
  CHECK(qfss_loss({4, 5, Vec(20, 0.5)}, gt) == doctest::Approx(0.25));
  BinaryMask g(1, 2);
  g.set(0, 0);
  CHECK(qfss_loss({1, 2, {0.8, 0.2}}, g) == doctest::Approx(0.04));
  CHECK_THROWS_AS(qfss_loss({2, 2, Vec(4, 0.0)}, g), Error);
}

TEST_CASE("quadratic form equals the pixel loss of the aggregate") {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    auto p = random_proposals(rng, 1 + uniform_index(rng, 6), 3, 7, 6);
    auto gt = test::random_mask(rng, 7, 6, 0.4);
    auto a = random_a(rng, 2, 3, 2.0);
    Vec q = random_vec(rng, 2);
    auto ov = proposal_overlap(p, gt);
    const double direct = qfss_loss(predict_mask(q, p, a).soft, gt);
    CHECK(aggregator_loss_and_grad(q, p.features, ov, a, nullptr) ==
          doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("aggregator gradients pass a finite-difference check") {
  Rng rng(7);
  for (int t = 0; t < 5; ++t) {
    std::vector<AggregatorSample> samples;
    for (int k = 0; k < 3; ++k) {
      AggregatorExample ex;
      ex.question = random_vec(rng, 3);
      ex.proposals = random_proposals(rng, 4, 2, 5, 5);
      ex.ground_truth = test::random_mask(rng, 5, 5, 0.4);
      samples.push_back(make_sample(ex));
    }
    auto a = random_a(rng, 3, 2, 1.0);
    auto loss = [&](const ParamSet& params, ParamSet* g) {
      double total = 0.0;
      for (const auto& s : samples)
        total += aggregator_loss_and_grad(s.question, s.features, s.overlap, params, g);
      return total;
    };
    CHECK(grad_check(loss, a) < 1e-4);
  }
}

TEST_CASE("trained aggregator solves the separable construction") {
  auto ex = test::separable_aggregator_set(30, 5, 8, 11);
  TrainConfig tc;
  tc.epochs = 200;
  tc.lr = 0.05;
  tc.batch_size = 8;
  tc.seed = 2;
  auto r = train_aggregator(std::span<const AggregatorExample>(ex), tc);
  CHECK(r.report.final_loss < r.report.initial_loss);
  CHECK(mean_iou(ex, r.params, 0.5) >= 0.95);
}

TEST_CASE("aggregator training is deterministic; zero epochs stays at zero") {
  auto ex = test::separable_aggregator_set(6, 3, 4, 5);
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 8;
  std::span<const AggregatorExample> span(ex);
  CHECK(train_aggregator(span, tc).params == train_aggregator(span, tc).params);
  tc.epochs = 0;
  CHECK(train_aggregator(span, tc).params == init_aggregator(4, 4));
}

TEST_CASE("pick_tau keeps 0.5 unless something is strictly better") {
  CHECK(pick_tau(Vec(9, 0.3)) == 0.5);
  Vec s{0.1, 0.2, 0.6, 0.6, 0.5, 0.6, 0.1, 0.1, 0.1};
  CHECK(pick_tau(s) == doctest::Approx(0.3));
  Vec flat_peak{0.1, 0.2, 0.3, 0.4, 0.7, 0.7, 0.1, 0.1, 0.1};
  CHECK(pick_tau(flat_peak) == 0.5);
  CHECK(kTauGrid.front() == 0.1);
  CHECK(kTauGrid.back() == 0.9);
}

TEST_CASE("select_tau returns a grid value") {
  auto ex = test::separable_aggregator_set(5, 3, 4, 9);
  auto a = init_aggregator(4, 4);
  const double tau = select_tau(ex, a);
  bool on_grid = false;
  for (double g : kTauGrid) on_grid = on_grid || g == tau;
  CHECK(on_grid);
  // uniform weights over 3 disjoint bands give 1/3 everywhere: only tau <= 0.3 keeps pixels
  CHECK(tau <= 0.3);
}

TEST_CASE("oracle learns a separable labeling and bounds the aggregator") {
  auto qs = test::category_oracle_set(60, 5, 3, 21);
  TrainConfig tc;
  tc.epochs = 60;
  tc.lr = 0.01;
  tc.seed = 1;
  auto r = train_oracle(qs, {6, 32, 4, 0.05}, tc);
  double oracle = 0.0;
  auto as_agg = test::as_aggregator_examples(qs);
  for (std::size_t i = 0; i < qs.size(); ++i)
    oracle += iou(oracle_predict(qs[i], r.params), as_agg[i].ground_truth);
  oracle /= static_cast<double>(qs.size());
  CHECK(oracle == 1.0);
  TrainConfig ac;
  ac.epochs = 50;
  ac.lr = 0.05;
  auto agg = train_aggregator(std::span<const AggregatorExample>(as_agg), ac);
  CHECK(mean_iou(as_agg, agg.params, select_tau(as_agg, agg.params)) <= oracle);
}

TEST_CASE("oracle falls back to the top segment") {
  auto qs = test::category_oracle_set(1, 4, 2, 3);
  auto p = init_mlp({4, 2, 0, 0.05});
  p.at("W1").data.assign(8, 0.0);
  p.at("b").data[0] = -5.0;
  // every score is sigma(-5): ties go to the first candidate
  CHECK(oracle_predict(qs[0], p) == qs[0].candidates[0].mask);
  // lift one category through its feature coordinate; still below 0.5
  p.at("W1").data.assign(8, 0.0);
  p.at("W2").data.assign(2, 0.0);
  const std::size_t cat = qs[0].candidates[2].features[0] == 1.0 ? 0 : 1;
  p.at("W1").data[cat * 2] = 1.0;
  p.at("W2").data[0] = 1.0;
  std::size_t first = 0;
  while (qs[0].candidates[first].features[cat] != 1.0) ++first;
  CHECK(oracle_predict(qs[0], p) == qs[0].candidates[first].mask);
  OracleQuestion none;
  CHECK_THROWS_AS(oracle_predict(none, p), Error);
}

TEST_CASE("iou table rows and totals") {
  std::vector<IouSample> s{{QuestionType::kWhere, 1, 4, 1.0},
                           {QuestionType::kWhere, 2, 4, 0.5},
                           {QuestionType::kWhy, 1, 6, 0.0}};
  auto t = summarize_iou(s);
  REQUIRE(t.rows.size() == 12);
  CHECK(t.rows[0].type == "All");
  CHECK(t.rows[0].count == 3);
  CHECK(t.rows[0].mean_iou == doctest::Approx(0.5));
  CHECK(t.rows[0].mean_candidates == doctest::Approx(14.0 / 3.0));
  std::size_t total = 0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    total += t.rows[i].count;
    if (t.rows[i].type == "where") {
      CHECK(t.rows[i].count == 2);
      CHECK(t.rows[i].mean_iou == doctest::Approx(0.75));
      CHECK(t.rows[i].mean_selected == doctest::Approx(1.5));
    }
  }
  CHECK(total == 3);
  auto text = format_iou_table(t);
  CHECK(text.rfind("Type", 0) == 0);
  CHECK(text.find("All") != std::string::npos);
}

TEST_CASE("evaluate_iou on perfect, empty and missing predictions") {
  auto ds = drop_flagged(load_dataset(std::string(VQS_FIXTURE_DIR) + "/tiny"));
  std::vector<const VqsRecord*> qs;
  std::map<Id, BinaryMask> perfect, blank;
  for (const auto& r : ds.records()) {
    qs.push_back(&r);
    auto gt = ground_truth_mask(r, ds);
    perfect[r.question_id] = gt;
    blank[r.question_id] = BinaryMask(gt.height(), gt.width());
  }
  for (const auto& row : evaluate_iou(perfect, ds, qs).rows)
    if (row.count > 0) CHECK(row.mean_iou == 1.0);
  for (const auto& row : evaluate_iou(blank, ds, qs).rows)
    if (row.count > 0) CHECK(row.mean_iou == 0.0);
  perfect.erase(qs[0]->question_id);
  try {
    evaluate_iou(perfect, ds, qs);
    FAIL("expected MissingPrediction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPrediction);
  }
}
