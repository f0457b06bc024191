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
#include <numeric>

#include "support.hpp"
#include "vqs/attention.hpp"
#include "vqs/error.hpp"

using namespace vqs;

namespace {

Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (auto& x : v) x = uniform_real(rng, -scale, scale);
  return v;
}

RegionGrid random_grid(Rng& rng, int g, std::size_t d) {
  return {g, d, random_vec(rng, static_cast<std::size_t>(g * g) * d)};
}

ProbGrid random_target(Rng& rng, int g) {
  ValueGrid v{g, random_vec(rng, static_cast<std::size_t>(g * g))};
  for (auto& x : v.cells) x = x < 0 ? 0.0 : x;
  return normalize_l1(v);
}

ParamSet random_params(const AttentionConfig& c, Rng& rng, double scale) {
  auto p = init_attention(c);
  for (auto& t : p.tensors())
    for (auto& x : t.data) x = uniform_real(rng, -scale, scale);
  return p;
}

// Four regions holding a permutation of the basis; the question names one.
std::vector<AttentionExample> permutation_examples(std::size_t n, std::uint64_t seed) {
  std::vector<AttentionExample> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto perm = seeded_permutation(4, seed + k);
    AttentionExample ex;
    ex.question.assign(4, 0.0);
    const std::size_t want = k % 4;
    ex.question[want] = 1.0;
    ex.regions = {2, 4, Vec(16, 0.0)};
    ex.target = {2, Vec(4, 0.0)};
    for (std::size_t i = 0; i < 4; ++i) {
      ex.regions.features[i * 4 + perm[i]] = 1.0;
      if (perm[i] == want) ex.target.cells[i] = 1.0;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("zero parameters give uniform weights") {
  AttentionConfig c{3, 2, 5, 0, 0.05};
  auto p = init_attention(c).zeros_like();
  Rng rng(1);
  auto out = attention_forward(Vec{1, 2, 3}, random_grid(rng, 3, 2), p);
  REQUIRE(out.weights.size() == 9);
  for (double w : out.weights) CHECK(w == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("a dominant score takes almost all the weight") {
  // hidden 1, w = 50: region 0 saturates tanh at +1, others sit at 0
  AttentionConfig c{1, 1, 1, 0, 0.05};
  auto p = init_attention(c).zeros_like();
  p.at("W_r").data[0] = 100.0;
  p.at("w").data[0] = 50.0;
  RegionGrid grid{2, 1, {1, 0, 0, 0}};
  auto out = attention_forward(Vec{0}, grid, p);
  CHECK(out.weights[0] > 0.99);
  const double oracle = std::exp(50.0 * std::tanh(100.0)) /
                        (std::exp(50.0 * std::tanh(100.0)) + 3.0);
  CHECK(out.weights[0] == doctest::Approx(oracle));
}

TEST_CASE("single region: weight one and x_att is r plus the question projection") {
  AttentionConfig c{2, 3, 4, 7, 0.5};
  auto p = init_attention(c);
  RegionGrid grid{1, 3, {0.5, -1, 2}};
  Vec q{0.3, -0.7};
  auto out = attention_forward(q, grid, p);
  REQUIRE(out.weights.size() == 1);
  CHECK(out.weights[0] == doctest::Approx(1.0));
  const auto& pq = p.at("P_q").data;
  for (std::size_t m = 0; m < 3; ++m) {
    const double want = grid.features[m] + q[0] * pq[m] + q[1] * pq[3 + m];
    CHECK(out.x_att[m] == doctest::Approx(want));
  }
}

TEST_CASE("weights form a simplex for arbitrary parameters") {
  Rng rng(3);
  AttentionConfig c{3, 4, 6, 0, 0.05};
  for (int t = 0; t < 50; ++t) {
    auto p = random_params(c, rng, 5.0);
    auto out = attention_forward(random_vec(rng, 3, 3.0), random_grid(rng, 3, 4), p);
    double s = 0.0;
    for (double w : out.weights) {
      CHECK(w >= 0.0);
      s += w;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("forward rejects inconsistent dimensions") {
  AttentionConfig c{3, 4, 6, 0, 0.05};
  auto p = init_attention(c);
  Rng rng(4);
  CHECK_THROWS_AS(attention_forward(Vec{1, 2}, random_grid(rng, 2, 4), p), Error);
  CHECK_THROWS_AS(attention_forward(Vec{1, 2, 3}, random_grid(rng, 2, 5), p), Error);
}

TEST_CASE("attention_loss examples") {
  Vec p{0.5, 0.5};
  ProbGrid t{1, {0.75, 0.25}};
  CHECK(attention_loss(p, t) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Vec uniform(9, 1.0 / 9.0);
  Rng rng(5);
  CHECK(attention_loss(uniform, random_target(rng, 3)) == doctest::Approx(std::log(9.0)));
  Vec sharp{1.0 - 1e-12, 1e-12};
  ProbGrid hot{1, {1.0, 0.0}};
  CHECK(attention_loss(sharp, hot) < 1e-9);
}

TEST_CASE("loss_and_grad agrees with forward plus attention_loss") {
  Rng rng(6);
  AttentionConfig c{3, 2, 5, 0, 0.05};
  auto p = random_params(c, rng, 1.0);
  Vec q = random_vec(rng, 3);
  auto grid = random_grid(rng, 2, 2);
  auto t = random_target(rng, 2);
  CHECK(attention_loss_and_grad(q, grid, t, p, nullptr) ==
        doctest::Approx(attention_loss(attention_forward(q, grid, p).weights, t)));
}

TEST_CASE("attention gradients pass a finite-difference check") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    AttentionConfig c{3, 2, 4, 0, 0.05};
    auto p = random_params(c, rng, 1.0);
    std::vector<AttentionExample> ex;
    for (int k = 0; k < 3; ++k) ex.push_back({random_vec(rng, 3), random_grid(rng, 2, 2), random_target(rng, 2)});
    auto loss = [&](const ParamSet& params, ParamSet* g) {
      double total = 0.0;
      for (const auto& e : ex) total += attention_loss_and_grad(e.question, e.regions, e.target, params, g);
      return total;
    };
    CHECK(grad_check(loss, p) < 1e-4);
  }
}

TEST_CASE("attention_target examples") {
  std::vector<ImageMeta> images{{1, "a.png", 4, 4}};
  SegmentRecord cell;
  cell.segment_id = 1;
  cell.image_id = 1;
  cell.encoding = Polygon{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
  SegmentRecord two_cells = cell;
  two_cells.segment_id = 2;
  two_cells.encoding = Polygon{{{0, 0}, {4, 0}, {4, 2}, {0, 2}}};
  auto rec = [](Id qid, std::vector<Id> segs, std::vector<Box> boxes) {
    VqsRecord r;
    r.question_id = qid;
    r.image_id = 1;
    r.selected_segment_ids = std::move(segs);
    r.boxes = std::move(boxes);
    return r;
  };
  Dataset ds(images, {cell, two_cells}, {});
  CHECK(attention_target(rec(1, {1}, {}), ds, 2).cells == Vec{1, 0, 0, 0});
  CHECK(attention_target(rec(2, {2}, {}), ds, 2).cells == Vec{0.5, 0.5, 0, 0});
  // three pixels of the top-left cell and one of the top-right
  auto t = attention_target(rec(3, {}, {{0, 0, 2, 1}, {0, 1, 1, 1}, {2, 0, 1, 1}}), ds, 2);
  CHECK(t.cells[0] == doctest::Approx(0.75));
  CHECK(t.cells[1] == doctest::Approx(0.25));
  CHECK(t.cells[2] == 0.0);
  CHECK(t.cells[3] == 0.0);
  auto flagged = rec(4, {1}, {});
  flagged.flag = Flag::kAmbiguous;
  CHECK_THROWS_AS(attention_target(flagged, ds, 2), Error);
}

TEST_CASE("aligned masks stay one-hot at refining grids") {
  // 12x12 image, mask = top-left 3x3 block: aligned at g = 4, 12
  std::vector<ImageMeta> images{{1, "a.png", 12, 12}};
  SegmentRecord s;
  s.segment_id = 1;
  s.image_id = 1;
  s.encoding = Polygon{{{0, 0}, {3, 0}, {3, 3}, {0, 3}}};
  VqsRecord r;
  r.question_id = 1;
  r.image_id = 1;
  r.selected_segment_ids = {1};
  Dataset ds(images, {s}, {r});
  auto t4 = attention_target(r, ds, 4);
  CHECK(t4.cells[0] == 1.0);
  CHECK(std::accumulate(t4.cells.begin(), t4.cells.end(), 0.0) == doctest::Approx(1.0));
  auto t12 = attention_target(r, ds, 12);
  double s12 = std::accumulate(t12.cells.begin(), t12.cells.end(), 0.0);
  CHECK(s12 == doctest::Approx(1.0));
  CHECK(t12.cells[0] == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("training on a separable construction drives the loss down") {
  auto ex = permutation_examples(20, 100);
  AttentionConfig c{4, 4, 16, 3, 0.05};
  TrainConfig tc;
  tc.epochs = 300;
  tc.batch_size = 4;
  tc.lr = 0.01;
  tc.seed = 3;
  auto r = train_attention(ex, c, tc);
  CHECK(r.report.final_loss < 0.1 * r.report.initial_loss);
}

TEST_CASE("training is deterministic and zero epochs returns the initialization") {
  auto ex = permutation_examples(8, 7);
  AttentionConfig c{4, 4, 8, 11, 0.05};
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 9;
  auto a = train_attention(ex, c, tc);
  auto b = train_attention(ex, c, tc);
  CHECK(a.params == b.params);
  tc.epochs = 0;
  CHECK(train_attention(ex, c, tc).params == init_attention(c));
}
