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

#include <algorithm>
#include <numeric>

#include "vqs/random.hpp"
#include "vqs/text.hpp"

using namespace vqs;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("What color is the Ball?") ==
        std::vector<std::string>{"what", "color", "is", "the", "ball"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("dog's tail") == std::vector<std::string>{"dog", "s", "tail"});
}

TEST_CASE("parse_count accepts digits and number words") {
  CHECK(parse_count("2") == 2);
  CHECK(parse_count(" 7 ") == 7);
  CHECK(parse_count("Three") == 3);
  CHECK(parse_count("ten") == 10);
  CHECK_FALSE(parse_count("eleven").has_value());
  CHECK_FALSE(parse_count("2 dogs").has_value());
  CHECK_FALSE(parse_count("").has_value());
  CHECK_FALSE(parse_count("1234567890").has_value());
}

TEST_CASE("uniform_index stays in range and hits every value") {
  Rng rng(1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto k = uniform_index(rng, 7);
    REQUIRE(k < 7);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("uniform_real stays in the half-open range") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    double x = uniform_real(rng, -2.0, 3.0);
    CHECK(x >= -2.0);
    CHECK(x < 3.0);
  }
}

TEST_CASE("seeded_permutation is a deterministic permutation") {
  auto a = seeded_permutation(50, 9);
  auto b = seeded_permutation(50, 9);
  auto c = seeded_permutation(50, 10);
  CHECK(a == b);
  CHECK(a != c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> want(50);
  std::iota(want.begin(), want.end(), std::size_t{0});
  CHECK(sorted == want);
  CHECK(seeded_permutation(0, 1).empty());
}
