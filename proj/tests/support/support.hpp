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

// Helpers shared by the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vqs/mask.hpp"
#include "vqs/qfss.hpp"
#include "vqs/random.hpp"

namespace vqs::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Mask of random size in [1, max_side]^2 with pixels set at the given rate.
BinaryMask random_mask(Rng& rng, int max_side, double density);
BinaryMask random_mask(Rng& rng, int height, int width, double density);

// Side of the toy corpus images and of its grid of quadrants.
inline constexpr int kToySide = 24;
inline constexpr int kToyGrid = 2;

// Writes a small, fully consistent corpus to dir:
//   images.json segments.json questions.json links.json
//   words.txt             word vectors for every question and answer word
//   image_features.vqsf   per image, one-hot class at each quadrant
//   region_features.vqsf  per (image, quadrant), one-hot class
//   segment_features.vqsf per segment, one-hot class
//   proposals.json + proposal_features.vqsf: the segments plus a whole-image
//   distractor per image
// Every image has one object per quadrant; "where is the <class>?" selects
// that object and is answered by the quadrant name.
void write_toy_corpus(const std::string& dir, std::uint64_t seed, int n_images = 12);

enum class ToyFeatures { kRandomUnit, kOneHot };

// Disjoint row-band proposals; the answer is one proposal whose feature
// equals the question vector. Features are random unit vectors of `dim`, or
// distinct basis vectors (needs dim >= proposals).
std::vector<AggregatorExample> separable_aggregator_set(
    std::size_t questions, std::size_t proposals, std::size_t dim, std::uint64_t seed,
    ToyFeatures kind = ToyFeatures::kRandomUnit);

// Proposals become oracle candidates, labelled by equality with the answer.
std::vector<OracleQuestion> as_oracle_questions(std::span<const AggregatorExample> examples);

// Segments carry a one-hot category over `categories`; the question names a
// category and the answer is the union of every segment of that category.
std::vector<OracleQuestion> category_oracle_set(std::size_t questions,
                                                std::size_t segments,
                                                std::size_t categories,
                                                std::uint64_t seed);

// Same questions as aggregator examples (features and masks shared).
std::vector<AggregatorExample> as_aggregator_examples(
    std::span<const OracleQuestion> questions);

}  // namespace vqs::test
