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

// Text featurization (word-vector averages, bag of words, attribute
// vocabularies) and the VQSF binary store for precomputed feature vectors.
//
// VQSF layout, little-endian:
//   "VQSF" | u32 version (1) | u64 count | u32 dim | count x u64 ids |
//   count x dim x binary32, row-major.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace vqs {

using Vec = std::vector<double>;

class WordVectorTable {
 public:
  explicit WordVectorTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  // Throws kDimensionMismatch on a wrong-length vector.
  void add(std::string word, Vec vector);
  const Vec* find(const std::string& word) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, Vec> entries_;
};

// One entry per line: the word, then dim space-separated reals. A leading
// "count dim" header line (word2vec text format) is skipped.
WordVectorTable load_word_vectors(const std::string& path);

// Average of in-vocabulary token vectors, l2-normalized. Text with no known
// token maps to the zero vector.
Vec embed_text(std::string_view text, const WordVectorTable& table);

class Vocab {
 public:
  Vocab() = default;
  // Throws kInvalidArgument on a repeated word.
  explicit Vocab(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> index_of(const std::string& word) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::size_t kBowVocabSize = 1000;
inline constexpr std::size_t kAttributeVocabSize = 256;

// The k most frequent tokens outside `stopwords`, ties broken
// lexicographically. Returns fewer than k words when the texts hold fewer.
Vocab build_frequency_vocab(std::span<const std::string> texts,
                            const std::unordered_set<std::string>& stopwords,
                            std::size_t k);

// Same ranking, but throws kCorpusTooSmall when fewer than `c` distinct
// non-stopwords exist.
Vocab build_attribute_vocab(std::span<const std::string> captions,
                            const std::unordered_set<std::string>& stopwords,
                            std::size_t c = kAttributeVocabSize);

// Token counts over the vocabulary, l2-normalized; zero when no token hits.
Vec bow_features(std::string_view text, const Vocab& vocab);

class FeatureStore {
 public:
  explicit FeatureStore(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::uint64_t>& ids() const { return ids_; }

  // Throws kDuplicateId or kDimensionMismatch.
  void add(std::uint64_t id, std::span<const float> row);
  void add(std::uint64_t id, std::span<const double> row);
  bool contains(std::uint64_t id) const { return index_.count(id) != 0; }
  // Throws kMissingFeatures for an unknown id.
  std::span<const float> row(std::uint64_t id) const;
  Vec row_vec(std::uint64_t id) const;

 private:
  std::uint32_t dim_;
  std::vector<std::uint64_t> ids_;
  std::vector<float> data_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

// Throws kIo, kBadMagic, kUnsupportedVersion, kTruncatedFile or
// kDuplicateId.
FeatureStore load_feature_store(const std::string& path);
void save_feature_store(const FeatureStore& store, const std::string& path);

// Region features are stored one row per (image, grid cell).
inline std::uint64_t region_key(std::int64_t image_id, std::size_t cell) {
  return (static_cast<std::uint64_t>(image_id) << 16) | cell;
}

struct VqaInputDims {
  std::size_t image = 0;
  std::size_t question = 0;
  std::size_t answer = 0;
  std::size_t attention = 0;  // 0 disables the attention block

  std::size_t total() const { return image + question + answer + attention; }
};

// image | question | answer | attention, in that order.
Vec assemble_vqa_input(std::span<const double> image,
                       std::span<const double> question,
                       std::span<const double> answer,
                       std::optional<std::span<const double>> attention,
                       const VqaInputDims& dims);

}  // namespace vqs
