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

#include "vqs/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "vqs/error.hpp"
#include "vqs/text.hpp"

namespace vqs {

namespace detail {

std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<char>& bytes) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace detail

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

void l2_normalize(Vec& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

}  // namespace

void WordVectorTable::add(std::string word, Vec vector) {
  if (vector.size() != dim_) {
    fail(ErrorCode::kDimensionMismatch,
         "vector for '" + word + "' has " + std::to_string(vector.size()) +
             " values, table dim is " + std::to_string(dim_));
  }
  entries_.insert_or_assign(std::move(word), std::move(vector));
}

const Vec* WordVectorTable::find(const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

WordVectorTable load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::optional<WordVectorTable> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    Vec values;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        fail(ErrorCode::kParseError, path + ":" + std::to_string(line_no) +
                                         ": bad number '" + token + "'");
      }
    }
    if (line_no == 1 && values.size() == 1 &&
        word.find_first_not_of("0123456789") == std::string::npos) {
      continue;  // "count dim" header
    }
    if (!table) table.emplace(values.size());
    if (values.size() != table->dim()) {
      fail(ErrorCode::kParseError,
           path + ":" + std::to_string(line_no) + ": expected " +
               std::to_string(table->dim()) + " values, got " +
               std::to_string(values.size()));
    }
    table->add(to_lower(word), std::move(values));
  }
  return table ? std::move(*table) : WordVectorTable(0);
}

Vec embed_text(std::string_view text, const WordVectorTable& table) {
  Vec sum(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& token : tokenize(text)) {
    if (const Vec* v = table.find(token)) {
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
      ++hits;
    }
  }
  if (hits == 0) return sum;
  for (double& x : sum) x /= static_cast<double>(hits);
  l2_normalize(sum);
  return sum;
}

Vocab::Vocab(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      fail(ErrorCode::kInvalidArgument, "repeated vocabulary word '" + words_[i] + "'");
    }
  }
}

std::optional<std::size_t> Vocab::index_of(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> rank_tokens(
    std::span<const std::string> texts,
    const std::unordered_set<std::string>& stopwords) {
  std::map<std::string, std::size_t> freq;
  for (const auto& text : texts) {
    for (auto& token : tokenize(text)) {
      if (!stopwords.count(token)) ++freq[std::move(token)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  // std::map order is lexicographic, so a stable sort on count keeps ties in
  // lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [word, n] : ranked) words.push_back(std::move(word));
  return words;
}

}  // namespace

Vocab build_frequency_vocab(std::span<const std::string> texts,
                            const std::unordered_set<std::string>& stopwords,
                            std::size_t k) {
  auto words = rank_tokens(texts, stopwords);
  if (words.size() > k) words.resize(k);
  return Vocab(std::move(words));
}

Vocab build_attribute_vocab(std::span<const std::string> captions,
                            const std::unordered_set<std::string>& stopwords,
                            std::size_t c) {
  auto words = rank_tokens(captions, stopwords);
  if (words.size() < c) {
    fail(ErrorCode::kCorpusTooSmall,
         "corpus has " + std::to_string(words.size()) +
             " distinct non-stopwords, need " + std::to_string(c));
  }
  words.resize(c);
  return Vocab(std::move(words));
}

Vec bow_features(std::string_view text, const Vocab& vocab) {
  Vec counts(vocab.size(), 0.0);
  for (const auto& token : tokenize(text)) {
    if (auto i = vocab.index_of(token)) counts[*i] += 1.0;
  }
  l2_normalize(counts);
  return counts;
}

void FeatureStore::add(std::uint64_t id, std::span<const float> row) {
  if (row.size() != dim_) {
    fail(ErrorCode::kDimensionMismatch,
         "row " + std::to_string(id) + " has " + std::to_string(row.size()) +
             " values, store dim is " + std::to_string(dim_));
  }
  if (!index_.emplace(id, ids_.size()).second) {
    fail(ErrorCode::kDuplicateId, "feature id " + std::to_string(id) + " repeated");
  }
  ids_.push_back(id);
  data_.insert(data_.end(), row.begin(), row.end());
}

void FeatureStore::add(std::uint64_t id, std::span<const double> row) {
  std::vector<float> narrowed(row.begin(), row.end());
  add(id, std::span<const float>(narrowed));
}

std::span<const float> FeatureStore::row(std::uint64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    fail(ErrorCode::kMissingFeatures, "no feature row for id " + std::to_string(id));
  }
  return {data_.data() + it->second * dim_, dim_};
}

Vec FeatureStore::row_vec(std::uint64_t id) const {
  const auto r = row(id);
  return Vec(r.begin(), r.end());
}

FeatureStore load_feature_store(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader in(bytes, path);
  char magic[4] = {};
  if (bytes.size() < 4) {
    fail(ErrorCode::kBadMagic, path + ": too short for a VQSF header");
  }
  in.get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, path + ": not a VQSF file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         path + ": VQSF version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint32_t>();
  // Reject impossible sizes before allocating.
  const std::uint64_t need_ids = count * 8;
  if (count > in.remaining() / 8 ||
      (count > 0 && dim > (in.remaining() - need_ids) / 4 / count)) {
    fail(ErrorCode::kTruncatedFile,
         path + ": header promises " + std::to_string(count) + " rows of dim " +
             std::to_string(dim) + " but only " +
             std::to_string(in.remaining()) + " bytes follow");
  }
  std::vector<std::uint64_t> ids(count);
  for (auto& id : ids) id = in.get<std::uint64_t>();
  FeatureStore store(dim);
  std::vector<float> row(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& v : row) v = in.get<float>();
    store.add(ids[i], std::span<const float>(row));
  }
  return store;
}

void save_feature_store(const FeatureStore& store, const std::string& path) {
  detail::ByteWriter out;
  out.put_bytes(kMagic, 4);
  out.put<std::uint32_t>(kVersion);
  out.put<std::uint64_t>(store.size());
  out.put<std::uint32_t>(store.dim());
  for (auto id : store.ids()) out.put<std::uint64_t>(id);
  for (auto id : store.ids()) {
    for (float v : store.row(id)) out.put<float>(v);
  }
  detail::write_file_bytes(path, out.buffer());
}

Vec assemble_vqa_input(std::span<const double> image,
                       std::span<const double> question,
                       std::span<const double> answer,
                       std::optional<std::span<const double>> attention,
                       const VqaInputDims& dims) {
  auto check = [](const char* part, std::size_t got, std::size_t want) {
    if (got != want) {
      fail(ErrorCode::kDimensionMismatch,
           std::string(part) + " block has " + std::to_string(got) +
               " values, configured " + std::to_string(want));
    }
  };
  check("image", image.size(), dims.image);
  check("question", question.size(), dims.question);
  check("answer", answer.size(), dims.answer);
  check("attention", attention ? attention->size() : 0, dims.attention);
  Vec out;
  out.reserve(dims.total());
  out.insert(out.end(), image.begin(), image.end());
  out.insert(out.end(), question.begin(), question.end());
  out.insert(out.end(), answer.begin(), answer.end());
  if (attention) out.insert(out.end(), attention->begin(), attention->end());
  return out;
}

}  // namespace vqs
