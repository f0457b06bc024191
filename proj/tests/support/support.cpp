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

#include "support.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "vqs/dataset.hpp"
#include "vqs/features.hpp"
#include "vqs/json_io.hpp"
#include "vqs/text.hpp"

namespace vqs::test {

TempDir::TempDir() {
  static Rng rng(std::random_device{}());
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("vqs-test-" + std::to_string(uniform_index(rng, 1ull << 40)));
    if (std::filesystem::create_directory(path_)) return;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

BinaryMask random_mask(Rng& rng, int height, int width, double density) {
  BinaryMask m(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) m.set(r, c, uniform_real(rng, 0.0, 1.0) < density);
  }
  return m;
}

BinaryMask random_mask(Rng& rng, int max_side, double density) {
  const int h = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_side)));
  const int w = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_side)));
  return random_mask(rng, h, w, density);
}

namespace {

constexpr std::array<const char*, 4> kClasses = {"dog", "cat", "car", "person"};
constexpr std::array<const char*, 4> kPlaces = {"topleft", "topright", "bottomleft",
                                                "bottomright"};

std::vector<std::string> toy_candidates() {
  std::vector<std::string> c = {"topleft", "topright", "bottomleft", "bottomright",
                                "yes",     "no",       "red",        "blue",
                                "green",   "one",      "two",        "three",
                                "kitchen", "street",   "table",      "tree",
                                "sky",     "grass"};
  return c;
}

}  // namespace

void write_toy_corpus(const std::string& dir, std::uint64_t seed, int n_images) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng(seed);
  const int half = kToySide / kToyGrid;

  std::vector<ImageMeta> images;
  std::vector<SegmentRecord> segments;
  std::vector<VqsRecord> records;
  FeatureStore image_features(16), region_features(4), segment_features(4),
      proposal_features(5);
  Json proposals = Json::array();
  Id next_segment = 1;
  Id next_proposal = 100000;
  Id next_question = 1;

  for (int i = 0; i < n_images; ++i) {
    const Id image_id = i + 1;
    images.push_back({image_id, "toy_" + std::to_string(image_id) + ".png", kToySide, kToySide});
    // class_at[cell] for the quadrants in row-major order.
    const auto class_at = seeded_permutation(kClasses.size(), seed * 1000 + image_id);
    Vec layout(16, 0.0);
    std::array<Id, 4> segment_of_class{};
    for (std::size_t cell = 0; cell < 4; ++cell) {
      const int row = static_cast<int>(cell) / kToyGrid;
      const int col = static_cast<int>(cell) % kToyGrid;
      const int x0 = col * half + 1, y0 = row * half + 1;
      const int x1 = x0 + half - 2, y1 = y0 + half - 2;
      Polygon poly{{{double(x0), double(y0)}, {double(x1), double(y0)},
                    {double(x1), double(y1)}, {double(x0), double(y1)}}};
      const std::size_t k = class_at[cell];
      const Id sid = next_segment++;
      segment_of_class[k] = sid;
      segments.push_back({sid, image_id, poly, kClasses[k], static_cast<int>(cell)});
      Vec onehot(4, 0.0);
      onehot[k] = 1.0;
      region_features.add(region_key(image_id, cell), std::span<const double>(onehot));
      segment_features.add(static_cast<std::uint64_t>(sid), std::span<const double>(onehot));
      layout[cell * 4 + k] = 1.0;

      Vec pf(5, 0.0);
      pf[k] = 1.0;
      const Id pid = next_proposal++;
      Json p = segments.back();
      p["segment_id"] = pid;
      proposals.push_back(p);
      proposal_features.add(static_cast<std::uint64_t>(pid), std::span<const double>(pf));
    }
    image_features.add(static_cast<std::uint64_t>(image_id), std::span<const double>(layout));
    {
      // Whole-image distractor proposal.
      Vec pf(5, 0.0);
      pf[4] = 1.0;
      const Id pid = next_proposal++;
      Json p = segments.back();
      p["segment_id"] = pid;
      p["encoding"] = Polygon{{{0, 0}, {double(kToySide), 0},
                               {double(kToySide), double(kToySide)}, {0, double(kToySide)}}};
      proposals.push_back(p);
      proposal_features.add(static_cast<std::uint64_t>(pid), std::span<const double>(pf));
    }

    for (std::size_t k = 0; k < kClasses.size(); ++k) {
      if (uniform_real(rng, 0.0, 1.0) < 0.25) continue;
      std::size_t cell = 0;
      while (class_at[cell] != k) ++cell;
      VqsRecord r;
      r.question_id = next_question++;
      r.image_id = image_id;
      r.question = std::string("Where is the ") + kClasses[k] + "?";
      r.answer = kPlaces[cell];
      r.candidates = toy_candidates();
      r.selected_segment_ids = {segment_of_class[k]};
      r.annotator_id = "toy";
      records.push_back(std::move(r));
    }
  }
  // One flagged record, which every stage must ignore.
  VqsRecord flagged;
  flagged.question_id = next_question++;
  flagged.image_id = 1;
  flagged.question = "Is this a nice day?";
  flagged.answer = "yes";
  flagged.candidates = toy_candidates();
  flagged.flag = Flag::kAmbiguous;
  flagged.annotator_id = "toy";
  records.push_back(flagged);

  save_dataset(Dataset(images, segments, records), dir);
  save_feature_store(image_features, (fs::path(dir) / "image_features.vqsf").string());
  save_feature_store(region_features, (fs::path(dir) / "region_features.vqsf").string());
  save_feature_store(segment_features, (fs::path(dir) / "segment_features.vqsf").string());
  save_feature_store(proposal_features, (fs::path(dir) / "proposal_features.vqsf").string());
  write_json_file((fs::path(dir) / "proposals.json").string(), proposals);

  std::set<std::string> words;
  for (const auto& r : records) {
    for (auto& t : tokenize(r.question)) words.insert(t);
    for (const auto& c : *r.candidates) {
      for (auto& t : tokenize(c)) words.insert(t);
    }
  }
  std::ofstream out((fs::path(dir) / "words.txt").string());
  out << words.size() << " 8\n";
  for (const auto& w : words) {
    out << w;
    for (int d = 0; d < 8; ++d) out << ' ' << uniform_real(rng, -1.0, 1.0);
    out << '\n';
  }
}

std::vector<AggregatorExample> separable_aggregator_set(
    std::size_t questions, std::size_t proposals, std::size_t dim, std::uint64_t seed,
    ToyFeatures kind) {
  Rng rng(seed);
  const int bands = static_cast<int>(proposals);
  std::vector<AggregatorExample> out;
  for (std::size_t q = 0; q < questions; ++q) {
    AggregatorExample ex;
    ex.question_id = static_cast<Id>(q + 1);
    ex.proposals.image_id = ex.question_id;
    const auto order = seeded_permutation(proposals, rng());
    const auto codes = seeded_permutation(dim, rng());
    for (std::size_t i = 0; i < proposals; ++i) {
      const int band = static_cast<int>(order[i]);
      ex.proposals.masks.push_back(box_to_mask({0, 2 * band, 6, 2}, 2 * bands, 6));
      Vec z(dim, 0.0);
      if (kind == ToyFeatures::kOneHot) {
        z[codes.at(i)] = 1.0;
      } else {
        double n2 = 0.0;
        for (auto& x : z) {
          x = uniform_real(rng, -1.0, 1.0);
          n2 += x * x;
        }
        for (auto& x : z) x /= std::sqrt(n2);
      }
      ex.proposals.features.push_back(std::move(z));
    }
    const std::size_t answer = uniform_index(rng, proposals);
    ex.question = ex.proposals.features[answer];
    ex.ground_truth = ex.proposals.masks[answer];
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<OracleQuestion> category_oracle_set(std::size_t questions,
                                                std::size_t segments,
                                                std::size_t categories,
                                                std::uint64_t seed) {
  Rng rng(seed);
  const int w = 2 * static_cast<int>(segments);
  std::vector<OracleQuestion> out;
  for (std::size_t q = 0; q < questions; ++q) {
    OracleQuestion oq;
    oq.question_id = static_cast<Id>(q + 1);
    std::vector<std::size_t> cats(segments);
    for (auto& c : cats) c = uniform_index(rng, categories);
    const std::size_t asked = cats[uniform_index(rng, segments)];
    for (std::size_t i = 0; i < segments; ++i) {
      OracleCandidate c;
      c.segment_id = static_cast<Id>(q * 100 + i);
      c.mask = box_to_mask({2 * static_cast<int>(i), 0, 2, 4}, 4, w);
      c.features.assign(categories, 0.0);
      c.features[cats[i]] = 1.0;
      oq.candidates.push_back(std::move(c));
      oq.labels.push_back(cats[i] == asked ? 1 : 0);
    }
    oq.question.assign(categories, 0.0);
    oq.question[asked] = 1.0;
    out.push_back(std::move(oq));
  }
  return out;
}

std::vector<OracleQuestion> as_oracle_questions(std::span<const AggregatorExample> examples) {
  std::vector<OracleQuestion> out;
  for (const auto& ex : examples) {
    OracleQuestion q;
    q.question_id = ex.question_id;
    q.question = ex.question;
    for (std::size_t i = 0; i < ex.proposals.masks.size(); ++i) {
      q.candidates.push_back({static_cast<Id>(i), ex.proposals.masks[i], ex.proposals.features[i]});
      q.labels.push_back(ex.proposals.masks[i] == ex.ground_truth ? 1 : 0);
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<AggregatorExample> as_aggregator_examples(
    std::span<const OracleQuestion> questions) {
  std::vector<AggregatorExample> out;
  for (const auto& q : questions) {
    AggregatorExample ex;
    ex.question_id = q.question_id;
    ex.question = q.question;
    std::vector<BinaryMask> answer;
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
      ex.proposals.masks.push_back(q.candidates[i].mask);
      ex.proposals.features.push_back(q.candidates[i].features);
      if (q.labels[i]) answer.push_back(q.candidates[i].mask);
    }
    ex.ground_truth = mask_union(answer);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace vqs::test
