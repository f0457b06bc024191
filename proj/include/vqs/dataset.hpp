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

// The segmentation-QA link data model: images, instance segments, and one
// record per annotated question, plus validation, cleanup filters,
// ground-truth masks, question types, statistics and image-level splits.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "vqs/mask.hpp"

namespace vqs {

using Id = std::int64_t;

inline constexpr std::size_t kNumCandidates = 18;

// none: the selection answers the question; full_image: the black button;
// ambiguous: the gray button.
enum class Flag { kNone, kFullImage, kAmbiguous };

std::string_view flag_name(Flag flag);
std::optional<Flag> parse_flag(std::string_view name);

struct ImageMeta {
  Id image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

using SegmentEncoding = std::variant<RleMask, Polygon>;

struct SegmentRecord {
  Id segment_id = 0;
  Id image_id = 0;
  SegmentEncoding encoding;
  std::string category;
  int display_color = 0;
};

BinaryMask decode_segment(const SegmentRecord& segment, int height, int width);

struct Question {
  Id question_id = 0;
  Id image_id = 0;
  std::string question;
  std::string answer;
  std::optional<std::vector<std::string>> candidates;
};

struct Link {
  Id question_id = 0;
  std::vector<Id> selected_segment_ids;
  std::vector<Box> boxes;
  Flag flag = Flag::kNone;
  std::string annotator_id;
};

struct VqsRecord {
  Id question_id = 0;
  Id image_id = 0;
  std::string question;
  std::string answer;
  std::optional<std::vector<std::string>> candidates;
  std::vector<Id> selected_segment_ids;
  std::vector<Box> boxes;
  Flag flag = Flag::kNone;
  std::string annotator_id;
};

VqsRecord join(const Question& question, const Link& link);
Link link_of(const VqsRecord& record);

// Immutable after construction. Lookups return the first entry with a given
// id; duplicates are reported by validate().
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<ImageMeta> images, std::vector<SegmentRecord> segments,
          std::vector<VqsRecord> records,
          std::vector<Question> unlinked_questions = {},
          std::vector<Link> orphan_links = {});

  const std::vector<ImageMeta>& images() const { return images_; }
  const std::vector<SegmentRecord>& segments() const { return segments_; }
  const std::vector<VqsRecord>& records() const { return records_; }
  // Questions with no entry in links.json.
  const std::vector<Question>& unlinked_questions() const { return unlinked_; }
  // Links whose question_id matches no question.
  const std::vector<Link>& orphan_links() const { return orphans_; }

  const ImageMeta* find_image(Id image_id) const;
  const SegmentRecord* find_segment(Id segment_id) const;
  const VqsRecord* find_record(Id question_id) const;
  // Segments of an image in file order.
  std::vector<const SegmentRecord*> segments_of(Id image_id) const;
  std::size_t segment_count(Id image_id) const;

 private:
  std::vector<ImageMeta> images_;
  std::vector<SegmentRecord> segments_;
  std::vector<VqsRecord> records_;
  std::vector<Question> unlinked_;
  std::vector<Link> orphans_;
  std::unordered_map<Id, std::size_t> image_index_;
  std::unordered_map<Id, std::size_t> segment_index_;
  std::unordered_map<Id, std::size_t> record_index_;
  std::unordered_map<Id, std::vector<std::size_t>> segments_by_image_;
};

// Reads images.json, segments.json, questions.json and links.json from a
// directory. Throws kParseError (with line and column) or kIo.
Dataset load_dataset(const std::string& dir);
// Writes the four files; creates the directory if needed.
void save_dataset(const Dataset& dataset, const std::string& dir);

struct Violation {
  std::string kind;  // "image", "segment", "question" or "link"
  Id id = 0;
  std::string rule;
  std::string detail;
};

std::vector<Violation> validate(const Dataset& dataset);

// The checks validate applies to one record's image, selection and boxes.
std::vector<Violation> validate_selection(const VqsRecord& record, const Dataset& dataset);

Dataset filter_min_segments(const Dataset& dataset, std::size_t k = 3);
Dataset drop_flagged(const Dataset& dataset);

// Union of the selected segments and the drawn boxes. Throws kFlaggedRecord
// for flagged records.
BinaryMask ground_truth_mask(const VqsRecord& record, const Dataset& dataset);

enum class QuestionType {
  kDoesDo,
  kHowMany,
  kIsAre,
  kWhatColor,
  kWhatIs,
  kWhatOther,
  kWhere,
  kWhich,
  kWho,
  kWhy,
  kOthers,
};

// Report order.
inline constexpr std::array<QuestionType, 11> kAllQuestionTypes = {
    QuestionType::kDoesDo,    QuestionType::kHowMany, QuestionType::kIsAre,
    QuestionType::kWhatColor, QuestionType::kWhatIs,  QuestionType::kWhatOther,
    QuestionType::kWhere,     QuestionType::kWhich,   QuestionType::kWho,
    QuestionType::kWhy,       QuestionType::kOthers};

std::string_view question_type_name(QuestionType type);
QuestionType classify_question(std::string_view question);

enum class CountCheck { kOk, kMismatch, kNotApplicable };

std::string_view count_check_name(CountCheck check);
// How-many questions only: the number of selected segments plus boxes must
// equal the numeric answer, except that a single box alone is accepted for
// answers above three.
CountCheck check_count_answer(const VqsRecord& record);

struct TypeStats {
  std::size_t count = 0;
  double mean_selected = 0.0;
  double mean_candidates = 0.0;
};

struct DatasetStats {
  std::size_t n_images = 0;  // distinct images with at least one record
  std::size_t n_questions = 0;
  std::size_t n_segments_selected = 0;
  std::size_t n_boxes = 0;
  double mean_selected = 0.0;
  double mean_candidates = 0.0;
  double mean_boxes = 0.0;
  // Keyed by selected segments plus boxes per question.
  std::map<std::size_t, std::size_t> per_count_histogram;
  std::map<QuestionType, TypeStats> per_type;
};

DatasetStats compute_stats(const Dataset& dataset);

struct Split {
  std::vector<Id> train_image_ids;
  std::vector<Id> val_image_ids;
  std::vector<Id> test_image_ids;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// Seeded sampling over the images that carry at least one record. Throws
// kSizesExceedDataset when the requested sizes do not fit.
Split make_split(const Dataset& dataset, SplitSizes sizes, std::uint64_t seed);

// Checks explicit id lists (e.g. the published ones): pairwise disjoint and
// every id present in the dataset. Returns them unchanged.
Split split_from_lists(const Dataset& dataset, Split lists);

struct SplitSummary {
  SplitSizes images;
  SplitSizes questions;
};

SplitSummary summarize_split(const Dataset& dataset, const Split& split);

enum class SplitPart { kTrain, kVal, kTest };
std::vector<const VqsRecord*> records_in(const Dataset& dataset,
                                         const Split& split, SplitPart part);

}  // namespace vqs
