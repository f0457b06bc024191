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

#include "vqs/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <iterator>
#include <set>
#include <unordered_set>

#include "vqs/error.hpp"
#include "vqs/json_io.hpp"
#include "vqs/random.hpp"
#include "vqs/text.hpp"

namespace vqs {

std::string_view flag_name(Flag flag) {
  switch (flag) {
    case Flag::kNone: return "none";
    case Flag::kFullImage: return "full_image";
    case Flag::kAmbiguous: return "ambiguous";
  }
  return "none";
}

std::optional<Flag> parse_flag(std::string_view name) {
  if (name == "none") return Flag::kNone;
  if (name == "full_image") return Flag::kFullImage;
  if (name == "ambiguous") return Flag::kAmbiguous;
  return std::nullopt;
}

BinaryMask decode_segment(const SegmentRecord& segment, int height, int width) {
  if (const auto* rle = std::get_if<RleMask>(&segment.encoding)) {
    if (rle->height != height || rle->width != width) {
      fail(ErrorCode::kDimensionMismatch,
           "segment " + std::to_string(segment.segment_id) + " is " +
               std::to_string(rle->height) + "x" + std::to_string(rle->width) +
               ", image is " + std::to_string(height) + "x" +
               std::to_string(width));
    }
    return rle_decode(*rle);
  }
  return rasterize_polygon(std::get<Polygon>(segment.encoding), height, width);
}

VqsRecord join(const Question& question, const Link& link) {
  return VqsRecord{question.question_id, question.image_id,
                   question.question,    question.answer,
                   question.candidates,  link.selected_segment_ids,
                   link.boxes,           link.flag,
                   link.annotator_id};
}

Link link_of(const VqsRecord& record) {
  return Link{record.question_id, record.selected_segment_ids, record.boxes,
              record.flag, record.annotator_id};
}

Dataset::Dataset(std::vector<ImageMeta> images,
                 std::vector<SegmentRecord> segments,
                 std::vector<VqsRecord> records,
                 std::vector<Question> unlinked_questions,
                 std::vector<Link> orphan_links)
    : images_(std::move(images)),
      segments_(std::move(segments)),
      records_(std::move(records)),
      unlinked_(std::move(unlinked_questions)),
      orphans_(std::move(orphan_links)) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    image_index_.try_emplace(images_[i].image_id, i);
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segment_index_.try_emplace(segments_[i].segment_id, i).second) {
      segments_by_image_[segments_[i].image_id].push_back(i);
    }
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    record_index_.try_emplace(records_[i].question_id, i);
  }
}

const ImageMeta* Dataset::find_image(Id image_id) const {
  auto it = image_index_.find(image_id);
  return it == image_index_.end() ? nullptr : &images_[it->second];
}

const SegmentRecord* Dataset::find_segment(Id segment_id) const {
  auto it = segment_index_.find(segment_id);
  return it == segment_index_.end() ? nullptr : &segments_[it->second];
}

const VqsRecord* Dataset::find_record(Id question_id) const {
  auto it = record_index_.find(question_id);
  return it == record_index_.end() ? nullptr : &records_[it->second];
}

std::vector<const SegmentRecord*> Dataset::segments_of(Id image_id) const {
  std::vector<const SegmentRecord*> out;
  auto it = segments_by_image_.find(image_id);
  if (it == segments_by_image_.end()) return out;
  for (std::size_t i : it->second) out.push_back(&segments_[i]);
  return out;
}

std::size_t Dataset::segment_count(Id image_id) const {
  auto it = segments_by_image_.find(image_id);
  return it == segments_by_image_.end() ? 0 : it->second.size();
}

namespace {

template <typename T>
std::vector<T> read_records(const std::string& path) {
  const Json doc = read_json_file(path);
  if (!doc.is_array()) {
    fail(ErrorCode::kParseError, path + ":1:1: expected a JSON array");
  }
  std::vector<T> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(doc[i].get<T>());
    } catch (const Json::exception& e) {
      fail(ErrorCode::kParseError,
           path + ": entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
Json to_array(const std::vector<T>& items) {
  Json out = Json::array();
  for (const auto& item : items) out.push_back(item);
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  auto images = read_records<ImageMeta>((root / "images.json").string());
  auto segments = read_records<SegmentRecord>((root / "segments.json").string());
  auto questions = read_records<Question>((root / "questions.json").string());
  std::vector<Link> links;
  if (fs::exists(root / "links.json")) {
    links = read_records<Link>((root / "links.json").string());
  }

  std::unordered_map<Id, std::vector<const Link*>> links_by_question;
  for (const auto& link : links) {
    links_by_question[link.question_id].push_back(&link);
  }
  std::unordered_set<Id> question_ids;
  std::vector<VqsRecord> records;
  std::vector<Question> unlinked;
  for (const auto& q : questions) {
    question_ids.insert(q.question_id);
    auto it = links_by_question.find(q.question_id);
    if (it == links_by_question.end()) {
      unlinked.push_back(q);
      continue;
    }
    // Repeated links become repeated records; validate() reports them.
    for (const Link* link : it->second) records.push_back(join(q, *link));
  }
  std::vector<Link> orphans;
  for (const auto& link : links) {
    if (!question_ids.count(link.question_id)) orphans.push_back(link);
  }
  return Dataset(std::move(images), std::move(segments), std::move(records),
                 std::move(unlinked), std::move(orphans));
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  Json questions = Json::array();
  Json links = Json::array();
  for (const auto& r : dataset.records()) {
    questions.push_back(Question{r.question_id, r.image_id, r.question,
                                 r.answer, r.candidates});
    links.push_back(link_of(r));
  }
  for (const auto& q : dataset.unlinked_questions()) questions.push_back(q);
  for (const auto& l : dataset.orphan_links()) links.push_back(l);
  write_json_file((root / "images.json").string(), to_array(dataset.images()));
  write_json_file((root / "segments.json").string(),
                  to_array(dataset.segments()));
  write_json_file((root / "questions.json").string(), questions);
  write_json_file((root / "links.json").string(), links);
}

std::vector<Violation> validate_selection(const VqsRecord& r, const Dataset& dataset) {
  std::vector<Violation> out;
  auto report = [&](std::string kind, Id id, std::string rule,
                    std::string detail) {
    out.push_back({std::move(kind), id, std::move(rule), std::move(detail)});
  };
  const Id qid = r.question_id;
    const ImageMeta* image = dataset.find_image(r.image_id);
    if (!image) {
      report("question", qid, "question_missing_image",
             "image " + std::to_string(r.image_id));
    }
    if (r.flag == Flag::kNone && r.selected_segment_ids.empty() &&
        r.boxes.empty()) {
      report("question", qid, "empty_selection",
             "flag none requires a segment or a box");
    }
    for (Id sid : r.selected_segment_ids) {
      const SegmentRecord* segment = dataset.find_segment(sid);
      if (!segment) {
        report("question", qid, "unknown_segment",
               "segment " + std::to_string(sid));
      } else if (segment->image_id != r.image_id) {
        report("question", qid, "segment_image_mismatch",
               "segment " + std::to_string(sid) + " belongs to image " +
                   std::to_string(segment->image_id));
      }
    }
    for (const Box& box : r.boxes) {
      if (box.w < 1 || box.h < 1) {
        report("question", qid, "invalid_box", "non-positive extent");
      } else if (image && (box.x >= image->width || box.y >= image->height ||
                           box.x + box.w <= 0 || box.y + box.h <= 0)) {
        report("question", qid, "box_outside_image", "");
      }
    }
  std::unordered_set<Id> picked;
  for (Id sid : r.selected_segment_ids) {
    if (!picked.insert(sid).second) {
      report("question", qid, "repeated_segment", "segment " + std::to_string(sid));
    }
  }
  return out;
}

std::vector<Violation> validate(const Dataset& dataset) {
  std::vector<Violation> out;
  auto report = [&](std::string kind, Id id, std::string rule,
                    std::string detail) {
    out.push_back({std::move(kind), id, std::move(rule), std::move(detail)});
  };

  std::unordered_set<Id> seen;
  for (const auto& image : dataset.images()) {
    if (!seen.insert(image.image_id).second) {
      report("image", image.image_id, "duplicate_image_id", "");
    }
    if (image.width < 1 || image.height < 1) {
      report("image", image.image_id, "invalid_image_size",
             std::to_string(image.width) + "x" + std::to_string(image.height));
    }
  }

  seen.clear();
  for (const auto& segment : dataset.segments()) {
    if (!seen.insert(segment.segment_id).second) {
      report("segment", segment.segment_id, "duplicate_segment_id", "");
    }
    const ImageMeta* image = dataset.find_image(segment.image_id);
    if (!image) {
      report("segment", segment.segment_id, "segment_missing_image",
             "image " + std::to_string(segment.image_id));
      continue;
    }
    if (image->width < 1 || image->height < 1) continue;
    try {
      decode_segment(segment, image->height, image->width);
    } catch (const Error& e) {
      const char* rule = "segment_decode_failed";
      switch (e.code()) {
        case ErrorCode::kDimensionMismatch: rule = "segment_size_mismatch"; break;
        case ErrorCode::kCountMismatch: rule = "rle_count_mismatch"; break;
        case ErrorCode::kDegeneratePolygon: rule = "degenerate_polygon"; break;
        default: break;
      }
      report("segment", segment.segment_id, rule, e.what());
    }
  }

  for (const auto& q : dataset.unlinked_questions()) {
    report("question", q.question_id, "unlinked_question",
           "no entry in links.json");
  }
  for (const auto& l : dataset.orphan_links()) {
    report("link", l.question_id, "link_unknown_question", "");
  }

  seen.clear();
  for (const auto& r : dataset.records()) {
    const Id qid = r.question_id;
    if (!seen.insert(qid).second) {
      report("question", qid, "duplicate_link",
             "question linked more than once");
      continue;
    }
    auto selection = validate_selection(r, dataset);
    std::move(selection.begin(), selection.end(), std::back_inserter(out));
    if (r.candidates) {
      if (r.candidates->size() != kNumCandidates) {
        report("question", qid, "candidate_count",
               std::to_string(r.candidates->size()) + " candidates");
      }
      if (std::find(r.candidates->begin(), r.candidates->end(), r.answer) ==
          r.candidates->end()) {
        report("question", qid, "answer_not_in_candidates", r.answer);
      }
    }
  }
  return out;
}

Dataset filter_min_segments(const Dataset& dataset, std::size_t k) {
  std::vector<ImageMeta> images;
  std::unordered_set<Id> kept;
  for (const auto& image : dataset.images()) {
    if (dataset.segment_count(image.image_id) >= k) {
      images.push_back(image);
      kept.insert(image.image_id);
    }
  }
  std::vector<SegmentRecord> segments;
  for (const auto& s : dataset.segments()) {
    if (kept.count(s.image_id)) segments.push_back(s);
  }
  std::vector<VqsRecord> records;
  for (const auto& r : dataset.records()) {
    if (kept.count(r.image_id)) records.push_back(r);
  }
  std::vector<Question> unlinked;
  for (const auto& q : dataset.unlinked_questions()) {
    if (kept.count(q.image_id)) unlinked.push_back(q);
  }
  return Dataset(std::move(images), std::move(segments), std::move(records),
                 std::move(unlinked), dataset.orphan_links());
}

Dataset drop_flagged(const Dataset& dataset) {
  std::vector<VqsRecord> records;
  for (const auto& r : dataset.records()) {
    if (r.flag == Flag::kNone) records.push_back(r);
  }
  return Dataset(dataset.images(), dataset.segments(), std::move(records),
                 dataset.unlinked_questions(), dataset.orphan_links());
}

BinaryMask ground_truth_mask(const VqsRecord& record, const Dataset& dataset) {
  if (record.flag != Flag::kNone) {
    fail(ErrorCode::kFlaggedRecord,
         "question " + std::to_string(record.question_id) + " is flagged " +
             std::string(flag_name(record.flag)));
  }
  const ImageMeta* image = dataset.find_image(record.image_id);
  if (!image) {
    fail(ErrorCode::kNotFound,
         "image " + std::to_string(record.image_id) + " not in dataset");
  }
  std::vector<BinaryMask> parts{BinaryMask(image->height, image->width)};
  for (Id sid : record.selected_segment_ids) {
    const SegmentRecord* segment = dataset.find_segment(sid);
    if (!segment) {
      fail(ErrorCode::kNotFound, "segment " + std::to_string(sid) + " not in dataset");
    }
    parts.push_back(decode_segment(*segment, image->height, image->width));
  }
  for (const Box& box : record.boxes) {
    parts.push_back(box_to_mask(box, image->height, image->width));
  }
  return mask_union(parts);
}

std::string_view question_type_name(QuestionType type) {
  switch (type) {
    case QuestionType::kDoesDo: return "does/do";
    case QuestionType::kHowMany: return "how many";
    case QuestionType::kIsAre: return "is/are";
    case QuestionType::kWhatColor: return "what color";
    case QuestionType::kWhatIs: return "what is";
    case QuestionType::kWhatOther: return "what (other)";
    case QuestionType::kWhere: return "where";
    case QuestionType::kWhich: return "which";
    case QuestionType::kWho: return "who";
    case QuestionType::kWhy: return "why";
    case QuestionType::kOthers: return "others";
  }
  return "others";
}

QuestionType classify_question(std::string_view question) {
  const auto tokens = tokenize(question);
  if (tokens.empty()) return QuestionType::kOthers;
  const std::string& first = tokens[0];
  const std::string second = tokens.size() > 1 ? tokens[1] : std::string();
  if (first == "how" && second == "many") return QuestionType::kHowMany;
  if (first == "what") {
    if (second == "color") return QuestionType::kWhatColor;
    if (second == "is") return QuestionType::kWhatIs;
    return QuestionType::kWhatOther;
  }
  if (first == "is" || first == "are") return QuestionType::kIsAre;
  if (first == "does" || first == "do") return QuestionType::kDoesDo;
  if (first == "where") return QuestionType::kWhere;
  if (first == "which") return QuestionType::kWhich;
  if (first == "who") return QuestionType::kWho;
  if (first == "why") return QuestionType::kWhy;
  return QuestionType::kOthers;
}

std::string_view count_check_name(CountCheck check) {
  switch (check) {
    case CountCheck::kOk: return "ok";
    case CountCheck::kMismatch: return "mismatch";
    case CountCheck::kNotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

CountCheck check_count_answer(const VqsRecord& record) {
  if (record.flag != Flag::kNone) return CountCheck::kNotApplicable;
  if (classify_question(record.question) != QuestionType::kHowMany) {
    return CountCheck::kNotApplicable;
  }
  const auto n = parse_count(record.answer);
  if (!n) return CountCheck::kNotApplicable;
  const std::size_t given =
      record.selected_segment_ids.size() + record.boxes.size();
  if (given == static_cast<std::size_t>(*n)) return CountCheck::kOk;
  if (*n > 3 && record.boxes.size() == 1 &&
      record.selected_segment_ids.empty()) {
    return CountCheck::kOk;
  }
  return CountCheck::kMismatch;
}

DatasetStats compute_stats(const Dataset& dataset) {
  DatasetStats stats;
  std::unordered_set<Id> images;
  double candidates_total = 0.0;
  struct Acc {
    std::size_t n = 0;
    double selected = 0.0;
    double candidates = 0.0;
  };
  std::map<QuestionType, Acc> acc;
  for (const auto& r : dataset.records()) {
    images.insert(r.image_id);
    ++stats.n_questions;
    stats.n_segments_selected += r.selected_segment_ids.size();
    stats.n_boxes += r.boxes.size();
    const auto available = static_cast<double>(dataset.segment_count(r.image_id));
    candidates_total += available;
    ++stats.per_count_histogram[r.selected_segment_ids.size() + r.boxes.size()];
    auto& a = acc[classify_question(r.question)];
    ++a.n;
    a.selected += static_cast<double>(r.selected_segment_ids.size());
    a.candidates += available;
  }
  stats.n_images = images.size();
  if (stats.n_questions > 0) {
    const auto n = static_cast<double>(stats.n_questions);
    stats.mean_selected = static_cast<double>(stats.n_segments_selected) / n;
    stats.mean_boxes = static_cast<double>(stats.n_boxes) / n;
    stats.mean_candidates = candidates_total / n;
  }
  for (const auto& [type, a] : acc) {
    const auto n = static_cast<double>(a.n);
    stats.per_type[type] = TypeStats{a.n, a.selected / n, a.candidates / n};
  }
  return stats;
}

namespace {

std::vector<Id> annotated_images(const Dataset& dataset) {
  std::set<Id> ids;
  for (const auto& r : dataset.records()) ids.insert(r.image_id);
  return {ids.begin(), ids.end()};
}

}  // namespace

Split make_split(const Dataset& dataset, SplitSizes sizes, std::uint64_t seed) {
  const auto pool = annotated_images(dataset);
  const std::size_t wanted = sizes.train + sizes.val + sizes.test;
  if (wanted > pool.size()) {
    fail(ErrorCode::kSizesExceedDataset,
         "requested " + std::to_string(wanted) + " images, dataset has " +
             std::to_string(pool.size()));
  }
  const auto order = seeded_permutation(pool.size(), seed);
  Split split;
  std::size_t k = 0;
  auto take = [&](std::size_t n, std::vector<Id>& into) {
    for (std::size_t i = 0; i < n; ++i) into.push_back(pool[order[k++]]);
    std::sort(into.begin(), into.end());
  };
  take(sizes.train, split.train_image_ids);
  take(sizes.val, split.val_image_ids);
  take(sizes.test, split.test_image_ids);
  return split;
}

Split split_from_lists(const Dataset& dataset, Split lists) {
  std::unordered_set<Id> seen;
  for (const auto* part :
       {&lists.train_image_ids, &lists.val_image_ids, &lists.test_image_ids}) {
    for (Id id : *part) {
      if (!dataset.find_image(id)) {
        fail(ErrorCode::kNotFound,
             "split lists image " + std::to_string(id) + " not in dataset");
      }
      if (!seen.insert(id).second) {
        fail(ErrorCode::kInvalidArgument,
             "image " + std::to_string(id) + " appears in more than one split");
      }
    }
  }
  return lists;
}

SplitSummary summarize_split(const Dataset& dataset, const Split& split) {
  SplitSummary summary;
  summary.images = {split.train_image_ids.size(), split.val_image_ids.size(),
                    split.test_image_ids.size()};
  summary.questions = {records_in(dataset, split, SplitPart::kTrain).size(),
                       records_in(dataset, split, SplitPart::kVal).size(),
                       records_in(dataset, split, SplitPart::kTest).size()};
  return summary;
}

std::vector<const VqsRecord*> records_in(const Dataset& dataset,
                                         const Split& split, SplitPart part) {
  const std::vector<Id>& ids = part == SplitPart::kTrain ? split.train_image_ids
                               : part == SplitPart::kVal ? split.val_image_ids
                                                         : split.test_image_ids;
  const std::unordered_set<Id> wanted(ids.begin(), ids.end());
  std::vector<const VqsRecord*> out;
  for (const auto& r : dataset.records()) {
    if (wanted.count(r.image_id)) out.push_back(&r);
  }
  return out;
}

}  // namespace vqs
