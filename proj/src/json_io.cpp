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

#include "vqs/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vqs/error.hpp"

namespace vqs {

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::kParseError,
         origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
             ": " + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), path);
}

void write_json_file(const std::string& path, const Json& value) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << value.dump(1) << '\n';
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

void to_json(Json& j, const Box& box) {
  j = Json{{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}};
}

void from_json(const Json& j, Box& box) {
  if (j.is_array()) {
    if (j.size() != 4) {
      throw Json::other_error::create(501, "box array needs 4 entries", &j);
    }
    box = Box{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    return;
  }
  box.x = j.at("x").get<int>();
  box.y = j.at("y").get<int>();
  box.w = j.at("w").get<int>();
  box.h = j.at("h").get<int>();
}

void to_json(Json& j, const RleMask& rle) {
  j = Json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

void from_json(const Json& j, RleMask& rle) {
  const auto& size = j.at("size");
  if (!size.is_array() || size.size() != 2) {
    throw Json::other_error::create(501, "RLE size must be [height, width]", &j);
  }
  rle.height = size[0].get<int>();
  rle.width = size[1].get<int>();
  rle.counts = j.at("counts").get<std::vector<std::uint32_t>>();
}

void to_json(Json& j, const Polygon& polygon) {
  Json vertices = Json::array();
  for (const auto& p : polygon.vertices) vertices.push_back({p.x, p.y});
  j = Json{{"vertices", std::move(vertices)}};
}

void from_json(const Json& j, Polygon& polygon) {
  polygon.vertices.clear();
  for (const auto& v : j.at("vertices")) {
    polygon.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  }
}

void to_json(Json& j, const ImageMeta& image) {
  j = Json{{"image_id", image.image_id},
           {"file_name", image.file_name},
           {"width", image.width},
           {"height", image.height}};
}

void from_json(const Json& j, ImageMeta& image) {
  image.image_id = j.at("image_id").get<Id>();
  image.file_name = j.value("file_name", std::string());
  image.width = j.at("width").get<int>();
  image.height = j.at("height").get<int>();
}

void to_json(Json& j, const SegmentRecord& segment) {
  Json encoding;
  std::visit([&](const auto& e) { encoding = e; }, segment.encoding);
  j = Json{{"segment_id", segment.segment_id},
           {"image_id", segment.image_id},
           {"encoding", std::move(encoding)},
           {"category", segment.category},
           {"display_color", segment.display_color}};
}

void from_json(const Json& j, SegmentRecord& segment) {
  segment.segment_id = j.at("segment_id").get<Id>();
  segment.image_id = j.at("image_id").get<Id>();
  const auto& encoding = j.at("encoding");
  if (encoding.contains("counts")) {
    segment.encoding = encoding.get<RleMask>();
  } else {
    segment.encoding = encoding.get<Polygon>();
  }
  segment.category = j.value("category", std::string());
  segment.display_color = j.value("display_color", 0);
}

void to_json(Json& j, const Question& question) {
  j = Json{{"question_id", question.question_id},
           {"image_id", question.image_id},
           {"question", question.question},
           {"answer", question.answer}};
  if (question.candidates) j["candidates"] = *question.candidates;
}

void from_json(const Json& j, Question& question) {
  question.question_id = j.at("question_id").get<Id>();
  question.image_id = j.at("image_id").get<Id>();
  question.question = j.at("question").get<std::string>();
  question.answer = j.at("answer").get<std::string>();
  question.candidates.reset();
  if (j.contains("candidates") && !j["candidates"].is_null()) {
    question.candidates = j["candidates"].get<std::vector<std::string>>();
  }
}

void to_json(Json& j, const Link& link) {
  j = Json{{"question_id", link.question_id},
           {"selected_segment_ids", link.selected_segment_ids},
           {"boxes", link.boxes},
           {"flag", flag_name(link.flag)},
           {"annotator_id", link.annotator_id}};
}

void from_json(const Json& j, Link& link) {
  link.question_id = j.at("question_id").get<Id>();
  link.selected_segment_ids =
      j.value("selected_segment_ids", std::vector<Id>());
  link.boxes = j.value("boxes", std::vector<Box>());
  const auto flag = parse_flag(j.value("flag", std::string("none")));
  if (!flag) {
    throw Json::other_error::create(
        501, "unknown flag '" + j.value("flag", std::string()) + "'", &j);
  }
  link.flag = *flag;
  link.annotator_id = j.value("annotator_id", std::string());
}

void to_json(Json& j, const Violation& violation) {
  j = Json{{"kind", violation.kind},
           {"id", violation.id},
           {"rule", violation.rule},
           {"detail", violation.detail}};
}

void to_json(Json& j, const Split& split) {
  j = Json{{"train", split.train_image_ids},
           {"val", split.val_image_ids},
           {"test", split.test_image_ids}};
}

void from_json(const Json& j, Split& split) {
  split.train_image_ids = j.value("train", std::vector<Id>());
  split.val_image_ids = j.value("val", std::vector<Id>());
  split.test_image_ids = j.value("test", std::vector<Id>());
}

void to_json(Json& j, const DatasetStats& stats) {
  Json histogram = Json::object();
  for (const auto& [count, n] : stats.per_count_histogram) {
    histogram[std::to_string(count)] = n;
  }
  Json per_type = Json::object();
  for (const auto& [type, t] : stats.per_type) {
    per_type[std::string(question_type_name(type))] = {
        {"count", t.count},
        {"mean_selected", t.mean_selected},
        {"mean_candidates", t.mean_candidates}};
  }
  j = Json{{"n_images", stats.n_images},
           {"n_questions", stats.n_questions},
           {"n_segments_selected", stats.n_segments_selected},
           {"n_boxes", stats.n_boxes},
           {"mean_selected", stats.mean_selected},
           {"mean_candidates", stats.mean_candidates},
           {"mean_boxes", stats.mean_boxes},
           {"per_count_histogram", std::move(histogram)},
           {"per_type", std::move(per_type)}};
}

void to_json(Json& j, const SplitSummary& summary) {
  j = Json{{"images",
            {{"train", summary.images.train},
             {"val", summary.images.val},
             {"test", summary.images.test}}},
           {"questions",
            {{"train", summary.questions.train},
             {"val", summary.questions.val},
             {"test", summary.questions.test}}}};
}

}  // namespace vqs
