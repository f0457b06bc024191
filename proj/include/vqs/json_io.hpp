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

// JSON forms of the annotation file records. Field names match the on-disk
// schema; RLE is {"size": [height, width], "counts": [...]}, a polygon is
// {"vertices": [[x, y], ...]} and a box is {"x", "y", "w", "h"} (a bare
// [x, y, w, h] array is also accepted on input).

#pragma once

#include <string>

#include "json.hpp"
#include "vqs/dataset.hpp"

namespace vqs {

using Json = nlohmann::json;

// Reads and parses a file. Throws kIo when unreadable and kParseError with
// line and column on malformed input.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& value);
// Parses text; `origin` labels error messages.
Json parse_json(const std::string& text, const std::string& origin);

void to_json(Json& j, const Box& box);
void from_json(const Json& j, Box& box);
void to_json(Json& j, const RleMask& rle);
void from_json(const Json& j, RleMask& rle);
void to_json(Json& j, const Polygon& polygon);
void from_json(const Json& j, Polygon& polygon);
void to_json(Json& j, const ImageMeta& image);
void from_json(const Json& j, ImageMeta& image);
void to_json(Json& j, const SegmentRecord& segment);
void from_json(const Json& j, SegmentRecord& segment);
void to_json(Json& j, const Question& question);
void from_json(const Json& j, Question& question);
void to_json(Json& j, const Link& link);
void from_json(const Json& j, Link& link);
void to_json(Json& j, const Violation& violation);
void to_json(Json& j, const Split& split);
void from_json(const Json& j, Split& split);
void to_json(Json& j, const DatasetStats& stats);
void to_json(Json& j, const SplitSummary& summary);

}  // namespace vqs
