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

// Tokenization shared by question classification and text featurization.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vqs {

// Lowercase ASCII tokens split on every non-alphanumeric byte; empty tokens
// are dropped.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

// Whole-answer digits ("12") or an English number word zero..ten.
std::optional<int> parse_count(std::string_view answer);

}  // namespace vqs
