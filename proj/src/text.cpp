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

#include "vqs/text.hpp"

#include <array>
#include <cctype>

namespace vqs {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::optional<int> parse_count(std::string_view answer) {
  static constexpr std::array<std::string_view, 11> kWords = {
      "zero", "one", "two", "three", "four", "five",
      "six",  "seven", "eight", "nine", "ten"};
  std::size_t b = 0;
  std::size_t e = answer.size();
  while (b < e && std::isspace(static_cast<unsigned char>(answer[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(answer[e - 1]))) --e;
  const std::string trimmed = to_lower(answer.substr(b, e - b));
  if (trimmed.empty()) return std::nullopt;
  bool all_digits = trimmed.size() <= 9;
  for (char ch : trimmed) {
    all_digits = all_digits && std::isdigit(static_cast<unsigned char>(ch));
  }
  if (all_digits) return std::stoi(trimmed);
  for (std::size_t i = 0; i < kWords.size(); ++i) {
    if (trimmed == kWords[i]) return static_cast<int>(i);
  }
  return std::nullopt;
}

}  // namespace vqs
