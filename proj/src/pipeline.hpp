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

// File-to-file pipeline stages shared by the C API and the command line.
// Each stage reads its inputs from paths in a StageOptions bag and returns
// the text it would print.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vqs {

class StageOptions {
 public:
  void set(const std::string& key, std::string value);
  void append(const std::string& key, std::string value);
  void erase(const std::string& key) { values_.erase(key); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  // Throws kInvalidArgument naming the missing or malformed option.
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  const std::vector<std::string>& list(const std::string& key) const;
  std::uint64_t u64_or(const std::string& key, std::uint64_t fallback) const;
  std::size_t size_or(const std::string& key, std::size_t fallback) const;
  double double_or(const std::string& key, double fallback) const;
  bool flag(const std::string& key) const;

  const std::map<std::string, std::vector<std::string>>& values() const {
    return values_;
  }

 private:
  std::map<std::string, std::vector<std::string>> values_;
};

struct StageResult {
  int status = 0;  // 0 ok, 1 the input failed validation
  std::string output;
};

inline constexpr std::string_view kStageNames[] = {
    "validate",   "stats",     "split",     "targets",
    "train-attn", "train-vqa", "eval-vqa",  "ensemble",
    "train-qfss", "eval-qfss", "oracle-qfss"};

bool is_stage(std::string_view name);

// Throws vqs::Error; kInvalidArgument for an unknown stage.
StageResult run_stage(std::string_view stage, const StageOptions& options);

}  // namespace vqs
