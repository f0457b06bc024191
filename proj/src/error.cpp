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

#include "vqs/error.hpp"

namespace vqs {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kDegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kInvalidSimplex: return "InvalidSimplex";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kFlaggedRecord: return "FlaggedRecord";
    case ErrorCode::kSizesExceedDataset: return "SizesExceedDataset";
    case ErrorCode::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingFeatures: return "MissingFeatures";
    case ErrorCode::kIncompleteCandidates: return "IncompleteCandidates";
    case ErrorCode::kIdMismatch: return "IdMismatch";
    case ErrorCode::kMissingProposals: return "MissingProposals";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace vqs
