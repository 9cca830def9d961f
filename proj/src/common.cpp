// src/common.cpp

// Copyright 2026  huc-lab authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "huc/common.hpp"

namespace huc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kSignalTooShort: return "signal too short";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kUtteranceTooShort: return "utterance too short for K";
    case ErrorCode::kLabelOutOfRange: return "label out of range";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kInsufficientMaterial: return "insufficient material";
    case ErrorCode::kNoKnee: return "no knee";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kSingleClass: return "single class";
    case ErrorCode::kMissingDependency: return "missing dependency";
    case ErrorCode::kLocked: return "run directory locked";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string &what) {
  throw Error(code, std::string(error_code_name(code)) + ": " + what);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace huc
