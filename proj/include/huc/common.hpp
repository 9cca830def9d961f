// huc/common.hpp

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

#ifndef HUC_COMMON_HPP_
#define HUC_COMMON_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace huc {

/// Row-major T x F sequence of frame vectors (z, c or mean-normalized c).
template <typename Scalar>
using FrameMatrixT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using FrameMatrix = FrameMatrixT<double>;
using Vector = VectorT<double>;
using RowVector = RowVectorT<double>;

using Labels = std::vector<int>;

enum class ErrorCode {
  kInvalidArgument,
  kInvalidConfig,
  kBadMagic,
  kUnsupportedVersion,
  kDimensionMismatch,
  kTruncated,
  kIo,
  kSignalTooShort,
  kShapeMismatch,
  kUtteranceTooShort,
  kLabelOutOfRange,
  kNonFinite,
  kInsufficientMaterial,
  kNoKnee,
  kEmptyInput,
  kSingleClass,
  kMissingDependency,
  kLocked,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &what);

/// splitmix64 finalizer; used to derive independent per-stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace huc

#endif  // HUC_COMMON_HPP_
