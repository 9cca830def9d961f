// huc/cluster.hpp

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

#ifndef HUC_CLUSTER_HPP_
#define HUC_CLUSTER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "huc/common.hpp"

namespace huc {

/// Arithmetic mean over the rows of an utterance's context vectors.
template <typename Derived>
RowVectorT<typename Derived::Scalar> utterance_mean(
    const Eigen::MatrixBase<Derived> &frames) {
  if (frames.rows() == 0)
    fail(ErrorCode::kEmptyInput, "utterance mean of an empty matrix");
  return frames.colwise().mean();
}

/// Removes the utterance-level mean from every frame.
template <typename Derived>
FrameMatrixT<typename Derived::Scalar> mean_normalize(
    const Eigen::MatrixBase<Derived> &frames) {
  const auto mean = utterance_mean(frames);
  FrameMatrixT<typename Derived::Scalar> out = frames;
  out.rowwise() -= mean;
  return out;
}

/// Adjoint of mean_normalize: maps a gradient w.r.t. the normalized frames to
/// a gradient w.r.t. the raw frames.
template <typename Derived>
FrameMatrixT<typename Derived::Scalar> mean_normalize_backward(
    const Eigen::MatrixBase<Derived> &grad) {
  return mean_normalize(grad);
}

struct Codebook {
  FrameMatrix centroids;  // k x F
  std::vector<double> inertia_history;
  std::uint64_t seed = 0;
  int iterations = 0;

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
};

/// Nearest centroid per row (squared Euclidean), ties to the lowest index.
Labels nearest_centroids(const FrameMatrix &points,
                         const FrameMatrix &centroids,
                         std::vector<double> *sq_dist = nullptr);

/// Lloyd's k-means.
///  - init: k-means++. First centre is a uniformly drawn point; each further
///    centre is drawn with probability proportional to its squared distance
///    to the nearest chosen centre (if every distance is zero, the lowest
///    unchosen index is taken).
///  - each iteration assigns points, records the inertia, stops if the
///    assignment did not change, then moves every centre to its cluster mean.
///  - an empty cluster is reseeded to the point farthest from its assigned
///    centre (lowest index on ties), which cannot increase the inertia.
/// inertia_history holds one entry per assignment step and is non-increasing.
Codebook kmeans(const FrameMatrix &points, int k, int max_iters,
                std::uint64_t seed);

double inertia(const FrameMatrix &points, const FrameMatrix &centroids);

/// Kneedle-style elbow: both axes are min-max normalized, and the chosen k is
/// the one whose normalized inertia lies farthest below the chord from the
/// first to the last point (smallest k on ties). Fails with kNoKnee when that
/// distance never exceeds 1e-9.
int knee_point(const std::vector<std::pair<int, double>> &curve);

/// Subset sizes up to which select_farthest/select_nearest search exhaustively.
inline constexpr double kExactSelectionLimit = 200000.0;

/// The n centroids whose minimum pairwise Euclidean distance is largest.
/// When C(k, n) <= kExactSelectionLimit every n-subset is scored and the
/// lexicographically lowest optimum is returned in ascending order. Larger
/// problems fall back to greedy max-min (farthest-point) traversal: seed with
/// the most distant pair, then keep adding the centroid whose minimum
/// distance to the chosen set is largest, ties to the lowest index, returned
/// in selection order. n = 1 always takes the first id of the most distant
/// pair.
std::vector<int> select_farthest(const Codebook &codebook, int n);

/// Mirror image: minimizes the maximum pairwise distance; the greedy
/// fallback seeds with the closest pair and adds the centroid whose maximum
/// distance to the chosen set is smallest.
std::vector<int> select_nearest(const Codebook &codebook, int n);

/// Indices of the utterances whose mean's nearest centroid is selected.
std::vector<int> sample_utterances(const FrameMatrix &utterance_means,
                                   const Codebook &codebook,
                                   const std::vector<int> &selected);

/// Nearest-centroid pseudo-label per frame.
Labels assign_labels(const FrameMatrix &chat, const Codebook &codebook);

struct SamplingPlan {
  int M = 0;
  int N = 0;
  std::vector<int> selected_centroid_ids;
  std::vector<int> selected_utterance_ids;
  std::vector<std::pair<int, double>> inertia_curve;
};

// Codebook file: "HUCC" | version u16 | k u32 | F u32 | k*F f64 | seed u64.
inline constexpr std::uint16_t kCodebookVersion = 1;

std::string encode_codebook(const Codebook &cb);
Codebook decode_codebook(std::string_view bytes);
void write_codebook(const std::filesystem::path &path, const Codebook &cb);
Codebook read_codebook(const std::filesystem::path &path);

}  // namespace huc

#endif  // HUC_CLUSTER_HPP_
