// huc/eval.hpp

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

#ifndef HUC_EVAL_HPP_
#define HUC_EVAL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "huc/cluster.hpp"
#include "huc/common.hpp"
#include "huc/corpus.hpp"
#include "huc/encoder.hpp"

namespace huc {

/// Norm products below this are clamped before dividing, so a zero frame has
/// cosine 0 (angular distance 0.5) against everything.
inline constexpr double kCosineEps = 1e-12;

/// Angle between a and b divided by pi, in [0, 1]. Evaluated as
/// 2 atan2(|a' - b'|, |a' + b'|) on the unit vectors, which is exact for
/// parallel frames where arccos of the cosine is not.
double angular_distance(const RowVector &a, const RowVector &b);

/// DTW over steps (1,0), (0,1), (1,1) with angular frame distances. The
/// optimal path minimizes total cost, then length; the result is that cost
/// divided by the path length.
double dtw_angular(const FrameMatrix &a, const FrameMatrix &b);

struct AbxReport {
  AbxMode mode = AbxMode::kWithin;
  std::size_t triplet_count = 0;
  double error_rate = 0.0;
  std::vector<double> per_triplet;  // 0, 0.5 or 1
};

/// Error 1 when d(A, X) > d(B, X), 0.5 on ties, 0 otherwise.
AbxReport abx_score(const TripletSet &triplets,
                    const std::vector<FrameMatrix> &features);

/// Size-weighted average over clusters of the dominant-speaker fraction.
double cluster_purity(const Labels &cluster_ids, const Labels &speaker_ids);

struct ProbeConfig {
  double train_fraction = 0.8;
  int max_iters = 300;
  double learning_rate = 1.0;  // in units of the inverse smoothness bound
  double l2 = 1e-4;
  double tolerance = 1e-6;  // stop once the gradient max-norm drops below
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double accuracy = 0.0;
  int iterations = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Multinomial logistic regression on standardized features, trained by
/// full-batch gradient descent on a seeded 80/20 row split; returns the
/// held-out accuracy.
ProbeResult linear_probe(const FrameMatrix &x, const Labels &y,
                         const ProbeConfig &cfg);

Labels dedup(const Labels &seq);

/// Unit-cost edit distance.
int levenshtein(const Labels &a, const Labels &b);

enum class TransformKind { kIdentity, kFeatureNoise, kFrameDropout, kGain };

struct Transform {
  TransformKind kind = TransformKind::kIdentity;
  double amount = 0.0;  // noise std, dropout probability or gain factor

  std::string name() const;
  /// Parses "identity", "noise:0.3", "dropout:0.1", "gain:2".
  static Transform parse(const std::string &spec);
};

/// Applies the perturbation to a raw signal. Noise and dropout draw from
/// seed; dropout zeroes whole frames of samples_per_frame samples.
Vector apply_transform(const Transform &t, const Vector &samples,
                       int samples_per_frame, std::uint64_t seed);

struct UedReport {
  std::string transform;
  double ued = 0.0;  // corpus mean, x1000
  std::vector<double> per_utterance;
};

/// Quantized unit sequence of one signal: encode, mean-normalize c, nearest
/// centroid per frame, collapse repeats.
Labels unit_sequence(const EncoderParams &params, const Codebook &codebook,
                     const Vector &samples);

/// Per utterance: 1000 * LEV(units(x), units(g(x))) / |units(x)|.
UedReport ued(const Corpus &corpus, const EncoderParams &params,
              const Codebook &codebook, const Transform &transform,
              int samples_per_frame, std::uint64_t seed);

struct BootstrapResult {
  double ci1_low = 0.0, ci1_high = 0.0;
  double ci2_low = 0.0, ci2_high = 0.0;
  double diff_low = 0.0, diff_high = 0.0;  // model1 - model2
  double poi = 0.0;  // fraction of resamples where model 2 beats model 1
};

/// resamples x n utterance indices, drawn uniformly with replacement.
std::vector<std::vector<int>> bootstrap_draws(int n, int resamples,
                                              std::uint64_t seed);

/// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

/// Aggregate error of a resample is the mean of its per-utterance errors.
/// Confidence intervals are the 2.5 / 97.5 percentiles over resamples.
BootstrapResult bootstrap_ci(const std::vector<double> &errors1,
                             const std::vector<double> &errors2,
                             int resamples, std::uint64_t seed);

}  // namespace huc

#endif  // HUC_EVAL_HPP_
