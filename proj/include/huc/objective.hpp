// huc/objective.hpp

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

#ifndef HUC_OBJECTIVE_HPP_
#define HUC_OBJECTIVE_HPP_

#include <cstdint>
#include <vector>

#include "huc/common.hpp"
#include "huc/encoder.hpp"

namespace huc {

struct CpcConfig {
  int K = 4;
  int num_negatives = 8;
  std::uint64_t seed = 0;
  /// Negatives always come from the same utterance; kept for the config echo.
  bool within_utterance = true;

  std::vector<std::string> violations() const;
};

struct CpcResult {
  double loss = 0.0;
  FrameMatrix dz;
  FrameMatrix dc;
  std::vector<FrameMatrix> dheads;  // one F x H gradient per step k
};

/// Indices of the negatives for (t, k), drawn uniformly with replacement from
/// [0, T) minus the positive t + k. negatives[(t * K + k - 1) * N + j].
std::vector<int> draw_negatives(int T, int K, int num_negatives,
                                std::uint64_t seed);

/// Contrastive predictive loss. For each t with t + K < T and each k in 1..K,
/// the candidate set is the positive z_{t+k} plus num_negatives distractors,
/// each scored as z^T W_k c_t; the loss is the softmax cross-entropy of the
/// positive, averaged over k and over the T - K valid frames.
CpcResult cpc_loss(const FrameMatrix &z, const FrameMatrix &c,
                   const std::vector<FrameMatrix> &heads,
                   const CpcConfig &cfg);

/// Number of cpc_loss evaluations made by this process so far (all threads).
std::uint64_t cpc_loss_calls();

/// Same, with the heads read from params and their gradients scattered into
/// grads (which must share the params' layout).
double cpc_loss(const EncoderParams &params, const FrameMatrix &z,
                const FrameMatrix &c, const CpcConfig &cfg,
                UpstreamGrad *upstream, ParamGrads *grads);

struct HucResult {
  double loss = 0.0;     // mean per-frame cross-entropy
  double accuracy = 0.0; // fraction of frames whose argmax equals the label
  FrameMatrix dchat;
  FrameMatrix dweight;
  RowVector dbias;
};

/// Cross-entropy of softmax(W c_hat_t + b) against the pseudo-label l_t,
/// averaged over frames. The gradients are those of the average.
HucResult huc_loss(const FrameMatrix &chat, const Labels &labels,
                   const FrameMatrix &weight, const RowVector &bias);

/// huc + lambda * cpc.
double reg_loss(double huc, double cpc, double lambda);

/// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  step += 1
///   theta <- theta - lr * (m / (1 - b1^step)) / (sqrt(v / (1 - b2^step)) + eps)
struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Throws kNonFinite (and leaves params and state untouched) if any gradient
/// is NaN or infinite.
void adam_step(Vector *params, const Vector &grads, AdamState *state,
               double lr);

}  // namespace huc

#endif  // HUC_OBJECTIVE_HPP_
