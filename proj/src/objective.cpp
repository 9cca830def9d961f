// src/objective.cpp

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

#include "huc/objective.hpp"

#include <atomic>

#include <cmath>
#include <random>

namespace huc {

std::vector<std::string> CpcConfig::violations() const {
  std::vector<std::string> out;
  if (K < 1) out.push_back("cpc.K must be >= 1");
  if (num_negatives < 1) out.push_back("cpc.num_negatives must be >= 1");
  if (!within_utterance)
    out.push_back("cpc.within_utterance must be true (only mode supported)");
  return out;
}

namespace {
std::atomic<std::uint64_t> g_cpc_calls{0};
}  // namespace

std::uint64_t cpc_loss_calls() { return g_cpc_calls.load(); }

std::vector<int> draw_negatives(int T, int K, int num_negatives,
                                std::uint64_t seed) {
  std::vector<int> out;
  if (T <= K) return out;
  out.reserve(static_cast<std::size_t>(T - K) * K * num_negatives);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, T - 2);
  for (int t = 0; t + K < T; ++t) {
    for (int k = 1; k <= K; ++k) {
      const int pos = t + k;
      for (int j = 0; j < num_negatives; ++j) {
        int idx = pick(rng);
        if (idx >= pos) ++idx;
        out.push_back(idx);
      }
    }
  }
  return out;
}

CpcResult cpc_loss(const FrameMatrix &z, const FrameMatrix &c,
                   const std::vector<FrameMatrix> &heads,
                   const CpcConfig &cfg) {
  g_cpc_calls.fetch_add(1);
  auto problems = cfg.violations();
  if (!problems.empty()) fail(ErrorCode::kInvalidConfig, problems.front());
  const int T = static_cast<int>(z.rows());
  const int K = cfg.K, N = cfg.num_negatives;
  if (c.rows() != z.rows())
    fail(ErrorCode::kShapeMismatch, "Z and C row counts differ");
  if (static_cast<int>(heads.size()) != K)
    fail(ErrorCode::kShapeMismatch, "expected " + std::to_string(K) +
                                        " prediction heads, got " +
                                        std::to_string(heads.size()));
  for (const auto &w : heads)
    if (w.rows() != z.cols() || w.cols() != c.cols())
      fail(ErrorCode::kShapeMismatch, "prediction head shape");
  if (T <= K)
    fail(ErrorCode::kUtteranceTooShort,
         "T = " + std::to_string(T) + ", K = " + std::to_string(K));

  const auto neg = draw_negatives(T, K, N, cfg.seed);
  const int valid = T - K;
  const double scale = 1.0 / (static_cast<double>(K) * valid);

  CpcResult res;
  res.dz = FrameMatrix::Zero(z.rows(), z.cols());
  res.dc = FrameMatrix::Zero(c.rows(), c.cols());
  res.dheads.reserve(K);
  std::vector<double> score(N + 1), prob(N + 1);
  std::vector<int> cand(N + 1);
  double total = 0.0;
  for (int k = 1; k <= K; ++k) {
    const auto &w = heads[k - 1];
    // pred row t = (W_k c_t)^T
    const FrameMatrix pred = c * w.transpose();
    FrameMatrix dpred = FrameMatrix::Zero(valid, z.cols());
    for (int t = 0; t < valid; ++t) {
      cand[0] = t + k;
      const int *ns = &neg[(static_cast<std::size_t>(t) * K + (k - 1)) * N];
      for (int j = 0; j < N; ++j) cand[j + 1] = ns[j];
      double mx = -INFINITY;
      for (int j = 0; j <= N; ++j) {
        score[j] = z.row(cand[j]).dot(pred.row(t));
        mx = std::max(mx, score[j]);
      }
      double sum = 0.0;
      for (int j = 0; j <= N; ++j) {
        prob[j] = std::exp(score[j] - mx);
        sum += prob[j];
      }
      total += -(score[0] - mx - std::log(sum));
      for (int j = 0; j <= N; ++j) {
        const double ds = scale * (prob[j] / sum - (j == 0 ? 1.0 : 0.0));
        dpred.row(t) += ds * z.row(cand[j]);
        res.dz.row(cand[j]) += ds * pred.row(t);
      }
    }
    res.dheads.push_back(dpred.transpose() * c.topRows(valid));
    res.dc.topRows(valid) += dpred * w;
  }
  res.loss = total * scale;
  return res;
}

double cpc_loss(const EncoderParams &params, const FrameMatrix &z,
                const FrameMatrix &c, const CpcConfig &cfg,
                UpstreamGrad *upstream, ParamGrads *grads) {
  const auto &L = *params.layout;
  if (params.arch.prediction_steps < cfg.K)
    fail(ErrorCode::kShapeMismatch, "model has " +
                                        std::to_string(
                                            params.arch.prediction_steps) +
                                        " heads, cpc.K = " +
                                        std::to_string(cfg.K));
  std::vector<FrameMatrix> heads;
  heads.reserve(cfg.K);
  for (int k = 0; k < cfg.K; ++k) heads.emplace_back(params[L.head(k)]);
  auto res = cpc_loss(z, c, heads, cfg);
  if (upstream) {
    upstream->dz += res.dz;
    upstream->dc += res.dc;
  }
  if (grads)
    for (int k = 0; k < cfg.K; ++k) (*grads)[L.head(k)] += res.dheads[k];
  return res.loss;
}

HucResult huc_loss(const FrameMatrix &chat, const Labels &labels,
                   const FrameMatrix &weight, const RowVector &bias) {
  const Eigen::Index T = chat.rows(), units = weight.rows();
  if (static_cast<Eigen::Index>(labels.size()) != T)
    fail(ErrorCode::kShapeMismatch,
         std::to_string(labels.size()) + " labels for " + std::to_string(T) +
             " frames");
  if (weight.cols() != chat.cols() || bias.size() != units)
    fail(ErrorCode::kShapeMismatch, "logits layer shape");
  if (T == 0) fail(ErrorCode::kEmptyInput, "no frames");
  for (int l : labels)
    if (l < 0 || l >= units)
      fail(ErrorCode::kLabelOutOfRange,
           std::to_string(l) + " not in [0, " + std::to_string(units) + ")");

  FrameMatrix logits = chat * weight.transpose();
  logits.rowwise() += bias;
  HucResult res;
  FrameMatrix dlogits(T, units);
  double total = 0.0;
  long correct = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::Index arg;
    const double mx = logits.row(t).maxCoeff(&arg);
    if (arg == labels[t]) ++correct;
    const RowVector e = (logits.row(t).array() - mx).exp().matrix();
    const double sum = e.sum();
    total += -(logits(t, labels[t]) - mx - std::log(sum));
    dlogits.row(t) = e / sum;
    dlogits(t, labels[t]) -= 1.0;
  }
  dlogits /= static_cast<double>(T);
  res.loss = total / static_cast<double>(T);
  res.accuracy = static_cast<double>(correct) / static_cast<double>(T);
  res.dchat = dlogits * weight;
  res.dweight = dlogits.transpose() * chat;
  res.dbias = dlogits.colwise().sum();
  return res;
}

double reg_loss(double huc, double cpc, double lambda) {
  if (!(lambda >= 0.0))
    fail(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  return huc + lambda * cpc;
}

void adam_step(Vector *params, const Vector &grads, AdamState *state,
               double lr) {
  if (grads.size() != params->size())
    fail(ErrorCode::kShapeMismatch, "gradient size " +
                                        std::to_string(grads.size()) +
                                        " vs params " +
                                        std::to_string(params->size()));
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < grads.size(); ++bad)
      if (!std::isfinite(grads[bad])) break;
    fail(ErrorCode::kNonFinite, "gradient entry " + std::to_string(bad) +
                                    " is " + std::to_string(grads[bad]) +
                                    " at step " +
                                    std::to_string(state->step + 1));
  }
  if (state->m.size() != params->size()) {
    state->m = Vector::Zero(params->size());
    state->v = Vector::Zero(params->size());
    state->step = 0;
  }
  state->step += 1;
  state->m = kAdamBeta1 * state->m + (1.0 - kAdamBeta1) * grads;
  state->v = kAdamBeta2 * state->v +
             (1.0 - kAdamBeta2) * grads.array().square().matrix();
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state->step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state->step));
  params->array() -= lr * (state->m.array() / c1) /
                     ((state->v.array() / c2).sqrt() + kAdamEps);
}

}  // namespace huc
