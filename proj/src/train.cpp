// src/train.cpp

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

#include "huc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "huc/cluster.hpp"
#include "huc/parallel.hpp"

namespace huc {

namespace {

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kInitStream = 3;
// Negative draws: training steps use (epoch, utterance); evaluation reuses
// one fixed draw per utterance so epoch losses are comparable.
constexpr std::uint64_t kEvalNegStream = 0xE0A1;

CpcConfig with_seed(const CpcConfig &cfg, std::uint64_t seed) {
  CpcConfig out = cfg;
  out.seed = seed;
  return out;
}

std::uint64_t eval_neg_seed(const CpcConfig &cpc, int utt) {
  return derive_seed(derive_seed(cpc.seed, kEvalNegStream), utt);
}

std::uint64_t train_neg_seed(const CpcConfig &cpc, int epoch, int utt) {
  return derive_seed(derive_seed(cpc.seed, 0x1000 + epoch), utt);
}

void check_train_config(const TrainConfig &cfg, const CpcConfig &cpc) {
  auto problems = cfg.violations();
  for (auto &p : cpc.violations()) problems.push_back(p);
  if (!problems.empty()) fail(ErrorCode::kInvalidConfig, problems.front());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Batches of a shuffled copy of `utts`.
std::vector<std::vector<int>> make_batches(const std::vector<int> &utts,
                                           int batch, std::uint64_t seed) {
  std::vector<int> order = utts;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < order.size(); i += batch)
    out.emplace_back(order.begin() + i,
                     order.begin() + std::min(order.size(), i + batch));
  return out;
}

void check_alignment(const Corpus &corpus, const EncoderArch &arch,
                     const std::vector<Labels> &labels) {
  if (labels.size() != corpus.size())
    fail(ErrorCode::kShapeMismatch,
         std::to_string(labels.size()) + " label sequences for " +
             std::to_string(corpus.size()) + " utterances");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int T = output_frames(arch, corpus[i].samples.size());
    if (static_cast<int>(labels[i].size()) != T)
      fail(ErrorCode::kShapeMismatch,
           corpus[i].utterance_id + ": " + std::to_string(labels[i].size()) +
               " labels for " + std::to_string(T) + " frames");
  }
}

// Runs the shared epoch loop. `step` returns the per-utterance loss and
// gradient; `evaluate` the loss of a set of utterances.
template <typename StepFn, typename EvalFn>
TrainResult run_training(EncoderParams params, const Corpus &corpus,
                         const TrainConfig &train, const TrainHooks &hooks,
                         double lambda, StepFn step, EvalFn evaluate) {
  std::vector<int> train_utts, val_utts;
  split_train_val(static_cast<int>(corpus.size()), train.validation_fraction,
                  derive_seed(train.seed, kSplitStream), &train_utts,
                  &val_utts);
  if (train_utts.empty())
    fail(ErrorCode::kEmptyInput, "no training utterances");
  const std::vector<int> &val_set = val_utts.empty() ? train_utts : val_utts;

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  EpochRecord initial;
  initial.epoch = 0;
  initial.train_loss = evaluate(params, train_utts);
  initial.val_loss = evaluate(params, val_set);
  initial.lr = train.learning_rate;
  initial.seconds = seconds_since(t0);
  result.history.push_back(initial);
  if (hooks.on_epoch) hooks.on_epoch(initial);
  result.params = params;
  result.best_epoch = 0;

  AdamState adam;
  EarlyStopping stopper(train.patience);
  int global_step = 0;
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    const auto te = std::chrono::steady_clock::now();
    const auto batches = make_batches(
        train_utts, train.batch,
        derive_seed(derive_seed(train.seed, kShuffleStream), epoch));
    for (const auto &batch : batches) {
      std::vector<UtteranceLoss> parts(batch.size());
      parallel_for(batch.size(), [&](std::size_t i) {
        parts[i] = step(params, batch[i], epoch);
      });
      ParamGrads total = ParamGrads::zeros_like(params);
      double huc = 0.0, cpc = 0.0;
      for (const auto &p : parts) {
        total += p.grads;
        huc += p.huc;
        cpc += p.cpc;
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      total.values *= inv;
      adam_step(&params.values, total.values, &adam, train.learning_rate);

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = ++global_step;
      rec.huc = huc * inv;
      rec.cpc = cpc * inv;
      rec.cpc_evaluated = lambda > 0.0;
      rec.total = reg_loss(rec.huc, rec.cpc, lambda);
      if (hooks.on_step) hooks.on_step(rec);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = evaluate(params, train_utts);
    rec.val_loss = evaluate(params, val_set);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss))
      fail(ErrorCode::kNonFinite,
           "non-finite loss at epoch " + std::to_string(epoch));
    if (hooks.validation_override)
      rec.val_loss = hooks.validation_override(epoch, rec.val_loss);
    rec.lr = train.learning_rate;
    rec.seconds = seconds_since(te);
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (stopper.update(epoch, rec.val_loss)) {
      result.params = params;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

}  // namespace

UtteranceLoss cpc_utterance_loss(const EncoderParams &params,
                                 const Vector &samples, const CpcConfig &cpc) {
  const auto trace = encode_traced(params, samples);
  UpstreamGrad up{FrameMatrix::Zero(trace.z().rows(), trace.z().cols()),
                  FrameMatrix::Zero(trace.c().rows(), trace.c().cols())};
  UtteranceLoss out{0.0, 0.0, 0.0, ParamGrads::zeros_like(params)};
  out.cpc = cpc_loss(params, trace.z(), trace.c(), cpc, &up, &out.grads);
  out.total = out.cpc;
  out.grads += backward(params, trace, up);
  return out;
}

UtteranceLoss huc_utterance_loss(const EncoderParams &params,
                                 const Vector &samples, const Labels &labels,
                                 double lambda, const CpcConfig &cpc) {
  const auto &L = *params.layout;
  const auto trace = encode_traced(params, samples);
  const FrameMatrix &z = trace.z(), &c = trace.c();
  const auto h = huc_loss(mean_normalize(c), labels, params[L.logits_weight()],
                          params[L.logits_bias()]);

  UtteranceLoss out{h.loss, 0.0, 0.0, ParamGrads::zeros_like(params)};
  out.grads[L.logits_weight()] = h.dweight;
  out.grads[L.logits_bias()] = h.dbias;
  UpstreamGrad up{FrameMatrix::Zero(z.rows(), z.cols()),
                  mean_normalize_backward(h.dchat)};
  if (lambda > 0.0) {
    UpstreamGrad cup{FrameMatrix::Zero(z.rows(), z.cols()),
                     FrameMatrix::Zero(c.rows(), c.cols())};
    ParamGrads cg = ParamGrads::zeros_like(params);
    out.cpc = cpc_loss(params, z, c, cpc, &cup, &cg);
    up.dz += lambda * cup.dz;
    up.dc += lambda * cup.dc;
    out.grads.values += lambda * cg.values;
  }
  out.total = reg_loss(out.huc, out.cpc, lambda);
  out.grads += backward(params, trace, up);
  return out;
}

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> out;
  if (!(lambda >= 0.0)) out.push_back("train.lambda must be >= 0");
  if (epochs < 0) out.push_back("train.epochs must be >= 0");
  if (patience < 1) out.push_back("train.patience must be >= 1");
  if (!(learning_rate > 0.0)) out.push_back("train.learning_rate must be > 0");
  if (batch < 1) out.push_back("train.batch must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    out.push_back("train.validation_fraction must be in [0, 1)");
  return out;
}

EarlyStopping::EarlyStopping(int patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) fail(ErrorCode::kInvalidArgument, "patience must be >= 1");
}

bool EarlyStopping::update(int epoch, double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

void split_train_val(int n, double fraction, std::uint64_t seed,
                     std::vector<int> *train, std::vector<int> *val) {
  train->clear();
  val->clear();
  if (n <= 0) return;
  int n_val = static_cast<int>(std::lround(fraction * n));
  if (n >= 2 && fraction > 0.0) n_val = std::clamp(n_val, 1, n - 1);
  if (n < 2) n_val = 0;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  val->assign(order.begin(), order.begin() + n_val);
  train->assign(order.begin() + n_val, order.end());
  std::sort(val->begin(), val->end());
  std::sort(train->begin(), train->end());
}

double evaluate_cpc(const Corpus &corpus, const std::vector<int> &utts,
                    const EncoderParams &params, const CpcConfig &cpc) {
  if (utts.empty()) fail(ErrorCode::kEmptyInput, "no utterances to evaluate");
  std::vector<double> losses(utts.size());
  parallel_for(utts.size(), [&](std::size_t i) {
    const auto enc = encode(params, corpus[utts[i]].samples);
    losses[i] = cpc_loss(params, enc.z, enc.c,
                         with_seed(cpc, eval_neg_seed(cpc, utts[i])), nullptr,
                         nullptr);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) /
         static_cast<double>(utts.size());
}

HucEval evaluate_huc(const Corpus &corpus, const std::vector<int> &utts,
                     const EncoderParams &params,
                     const std::vector<Labels> &labels, double lambda,
                     const CpcConfig &cpc) {
  if (utts.empty()) fail(ErrorCode::kEmptyInput, "no utterances to evaluate");
  const auto &L = *params.layout;
  struct Part {
    double huc = 0.0, cpc = 0.0, correct = 0.0, frames = 0.0;
  };
  std::vector<Part> parts(utts.size());
  parallel_for(utts.size(), [&](std::size_t i) {
    const int u = utts[i];
    const auto enc = encode(params, corpus[u].samples);
    const auto h = huc_loss(mean_normalize(enc.c), labels[u],
                            params[L.logits_weight()],
                            params[L.logits_bias()]);
    parts[i].huc = h.loss;
    parts[i].frames = static_cast<double>(labels[u].size());
    parts[i].correct = h.accuracy * parts[i].frames;
    if (lambda > 0.0)
      parts[i].cpc = cpc_loss(params, enc.z, enc.c,
                              with_seed(cpc, eval_neg_seed(cpc, u)), nullptr,
                              nullptr);
  });
  HucEval out;
  double correct = 0.0, frames = 0.0;
  for (const auto &p : parts) {
    out.huc += p.huc;
    out.cpc += p.cpc;
    correct += p.correct;
    frames += p.frames;
  }
  out.huc /= static_cast<double>(utts.size());
  out.cpc /= static_cast<double>(utts.size());
  out.total = reg_loss(out.huc, out.cpc, lambda);
  out.accuracy = frames > 0.0 ? correct / frames : 0.0;
  return out;
}

TrainResult train_cpc(const Corpus &corpus, const EncoderArch &arch,
                      const CpcConfig &cpc, const TrainConfig &train,
                      const TrainHooks &hooks) {
  check_train_config(train, cpc);
  if (corpus.empty()) fail(ErrorCode::kEmptyInput, "empty corpus");
  const auto calls0 = cpc_loss_calls();
  auto step = [&](const EncoderParams &p, int u, int epoch) {
    return cpc_utterance_loss(p, corpus[u].samples,
                              with_seed(cpc, train_neg_seed(cpc, epoch, u)));
  };
  auto evaluate = [&](const EncoderParams &p, const std::vector<int> &utts) {
    return evaluate_cpc(corpus, utts, p, cpc);
  };
  auto result =
      run_training(init_params(arch, derive_seed(train.seed, kInitStream)),
                   corpus, train, hooks, 1.0, step, evaluate);
  result.cpc_evaluations = static_cast<long>(cpc_loss_calls() - calls0);
  return result;
}

TrainResult train_huc(const Corpus &corpus, const EncoderParams &init,
                      const std::vector<Labels> &labels,
                      const TrainConfig &train, const CpcConfig &cpc,
                      const TrainHooks &hooks) {
  check_train_config(train, cpc);
  if (corpus.empty()) fail(ErrorCode::kEmptyInput, "empty corpus");
  check_alignment(corpus, init.arch, labels);
  const double lambda = train.lambda;
  const auto calls0 = cpc_loss_calls();
  auto step = [&](const EncoderParams &p, int u, int epoch) {
    return huc_utterance_loss(p, corpus[u].samples, labels[u], lambda,
                              with_seed(cpc, train_neg_seed(cpc, epoch, u)));
  };
  auto evaluate = [&](const EncoderParams &p, const std::vector<int> &utts) {
    return evaluate_huc(corpus, utts, p, labels, lambda, cpc).total;
  };
  auto result = run_training(init, corpus, train, hooks, lambda, step,
                             evaluate);
  result.cpc_evaluations = static_cast<long>(cpc_loss_calls() - calls0);
  return result;
}

}  // namespace huc
