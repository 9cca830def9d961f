// huc/train.hpp

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

#ifndef HUC_TRAIN_HPP_
#define HUC_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "huc/corpus.hpp"
#include "huc/encoder.hpp"
#include "huc/objective.hpp"

namespace huc {

struct TrainConfig {
  double lambda = 1e-4;
  int epochs = 20;
  int patience = 5;
  double learning_rate = 3e-3;
  int batch = 8;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
};

struct EpochRecord {
  int epoch = 0;  // 0 is the evaluation before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct StepRecord {
  int epoch = 0;
  int step = 0;
  double huc = 0.0;
  double cpc = 0.0;  // 0 when not evaluated
  double total = 0.0;
  bool cpc_evaluated = false;
};

struct TrainHooks {
  /// Replaces the measured validation loss of an epoch (tests script it).
  std::function<double(int epoch, double measured)> validation_override;
  std::function<void(const EpochRecord &)> on_epoch;
  std::function<void(const StepRecord &)> on_step;
};

struct TrainResult {
  EncoderParams params;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  long cpc_evaluations = 0;  // cpc_loss calls made while training
};

struct UtteranceLoss {
  double huc = 0.0;
  double cpc = 0.0;  // 0 when lambda is 0 (not evaluated)
  double total = 0.0;
  ParamGrads grads;  // of total, w.r.t. every parameter
};

/// CPC loss of one utterance (negatives from cpc.seed) and its gradient.
UtteranceLoss cpc_utterance_loss(const EncoderParams &params,
                                 const Vector &samples, const CpcConfig &cpc);

/// huc + lambda * cpc for one utterance, where huc is the cross-entropy of
/// the logits layer on the mean-normalized context vectors. The CPC branch
/// is skipped when lambda is 0.
UtteranceLoss huc_utterance_loss(const EncoderParams &params,
                                 const Vector &samples, const Labels &labels,
                                 double lambda, const CpcConfig &cpc);

/// Stops once `patience` consecutive epochs fail to improve on the best
/// validation loss seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Records one epoch; returns true when it is the new best.
  bool update(int epoch, double val_loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  int best_epoch_ = -1;
  double best_;
};

/// Seeded split: the validation set holds round(fraction * n) utterances
/// (at least one when n >= 2). Both lists are sorted.
void split_train_val(int n, double fraction, std::uint64_t seed,
                     std::vector<int> *train, std::vector<int> *val);

/// CPC pretraining from init_params(arch, seed) with Adam and early stopping.
TrainResult train_cpc(const Corpus &corpus, const EncoderArch &arch,
                      const CpcConfig &cpc, const TrainConfig &train,
                      const TrainHooks &hooks = {});

/// HUC training: cross-entropy of the logits layer on mean-normalized context
/// vectors against per-utterance pseudo-labels, plus lambda times the CPC loss
/// of the same model. With lambda = 0 the CPC loss is never computed.
TrainResult train_huc(const Corpus &corpus, const EncoderParams &init,
                      const std::vector<Labels> &labels,
                      const TrainConfig &train, const CpcConfig &cpc,
                      const TrainHooks &hooks = {});

/// Mean per-utterance CPC loss with the fixed evaluation negatives.
double evaluate_cpc(const Corpus &corpus, const std::vector<int> &utts,
                    const EncoderParams &params, const CpcConfig &cpc);

struct HucEval {
  double huc = 0.0;
  double cpc = 0.0;
  double total = 0.0;
  double accuracy = 0.0;  // frame-level argmax agreement with the labels
};

HucEval evaluate_huc(const Corpus &corpus, const std::vector<int> &utts,
                     const EncoderParams &params,
                     const std::vector<Labels> &labels, double lambda,
                     const CpcConfig &cpc);

}  // namespace huc

#endif  // HUC_TRAIN_HPP_
