// huc/config.hpp

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

#ifndef HUC_CONFIG_HPP_
#define HUC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "huc/corpus.hpp"
#include "huc/dimreduce.hpp"
#include "huc/encoder.hpp"
#include "huc/eval.hpp"
#include "huc/objective.hpp"
#include "huc/train.hpp"
#include "json.hpp"

namespace huc {

enum class SamplingMode { kNone, kRandom, kFarthest, kNearest, kPoisson };

std::string_view sampling_mode_name(SamplingMode mode);

struct SamplingConfig {
  SamplingMode mode = SamplingMode::kFarthest;
  int N = 3;
  std::vector<int> M_grid = {3, 4, 5, 6, 8, 10, 12, 16};
};

struct EvalConfig {
  int abx_triplets = 2000;
  std::vector<std::string> ued_transforms = {"noise:0.3", "dropout:0.1",
                                             "gain:2"};
  int probe_iters = 300;
  double probe_l2 = 1e-4;
  double probe_train_fraction = 0.8;
  int bootstrap_resamples = 1000;
};

/// Every sub-seed is derived from `seed`; the file carries no other seed.
struct PipelineConfig {
  std::uint64_t seed = 0;
  CorpusConfig corpus;
  EncoderArch arch;  // prediction_steps follows cpc.K, num_units follows k
  CpcConfig cpc;
  TrainConfig pretrain;
  TrainConfig train;
  int k = 12;
  int kmeans_iters = 100;
  SamplingConfig sampling;
  int D = 24;
  BoostConfig boost;
  EvalConfig eval;

  /// Every violated field or cross-field rule, one message each.
  std::vector<std::string> violations() const;
};

/// Seed streams handed to derive_seed(config.seed, stream).
enum class SeedStream : std::uint64_t {
  kCorpus = 1,
  kPretrain,
  kCpcNegatives,
  kSampling,
  kCluster,
  kHucInit,
  kHucTrain,
  kLabel,
  kBoost,
  kAbx,
  kProbe,
  kUed,
  kBootstrap,
  kPurity,
};

std::uint64_t stream_seed(const PipelineConfig &cfg, SeedStream stream);

/// The resolved settings with every seed filled in from the master seed.
CorpusConfig corpus_config(const PipelineConfig &cfg);
CpcConfig cpc_config(const PipelineConfig &cfg);
EncoderArch model_arch(const PipelineConfig &cfg);

/// Parses a JSON config. Missing keys take their defaults; unknown keys,
/// wrong types and violated invariants are all collected and reported
/// together as one kInvalidConfig error.
PipelineConfig parse_config(const nlohmann::json &j);
PipelineConfig parse_config_text(const std::string &text);
PipelineConfig load_config(const std::filesystem::path &path);

/// Full echo of the resolved config. Stable: keys are sorted.
nlohmann::json config_to_json(const PipelineConfig &cfg);

}  // namespace huc

#endif  // HUC_CONFIG_HPP_
