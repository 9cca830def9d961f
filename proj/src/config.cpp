// src/config.cpp

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

#include "huc/config.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "huc/io.hpp"

namespace huc {

namespace {

using nlohmann::json;

// Typed reader over one JSON object. Remembers which keys were read so the
// rest can be reported as unknown.
class Section {
 public:
  Section(const json *j, std::string path, std::vector<std::string> *errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (j_ && !j_->is_object()) {
      errors_->push_back(where() + " must be an object");
      j_ = nullptr;
    }
  }

  ~Section() {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key()))
        errors_->push_back("unknown key " + at(it.key()));
  }

  Section child(const std::string &key) {
    seen_.insert(key);
    const json *c = nullptr;
    if (j_ && j_->contains(key)) c = &(*j_)[key];
    return Section(c, at(key), errors_);
  }

  void get(const std::string &key, int *out) {
    if (const json *v = find(key)) {
      if (v->is_number_integer())
        *out = v->get<int>();
      else
        type_error(key, "an integer");
    }
  }

  void get(const std::string &key, std::uint64_t *out) {
    if (const json *v = find(key)) {
      if (v->is_number_unsigned())
        *out = v->get<std::uint64_t>();
      else
        type_error(key, "a non-negative integer");
    }
  }

  void get(const std::string &key, double *out) {
    if (const json *v = find(key)) {
      if (v->is_number())
        *out = v->get<double>();
      else
        type_error(key, "a number");
    }
  }

  void get(const std::string &key, bool *out) {
    if (const json *v = find(key)) {
      if (v->is_boolean())
        *out = v->get<bool>();
      else
        type_error(key, "a boolean");
    }
  }

  void get(const std::string &key, std::string *out) {
    if (const json *v = find(key)) {
      if (v->is_string())
        *out = v->get<std::string>();
      else
        type_error(key, "a string");
    }
  }

  void get(const std::string &key, std::vector<int> *out) {
    if (const json *v = find(key)) {
      if (!v->is_array()) return type_error(key, "an array of integers");
      std::vector<int> vals;
      for (const auto &e : *v) {
        if (!e.is_number_integer()) return type_error(key, "an array of integers");
        vals.push_back(e.get<int>());
      }
      *out = vals;
    }
  }

  void get(const std::string &key, std::vector<std::string> *out) {
    if (const json *v = find(key)) {
      if (!v->is_array()) return type_error(key, "an array of strings");
      std::vector<std::string> vals;
      for (const auto &e : *v) {
        if (!e.is_string()) return type_error(key, "an array of strings");
        vals.push_back(e.get<std::string>());
      }
      *out = vals;
    }
  }

  const json *find(const std::string &key) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return nullptr;
    return &(*j_)[key];
  }

  std::string at(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  void type_error(const std::string &key, const char *what) {
    errors_->push_back(at(key) + " must be " + what);
  }

  const json *j_;
  std::string path_;
  std::vector<std::string> *errors_;
  std::set<std::string> seen_;
};

void read_conv_layers(Section &arch, std::vector<ConvLayerSpec> *out,
                      std::vector<std::string> *errors) {
  const json *v = arch.find("conv_layers");
  if (!v) return;
  if (!v->is_array()) {
    errors->push_back("arch.conv_layers must be an array");
    return;
  }
  std::vector<ConvLayerSpec> layers;
  for (std::size_t i = 0; i < v->size(); ++i) {
    ConvLayerSpec l;
    Section s(&(*v)[i], "arch.conv_layers[" + std::to_string(i) + "]", errors);
    s.get("kernel", &l.kernel);
    s.get("stride", &l.stride);
    s.get("channels", &l.channels);
    layers.push_back(l);
  }
  *out = layers;
}

void read_train(Section s, TrainConfig *t, bool with_lambda) {
  if (with_lambda) s.get("lambda", &t->lambda);
  s.get("epochs", &t->epochs);
  s.get("patience", &t->patience);
  s.get("learning_rate", &t->learning_rate);
  s.get("batch", &t->batch);
  s.get("validation_fraction", &t->validation_fraction);
}

std::optional<SamplingMode> parse_sampling_mode(const std::string &s) {
  for (auto m : {SamplingMode::kNone, SamplingMode::kRandom,
                 SamplingMode::kFarthest, SamplingMode::kNearest,
                 SamplingMode::kPoisson})
    if (sampling_mode_name(m) == s) return m;
  return std::nullopt;
}

json train_json(const TrainConfig &t, bool with_lambda) {
  json j = {{"epochs", t.epochs},
            {"patience", t.patience},
            {"learning_rate", t.learning_rate},
            {"batch", t.batch},
            {"validation_fraction", t.validation_fraction}};
  if (with_lambda) j["lambda"] = t.lambda;
  return j;
}

}  // namespace

std::string_view sampling_mode_name(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kNone: return "none";
    case SamplingMode::kRandom: return "random";
    case SamplingMode::kFarthest: return "farthest";
    case SamplingMode::kNearest: return "nearest";
    case SamplingMode::kPoisson: return "poisson";
  }
  return "?";
}

std::uint64_t stream_seed(const PipelineConfig &cfg, SeedStream stream) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

CorpusConfig corpus_config(const PipelineConfig &cfg) {
  CorpusConfig c = cfg.corpus;
  c.seed = stream_seed(cfg, SeedStream::kCorpus);
  return c;
}

CpcConfig cpc_config(const PipelineConfig &cfg) {
  CpcConfig c = cfg.cpc;
  c.seed = stream_seed(cfg, SeedStream::kCpcNegatives);
  return c;
}

EncoderArch model_arch(const PipelineConfig &cfg) {
  EncoderArch a = cfg.arch;
  a.prediction_steps = cfg.cpc.K;
  a.num_units = cfg.k;
  return a;
}

std::vector<std::string> PipelineConfig::violations() const {
  std::vector<std::string> out;
  auto append = [&out](const std::vector<std::string> &v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(corpus.violations());
  append(model_arch(*this).violations());
  append(cpc.violations());
  for (auto msg : pretrain.violations()) {
    if (msg.rfind("train.", 0) == 0) msg = "pre" + msg;
    out.push_back(msg);
  }
  append(train.violations());
  append(boost.violations());

  const auto arch = model_arch(*this);
  if (!arch.conv_layers.empty() &&
      corpus.samples_per_frame != arch.total_stride())
    out.push_back("corpus.samples_per_frame (" +
                  std::to_string(corpus.samples_per_frame) +
                  ") must equal the product of the arch strides (" +
                  std::to_string(arch.total_stride()) + ")");
  if (D < 1 || D > arch.hidden_dim)
    out.push_back("D (" + std::to_string(D) + ") must lie in [1, " +
                  "arch.hidden_dim = " + std::to_string(arch.hidden_dim) +
                  "]");
  if (k < 2) out.push_back("k must be >= 2");
  if (kmeans_iters < 1) out.push_back("kmeans_iters must be >= 1");
  const int frames = corpus.phones_per_utterance * corpus.frames_per_phone;
  if (frames <= cpc.K)
    out.push_back("utterances have " + std::to_string(frames) +
                  " frames, cpc.K = " + std::to_string(cpc.K) +
                  " needs more");
  if (corpus.phones_per_utterance < 3)
    out.push_back("corpus.phones_per_utterance must be >= 3 for triphones");

  const int utterances = corpus.num_speakers * corpus.utterances_per_speaker;
  if (sampling.N < 1) out.push_back("sampling.N must be >= 1");
  if (sampling.M_grid.size() < 3)
    out.push_back("sampling.M_grid needs at least 3 values");
  for (std::size_t i = 0; i < sampling.M_grid.size(); ++i) {
    if (sampling.M_grid[i] < 1)
      out.push_back("sampling.M_grid values must be >= 1");
    if (i > 0 && sampling.M_grid[i] <= sampling.M_grid[i - 1])
      out.push_back("sampling.M_grid must be strictly increasing");
  }
  if (!sampling.M_grid.empty()) {
    if (sampling.N > sampling.M_grid.front())
      out.push_back("sampling.N (" + std::to_string(sampling.N) +
                    ") exceeds the smallest sampling.M_grid value (" +
                    std::to_string(sampling.M_grid.front()) + ")");
    if (sampling.M_grid.back() > utterances)
      out.push_back("sampling.M_grid values must not exceed the " +
                    std::to_string(utterances) + " utterances");
  }

  if (eval.abx_triplets < 1) out.push_back("eval.abx_triplets must be >= 1");
  for (const auto &t : eval.ued_transforms) {
    try {
      Transform::parse(t);
    } catch (const Error &e) {
      out.push_back("eval.ued_transforms: " + std::string(e.what()));
    }
  }
  if (eval.probe_iters < 1) out.push_back("eval.probe.max_iters must be >= 1");
  if (!(eval.probe_l2 >= 0.0)) out.push_back("eval.probe.l2 must be >= 0");
  if (!(eval.probe_train_fraction > 0.0 && eval.probe_train_fraction < 1.0))
    out.push_back("eval.probe.train_fraction must lie in (0, 1)");
  if (eval.bootstrap_resamples < 1)
    out.push_back("eval.bootstrap_resamples must be >= 1");
  return out;
}

PipelineConfig parse_config(const json &j) {
  PipelineConfig cfg;
  std::vector<std::string> errors;
  {
    Section root(&j, "", &errors);
    root.get("seed", &cfg.seed);
    {
      Section s = root.child("corpus");
      auto &c = cfg.corpus;
      s.get("num_speakers", &c.num_speakers);
      s.get("num_phonemes", &c.num_phonemes);
      s.get("utterances_per_speaker", &c.utterances_per_speaker);
      s.get("phones_per_utterance", &c.phones_per_utterance);
      s.get("frames_per_phone", &c.frames_per_phone);
      s.get("samples_per_frame", &c.samples_per_frame);
      s.get("speaker_strength", &c.speaker_strength);
      s.get("noise_std", &c.noise_std);
    }
    {
      Section s = root.child("arch");
      read_conv_layers(s, &cfg.arch.conv_layers, &errors);
      s.get("recurrent_layers", &cfg.arch.recurrent_layers);
      s.get("hidden_dim", &cfg.arch.hidden_dim);
      std::string act = "elu";
      s.get("activation", &act);
      if (act != "elu")
        errors.push_back("arch.activation must be \"elu\", got \"" + act +
                         "\"");
    }
    {
      Section s = root.child("cpc");
      s.get("K", &cfg.cpc.K);
      s.get("num_negatives", &cfg.cpc.num_negatives);
      s.get("within_utterance", &cfg.cpc.within_utterance);
    }
    read_train(root.child("pretrain"), &cfg.pretrain, false);
    read_train(root.child("train"), &cfg.train, true);
    root.get("k", &cfg.k);
    root.get("kmeans_iters", &cfg.kmeans_iters);
    {
      Section s = root.child("sampling");
      std::string mode(sampling_mode_name(cfg.sampling.mode));
      s.get("mode", &mode);
      if (auto m = parse_sampling_mode(mode))
        cfg.sampling.mode = *m;
      else
        errors.push_back("sampling.mode must be one of none, random, "
                         "farthest, nearest, poisson; got \"" + mode + "\"");
      s.get("N", &cfg.sampling.N);
      s.get("M_grid", &cfg.sampling.M_grid);
    }
    root.get("D", &cfg.D);
    {
      Section s = root.child("boost");
      s.get("rounds", &cfg.boost.rounds);
      s.get("max_depth", &cfg.boost.max_depth);
      s.get("learning_rate", &cfg.boost.learning_rate);
      s.get("min_split_gain", &cfg.boost.min_split_gain);
      s.get("row_subsample", &cfg.boost.row_subsample);
    }
    {
      Section s = root.child("eval");
      s.get("abx_triplets", &cfg.eval.abx_triplets);
      s.get("ued_transforms", &cfg.eval.ued_transforms);
      s.get("bootstrap_resamples", &cfg.eval.bootstrap_resamples);
      Section p = s.child("probe");
      p.get("max_iters", &cfg.eval.probe_iters);
      p.get("l2", &cfg.eval.probe_l2);
      p.get("train_fraction", &cfg.eval.probe_train_fraction);
    }
  }
  for (auto &v : cfg.violations()) errors.push_back(std::move(v));
  if (!errors.empty()) {
    std::string msg;
    for (const auto &e : errors) msg += "\n  " + e;
    fail(ErrorCode::kInvalidConfig,
         std::to_string(errors.size()) + " problem(s):" + msg);
  }
  return cfg;
}

PipelineConfig parse_config_text(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    fail(ErrorCode::kInvalidConfig, std::string("config is not JSON: ") +
                                        e.what());
  }
  return parse_config(j);
}

PipelineConfig load_config(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::kInvalidConfig, "config file not found: " + path.string());
  return parse_config_text(read_file(path));
}

json config_to_json(const PipelineConfig &cfg) {
  json conv = json::array();
  for (const auto &l : cfg.arch.conv_layers)
    conv.push_back(
        {{"kernel", l.kernel}, {"stride", l.stride}, {"channels", l.channels}});
  const auto &c = cfg.corpus;
  return {
      {"seed", cfg.seed},
      {"corpus",
       {{"num_speakers", c.num_speakers},
        {"num_phonemes", c.num_phonemes},
        {"utterances_per_speaker", c.utterances_per_speaker},
        {"phones_per_utterance", c.phones_per_utterance},
        {"frames_per_phone", c.frames_per_phone},
        {"samples_per_frame", c.samples_per_frame},
        {"speaker_strength", c.speaker_strength},
        {"noise_std", c.noise_std}}},
      {"arch",
       {{"conv_layers", conv},
        {"recurrent_layers", cfg.arch.recurrent_layers},
        {"hidden_dim", cfg.arch.hidden_dim},
        {"activation", "elu"}}},
      {"cpc",
       {{"K", cfg.cpc.K},
        {"num_negatives", cfg.cpc.num_negatives},
        {"within_utterance", cfg.cpc.within_utterance}}},
      {"pretrain", train_json(cfg.pretrain, false)},
      {"train", train_json(cfg.train, true)},
      {"k", cfg.k},
      {"kmeans_iters", cfg.kmeans_iters},
      {"sampling",
       {{"mode", std::string(sampling_mode_name(cfg.sampling.mode))},
        {"N", cfg.sampling.N},
        {"M_grid", cfg.sampling.M_grid}}},
      {"D", cfg.D},
      {"boost",
       {{"rounds", cfg.boost.rounds},
        {"max_depth", cfg.boost.max_depth},
        {"learning_rate", cfg.boost.learning_rate},
        {"min_split_gain", cfg.boost.min_split_gain},
        {"row_subsample", cfg.boost.row_subsample}}},
      {"eval",
       {{"abx_triplets", cfg.eval.abx_triplets},
        {"ued_transforms", cfg.eval.ued_transforms},
        {"bootstrap_resamples", cfg.eval.bootstrap_resamples},
        {"probe",
         {{"max_iters", cfg.eval.probe_iters},
          {"l2", cfg.eval.probe_l2},
          {"train_fraction", cfg.eval.probe_train_fraction}}}}},
  };
}

}  // namespace huc
