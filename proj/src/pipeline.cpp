// src/pipeline.cpp

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

#include "huc/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>

#include "huc/cluster.hpp"
#include "huc/io.hpp"
#include "huc/parallel.hpp"

namespace huc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char *kRecordFile = "stage.json";

struct StageContext {
  const PipelineConfig &cfg;
  fs::path run_dir;
  fs::path dir;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::vector<std::string> logs;

  void put(const std::string &rel, const std::string &bytes) {
    write_file(dir / rel, bytes);
    outputs[rel] = sha256_hex(bytes);
  }
  void put_json(const std::string &rel, const json &j) {
    put(rel, j.dump(2) + "\n");
  }
  void put_log(const std::string &rel, const std::string &bytes) {
    write_file(dir / rel, bytes);
    logs.push_back(rel);
  }
};

struct StageDef {
  std::string name;
  std::vector<std::string> deps;
  std::vector<std::string> optional_deps;
  std::function<json(const PipelineConfig &)> params;
  std::function<void(StageContext &)> run;
};

json read_json(const fs::path &path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error &e) {
    fail(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Artifact access

Corpus load_corpus(const fs::path &run_dir) {
  const fs::path dir = run_dir / "gen-corpus";
  const json manifest = read_json(dir / "manifest.json");
  std::map<std::string, Labels> phones;
  for (auto &e : read_labels(dir / "phones.txt"))
    phones[e.utterance_id] = std::move(e.labels);
  Corpus corpus;
  for (const auto &u : manifest.at("utterances")) {
    SignalSequence s;
    s.utterance_id = u.at("id").get<std::string>();
    s.speaker_id = u.at("speaker").get<int>();
    const FrameMatrix m =
        read_features(dir / u.at("signal").get<std::string>());
    s.samples = Eigen::Map<const Vector>(m.data(), m.size());
    s.frame_phones = phones.at(s.utterance_id);
    corpus.push_back(std::move(s));
  }
  return corpus;
}

std::vector<FrameMatrix> load_set(const fs::path &run_dir,
                                  const std::string &stage,
                                  const std::string &sub,
                                  const Corpus &corpus) {
  std::vector<FrameMatrix> out(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    out[i] = read_features(run_dir / stage / sub /
                           (corpus[i].utterance_id + ".hucf"));
  });
  return out;
}

void put_set(StageContext &ctx, const std::string &sub, const Corpus &corpus,
             const std::vector<FrameMatrix> &set) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    ctx.put(sub + "/" + corpus[i].utterance_id + ".hucf",
            encode_features(set[i]));
}

FrameMatrix stack_rows(const std::vector<FrameMatrix> &parts,
                       const std::vector<int> &which) {
  Eigen::Index rows = 0;
  for (int i : which) rows += parts[i].rows();
  FrameMatrix out(rows, parts.empty() ? 0 : parts[which.front()].cols());
  Eigen::Index r = 0;
  for (int i : which) {
    out.middleRows(r, parts[i].rows()) = parts[i];
    r += parts[i].rows();
  }
  return out;
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

FrameMatrix utterance_means(const std::vector<FrameMatrix> &set) {
  FrameMatrix out(set.size(), set.empty() ? 0 : set.front().cols());
  for (std::size_t i = 0; i < set.size(); ++i) out.row(i) = utterance_mean(set[i]);
  return out;
}

std::vector<FrameMatrix> normalized(const std::vector<FrameMatrix> &set) {
  std::vector<FrameMatrix> out;
  out.reserve(set.size());
  for (const auto &m : set) out.push_back(mean_normalize(m));
  return out;
}

std::vector<int> selected_indices(const fs::path &run_dir) {
  return read_json(run_dir / "sample" / "plan.json")
      .at("selected_indices")
      .get<std::vector<int>>();
}

json history_json(const std::vector<EpochRecord> &history) {
  json out = json::array();
  for (const auto &r : history)
    out.push_back({{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss},
                   {"lr", r.lr}});
  return out;
}

std::string history_log(const std::vector<EpochRecord> &history) {
  std::string out;
  for (const auto &r : history)
    out += json({{"epoch", r.epoch},
                 {"train_loss", r.train_loss},
                 {"val_loss", r.val_loss},
                 {"lr", r.lr},
                 {"seconds", r.seconds}})
               .dump() +
           "\n";
  return out;
}

json bootstrap_json(const BootstrapResult &b) {
  return {{"model1_ci", {b.ci1_low, b.ci1_high}},
          {"model2_ci", {b.ci2_low, b.ci2_high}},
          {"difference_ci", {b.diff_low, b.diff_high}},
          {"poi", b.poi}};
}

// ---------------------------------------------------------------------------
// Stages

void stage_gen_corpus(StageContext &ctx) {
  const auto cc = corpus_config(ctx.cfg);
  const Corpus corpus = gen_corpus(cc);
  json utts = json::array();
  std::vector<LabelEntry> phones;
  for (const auto &s : corpus) {
    const std::string rel = "signals/" + s.utterance_id + ".hucf";
    const FrameMatrix m = Eigen::Map<const FrameMatrix>(
        s.samples.data(), s.num_frames(), cc.samples_per_frame);
    ctx.put(rel, encode_features(m));
    utts.push_back({{"id", s.utterance_id},
                    {"speaker", s.speaker_id},
                    {"frames", s.num_frames()},
                    {"signal", rel}});
    phones.push_back({s.utterance_id, s.frame_phones});
  }
  write_labels(ctx.dir / "phones.txt", phones);
  ctx.outputs["phones.txt"] = sha256_hex(read_file(ctx.dir / "phones.txt"));
  ctx.put_json("manifest.json",
               {{"num_speakers", cc.num_speakers},
                {"num_phonemes", cc.num_phonemes},
                {"frames_per_phone", cc.frames_per_phone},
                {"samples_per_frame", cc.samples_per_frame},
                {"utterances", utts}});
}

void stage_pretrain(StageContext &ctx) {
  const Corpus corpus = load_corpus(ctx.run_dir);
  TrainConfig tc = ctx.cfg.pretrain;
  tc.seed = stream_seed(ctx.cfg, SeedStream::kPretrain);
  const auto res =
      train_cpc(corpus, model_arch(ctx.cfg), cpc_config(ctx.cfg), tc);
  ctx.put("model.hucp", encode_checkpoint(res.params));
  ctx.put_json("history.json", {{"best_epoch", res.best_epoch},
                                {"epochs", history_json(res.history)}});
  ctx.put_log("train_log.jsonl", history_log(res.history));
}

std::vector<FrameMatrix> encode_all(const EncoderParams &params,
                                    const Corpus &corpus) {
  std::vector<FrameMatrix> c(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    c[i] = encode(params, corpus[i].samples).c;
  });
  return c;
}

void stage_extract(StageContext &ctx) {
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto params = read_checkpoint(ctx.run_dir / "pretrain-cpc" / "model.hucp");
  put_set(ctx, "c", corpus, encode_all(params, corpus));
}

void stage_sample(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const auto &sc = cfg.sampling;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const FrameMatrix mu =
      utterance_means(load_set(ctx.run_dir, "extract", "c", corpus));
  const std::uint64_t seed = stream_seed(cfg, SeedStream::kSampling);

  json plan = {{"mode", std::string(sampling_mode_name(sc.mode))},
               {"N", sc.N}};
  std::vector<int> selected;
  if (sc.mode == SamplingMode::kNone) {
    selected = all_indices(corpus.size());
    plan["M"] = nullptr;
    plan["inertia_curve"] = json::array();
    plan["raw_inertia"] = json::array();
    plan["selected_centroid_ids"] = json::array();
  } else {
    std::vector<std::pair<int, double>> curve;
    std::vector<double> raw;
    std::map<int, Codebook> books;
    for (int M : sc.M_grid) {
      Codebook cb = kmeans(mu, M, cfg.kmeans_iters, derive_seed(seed, M));
      raw.push_back(inertia(mu, cb.centroids));
      const double best = curve.empty() ? raw.back()
                                        : std::min(raw.back(), curve.back().second);
      curve.emplace_back(M, best);
      books.emplace(M, std::move(cb));
    }
    const int M = knee_point(curve);
    const Codebook &cb = books.at(M);
    ctx.put("speaker_codebook.hucc", encode_codebook(cb));
    std::vector<int> ids;
    std::mt19937_64 rng(derive_seed(seed, 0));
    switch (sc.mode) {
      case SamplingMode::kFarthest:
        ids = select_farthest(cb, sc.N);
        break;
      case SamplingMode::kNearest:
        ids = select_nearest(cb, sc.N);
        break;
      case SamplingMode::kRandom: {
        ids = all_indices(M);
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(sc.N);
        std::sort(ids.begin(), ids.end());
        break;
      }
      case SamplingMode::kPoisson:
      case SamplingMode::kNone:
        break;
    }
    if (sc.mode == SamplingMode::kPoisson) {
      std::bernoulli_distribution keep(static_cast<double>(sc.N) / M);
      for (std::size_t i = 0; i < corpus.size(); ++i)
        if (keep(rng)) selected.push_back(static_cast<int>(i));
    } else {
      selected = sample_utterances(mu, cb, ids);
    }
    plan["M"] = M;
    plan["inertia_curve"] = curve;
    plan["raw_inertia"] = raw;
    plan["selected_centroid_ids"] = ids;
  }
  if (selected.size() < 2)
    fail(ErrorCode::kInsufficientMaterial,
         "sampling kept " + std::to_string(selected.size()) +
             " utterance(s); at least 2 are needed");
  json names = json::array();
  for (int i : selected) names.push_back(corpus[i].utterance_id);
  plan["selected_indices"] = selected;
  plan["selected_utterances"] = names;
  ctx.put_json("plan.json", plan);
}

void stage_cluster(StageContext &ctx) {
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto chat =
      normalized(load_set(ctx.run_dir, "extract", "c", corpus));
  const auto sel = selected_indices(ctx.run_dir);
  const Codebook cb =
      kmeans(stack_rows(chat, sel), ctx.cfg.k, ctx.cfg.kmeans_iters,
             stream_seed(ctx.cfg, SeedStream::kCluster));
  ctx.put("codebook.hucc", encode_codebook(cb));
  std::vector<LabelEntry> labels;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    labels.push_back({corpus[i].utterance_id, assign_labels(chat[i], cb)});
  write_labels(ctx.dir / "labels.txt", labels);
  ctx.outputs["labels.txt"] = sha256_hex(read_file(ctx.dir / "labels.txt"));
}

void stage_train_huc(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto entries = read_labels(ctx.run_dir / "cluster" / "labels.txt");
  if (entries.size() != corpus.size())
    fail(ErrorCode::kShapeMismatch, "cluster labels do not cover the corpus");
  std::vector<Labels> labels;
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    if (entries[j].utterance_id != corpus[j].utterance_id)
      fail(ErrorCode::kShapeMismatch,
           "label file order differs at " + entries[j].utterance_id);
    labels.push_back(entries[j].labels);
  }
  TrainConfig tc = cfg.train;
  tc.seed = stream_seed(cfg, SeedStream::kHucTrain);
  json steps = json::array();
  TrainHooks hooks;
  hooks.on_step = [&steps](const StepRecord &r) {
    steps.push_back({{"epoch", r.epoch},
                     {"step", r.step},
                     {"huc", r.huc},
                     {"cpc", r.cpc},
                     {"total", r.total}});
  };
  const auto res = train_huc(
      corpus, init_params(model_arch(cfg), stream_seed(cfg, SeedStream::kHucInit)),
      labels, tc, cpc_config(cfg), hooks);
  ctx.put("model.hucp", encode_checkpoint(res.params));
  ctx.put_json("history.json", {{"best_epoch", res.best_epoch},
                                {"lambda", tc.lambda},
                                {"cpc_evaluations", res.cpc_evaluations},
                                {"epochs", history_json(res.history)},
                                {"steps", steps}});
  ctx.put_log("train_log.jsonl", history_log(res.history));
}

void stage_label(StageContext &ctx) {
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto params = read_checkpoint(ctx.run_dir / "train-huc" / "model.hucp");
  const auto c = encode_all(params, corpus);
  const auto chat = normalized(c);
  put_set(ctx, "c", corpus, c);
  put_set(ctx, "chat", corpus, chat);
  const Codebook cb =
      kmeans(stack_rows(chat, all_indices(corpus.size())), ctx.cfg.k,
             ctx.cfg.kmeans_iters, stream_seed(ctx.cfg, SeedStream::kLabel));
  ctx.put("codebook.hucc", encode_codebook(cb));
  std::vector<LabelEntry> units;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    units.push_back({corpus[i].utterance_id, assign_labels(chat[i], cb)});
  write_labels(ctx.dir / "units.txt", units);
  ctx.outputs["units.txt"] = sha256_hex(read_file(ctx.dir / "units.txt"));
}

void stage_reduce(StageContext &ctx) {
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto chat = load_set(ctx.run_dir, "label", "chat", corpus);
  Labels y;
  for (const auto &e : read_labels(ctx.run_dir / "label" / "units.txt"))
    y.insert(y.end(), e.labels.begin(), e.labels.end());
  BoostConfig bc = ctx.cfg.boost;
  bc.seed = stream_seed(ctx.cfg, SeedStream::kBoost);
  const Forest forest =
      train_gbdt(stack_rows(chat, all_indices(corpus.size())), y, bc);
  const auto ranking = feature_importance(forest);
  ctx.put_json("forest.json", forest_to_json(forest));
  ctx.put_json("ranking.json",
               {{"ranking", ranking},
                {"gains", feature_gains(forest)},
                {"D", ctx.cfg.D},
                {"kept", std::vector<int>(ranking.begin(),
                                          ranking.begin() + ctx.cfg.D)}});
}

std::vector<FrameMatrix> reduced_huc_features(const PipelineConfig &cfg,
                                              const fs::path &run_dir,
                                              const Corpus &corpus) {
  const auto ranking = read_json(run_dir / "reduce" / "ranking.json")
                           .at("ranking")
                           .get<std::vector<int>>();
  auto chat = load_set(run_dir, "label", "chat", corpus);
  for (auto &m : chat) m = project_top_d(m, ranking, cfg.D);
  return chat;
}

void stage_eval_abx(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const std::map<std::string, std::vector<FrameMatrix>> sets = {
      {"huc", reduced_huc_features(cfg, ctx.run_dir, corpus)},
      {"cpc", load_set(ctx.run_dir, "extract", "c", corpus)}};
  const std::uint64_t seed = stream_seed(cfg, SeedStream::kAbx);
  json summary, items;
  std::map<std::string, std::vector<double>> across;
  for (AbxMode mode : {AbxMode::kWithin, AbxMode::kAcross}) {
    const std::string name(abx_mode_name(mode));
    const auto triplets = make_abx_triplets(
        corpus, cfg.corpus.frames_per_phone, mode, cfg.eval.abx_triplets,
        derive_seed(seed, static_cast<std::uint64_t>(mode)));
    summary[name]["triplets"] = triplets.items.size();
    for (const auto &[model, features] : sets) {
      const auto rep = abx_score(triplets, features);
      summary[name][model] = rep.error_rate;
      items[name][model] = rep.per_triplet;
      if (mode == AbxMode::kAcross) across[model] = rep.per_triplet;
    }
  }
  summary["bootstrap_across"] = bootstrap_json(bootstrap_ci(
      across.at("cpc"), across.at("huc"), cfg.eval.bootstrap_resamples,
      derive_seed(stream_seed(cfg, SeedStream::kBootstrap), 0)));
  ctx.put_json("abx.json", summary);
  ctx.put_json("per_triplet.json", items);
}

void stage_eval_ued(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto cpc = read_checkpoint(ctx.run_dir / "pretrain-cpc" / "model.hucp");
  const auto huc = read_checkpoint(ctx.run_dir / "train-huc" / "model.hucp");
  const auto cpc_cb = read_codebook(ctx.run_dir / "cluster" / "codebook.hucc");
  const auto huc_cb = read_codebook(ctx.run_dir / "label" / "codebook.hucc");
  const std::uint64_t seed = stream_seed(cfg, SeedStream::kUed);
  json summary = json::array(), items = json::object();
  for (std::size_t i = 0; i < cfg.eval.ued_transforms.size(); ++i) {
    const Transform t = Transform::parse(cfg.eval.ued_transforms[i]);
    const std::uint64_t s = derive_seed(seed, i);
    const int spf = cfg.corpus.samples_per_frame;
    const auto r_cpc = ued(corpus, cpc, cpc_cb, t, spf, s);
    const auto r_huc = ued(corpus, huc, huc_cb, t, spf, s);
    const auto boot = bootstrap_ci(
        r_cpc.per_utterance, r_huc.per_utterance, cfg.eval.bootstrap_resamples,
        derive_seed(stream_seed(cfg, SeedStream::kBootstrap), 1 + i));
    summary.push_back({{"transform", t.name()},
                       {"cpc", r_cpc.ued},
                       {"huc", r_huc.ued},
                       {"bootstrap", bootstrap_json(boot)}});
    items[t.name()] = {{"cpc", r_cpc.per_utterance},
                       {"huc", r_huc.per_utterance}};
  }
  ctx.put_json("ued.json", summary);
  ctx.put_json("per_utterance.json", items);
}

void stage_eval_probe(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto cpc_c = load_set(ctx.run_dir, "extract", "c", corpus);
  const auto huc_c = load_set(ctx.run_dir, "label", "c", corpus);
  const std::map<std::string, std::vector<FrameMatrix>> sets = {
      {"cpc_c", cpc_c},
      {"cpc_chat", normalized(cpc_c)},
      {"huc_c", huc_c},
      {"huc_chat", normalized(huc_c)}};
  Labels phone, speaker;
  for (const auto &s : corpus) {
    phone.insert(phone.end(), s.frame_phones.begin(), s.frame_phones.end());
    speaker.insert(speaker.end(), s.frame_phones.size(), s.speaker_id);
  }
  ProbeConfig pc;
  pc.train_fraction = cfg.eval.probe_train_fraction;
  pc.max_iters = cfg.eval.probe_iters;
  pc.l2 = cfg.eval.probe_l2;
  pc.seed = stream_seed(cfg, SeedStream::kProbe);
  const auto all = all_indices(corpus.size());
  json out;
  for (const auto &[name, set] : sets) {
    const FrameMatrix x = stack_rows(set, all);
    out["phone"][name] = linear_probe(x, phone, pc).accuracy;
    out["speaker"][name] = linear_probe(x, speaker, pc).accuracy;
  }
  out["phone"]["chance"] = 1.0 / cfg.corpus.num_phonemes;
  out["speaker"]["chance"] = 1.0 / cfg.corpus.num_speakers;
  ctx.put_json("probe.json", out);
}

void stage_eval_purity(StageContext &ctx) {
  const auto &cfg = ctx.cfg;
  const Corpus corpus = load_corpus(ctx.run_dir);
  const auto cpc_c = load_set(ctx.run_dir, "extract", "c", corpus);
  const auto huc_c = load_set(ctx.run_dir, "label", "c", corpus);
  const std::map<std::string, std::vector<FrameMatrix>> sets = {
      {"cpc_c", cpc_c}, {"huc_c", huc_c}, {"huc_chat", normalized(huc_c)}};
  Labels speakers;
  for (const auto &s : corpus) speakers.push_back(s.speaker_id);
  const int clusters = cfg.corpus.num_speakers;
  json out = {{"clusters", clusters},
              {"ground_truth", cluster_purity(speakers, speakers)}};
  for (const auto &[name, set] : sets) {
    const FrameMatrix mu = utterance_means(set);
    const Codebook cb = kmeans(mu, clusters, cfg.kmeans_iters,
                               stream_seed(cfg, SeedStream::kPurity));
    out[name] = cluster_purity(nearest_centroids(mu, cb.centroids), speakers);
  }
  ctx.put_json("purity.json", out);
}

json build_report_from(const PipelineConfig &cfg, const fs::path &run_dir,
                       const std::map<std::string, bool> &available);

void stage_report(StageContext &ctx);

json stage_params(const PipelineConfig &cfg,
                  std::initializer_list<const char *> keys) {
  const json full = config_to_json(cfg);
  json out = json::object();
  for (const char *k : keys) {
    const std::string key(k);
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      out[key] = full.at(key);
    else
      out[key] = full.at(key.substr(0, dot)).at(key.substr(dot + 1));
  }
  return out;
}

const std::vector<StageDef> &stage_defs() {
  static const std::vector<StageDef> defs = {
      {"gen-corpus", {}, {},
       [](const PipelineConfig &c) { return stage_params(c, {"corpus"}); },
       stage_gen_corpus},
      {"pretrain-cpc", {"gen-corpus"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"arch", "cpc", "pretrain", "k"});
       },
       stage_pretrain},
      {"extract", {"gen-corpus", "pretrain-cpc"}, {},
       [](const PipelineConfig &) { return json::object(); }, stage_extract},
      {"sample", {"gen-corpus", "extract"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"sampling", "kmeans_iters"});
       },
       stage_sample},
      {"cluster", {"gen-corpus", "extract", "sample"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"k", "kmeans_iters"});
       },
       stage_cluster},
      {"train-huc", {"gen-corpus", "cluster"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"arch", "cpc", "train", "k"});
       },
       stage_train_huc},
      {"label", {"gen-corpus", "train-huc"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"k", "kmeans_iters"});
       },
       stage_label},
      {"reduce", {"gen-corpus", "label"}, {},
       [](const PipelineConfig &c) { return stage_params(c, {"boost", "D"}); },
       stage_reduce},
      {"eval-abx", {"gen-corpus", "extract", "label", "reduce"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"eval.abx_triplets",
                                 "eval.bootstrap_resamples", "D"});
       },
       stage_eval_abx},
      {"eval-ued", {"gen-corpus", "pretrain-cpc", "cluster", "train-huc",
                    "label"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"eval.ued_transforms",
                                 "eval.bootstrap_resamples"});
       },
       stage_eval_ued},
      {"eval-probe", {"gen-corpus", "extract", "label"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"eval.probe"});
       },
       stage_eval_probe},
      {"eval-purity", {"gen-corpus", "extract", "label"}, {},
       [](const PipelineConfig &c) {
         return stage_params(c, {"kmeans_iters"});
       },
       stage_eval_purity},
      {"report", {}, {"eval-abx", "eval-ued", "eval-probe", "eval-purity"},
       [](const PipelineConfig &) { return json::object(); }, stage_report},
  };
  return defs;
}

const StageDef &find_stage(const std::string &name) {
  for (const auto &d : stage_defs())
    if (d.name == name) return d;
  std::string known;
  for (const auto &d : stage_defs()) known += " " + d.name;
  fail(ErrorCode::kInvalidArgument,
       "unknown stage \"" + name + "\"; stages:" + known + " all");
}

// ---------------------------------------------------------------------------
// Records and caching

std::optional<json> read_record(const fs::path &run_dir,
                                const std::string &stage) {
  const fs::path p = run_dir / stage / kRecordFile;
  if (!fs::exists(p)) return std::nullopt;
  try {
    return json::parse(read_file(p));
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

bool outputs_intact(const fs::path &dir, const json &record) {
  for (const auto &[rel, hash] : record.at("outputs").items()) {
    const fs::path p = dir / rel;
    if (!fs::exists(p) || sha256_hex(read_file(p)) != hash.get<std::string>())
      return false;
  }
  return true;
}

class Graph {
 public:
  Graph(const PipelineConfig &cfg, fs::path run_dir)
      : cfg_(cfg), run_dir_(std::move(run_dir)) {}

  json upstream_of(const StageDef &def, bool strict) {
    json up = json::object();
    for (const auto &dep : def.deps) {
      auto h = current(dep);
      if (!h) {
        if (strict) {
          const bool stale = read_record(run_dir_, dep).has_value();
          fail(ErrorCode::kMissingDependency,
               "missing dependency: " + dep +
                   (stale ? " (out of date for this config; rerun it)" : ""));
        }
        return nullptr;
      }
      up[dep] = *h;
    }
    for (const auto &dep : def.optional_deps) {
      auto h = current(dep);
      up[dep] = h ? json(*h) : json("missing");
    }
    return up;
  }

  std::string key(const StageDef &def, const json &upstream) const {
    const json j = {{"stage", def.name},
                    {"params", def.params(cfg_)},
                    {"seed", cfg_.seed},
                    {"upstream", upstream}};
    return sha256_hex(j.dump());
  }

  // Output hash of a stage if its record is present, was made from the
  // current inputs and its files are unchanged.
  std::optional<std::string> current(const std::string &stage) {
    if (auto it = memo_.find(stage); it != memo_.end()) return it->second;
    std::optional<std::string> out;
    const auto &def = find_stage(stage);
    if (auto rec = read_record(run_dir_, stage)) {
      const json up = upstream_of(def, false);
      if (!up.is_null() && rec->value("key", "") == key(def, up) &&
          outputs_intact(run_dir_ / stage, *rec))
        out = rec->at("output_hash").get<std::string>();
    }
    memo_[stage] = out;
    return out;
  }

 private:
  const PipelineConfig &cfg_;
  fs::path run_dir_;
  std::map<std::string, std::optional<std::string>> memo_;
};

void stage_report(StageContext &ctx) {
  std::map<std::string, bool> available;
  Graph g(ctx.cfg, ctx.run_dir);
  for (const char *s : {"eval-abx", "eval-ued", "eval-probe", "eval-purity"})
    available[s] = g.current(s).has_value();
  const json report = build_report_from(ctx.cfg, ctx.run_dir, available);
  ctx.put("report.json", report.dump(2) + "\n");
  ctx.put("report.txt", render_report_text(report));
}

json family_or_missing(bool present, const std::function<json()> &fn) {
  return present ? fn() : json("missing");
}

json build_report_from(const PipelineConfig &cfg, const fs::path &run_dir,
                       const std::map<std::string, bool> &available) {
  const bool abx = available.at("eval-abx"), ued = available.at("eval-ued"),
             probe = available.at("eval-probe"),
             purity = available.at("eval-purity");
  json abx_j = abx ? read_json(run_dir / "eval-abx" / "abx.json") : json();
  json ued_j = ued ? read_json(run_dir / "eval-ued" / "ued.json") : json();
  json m;
  for (const char *mode : {"within", "across"}) {
    m[std::string("abx_") + mode] = family_or_missing(abx, [&] {
      return json{{"value",
                   {{"huc", abx_j.at(mode).at("huc")},
                    {"cpc", abx_j.at(mode).at("cpc")}}},
                  {"triplets", abx_j.at(mode).at("triplets")},
                  {"breakdown", "eval-abx/per_triplet.json"}};
    });
  }
  m["purity"] = family_or_missing(purity, [&] {
    const json p = read_json(run_dir / "eval-purity" / "purity.json");
    return json{{"value", p}, {"breakdown", "eval-purity/purity.json"}};
  });
  m["probe"] = family_or_missing(probe, [&] {
    const json p = read_json(run_dir / "eval-probe" / "probe.json");
    return json{{"value", p}, {"breakdown", "eval-probe/probe.json"}};
  });
  m["ued"] = family_or_missing(ued, [&] {
    json v = json::object();
    for (const auto &t : ued_j)
      v[t.at("transform").get<std::string>()] = {{"cpc", t.at("cpc")},
                                                 {"huc", t.at("huc")}};
    return json{{"value", v}, {"breakdown", "eval-ued/per_utterance.json"}};
  });
  m["bootstrap"] = family_or_missing(abx || ued, [&] {
    json v = json::object();
    v["abx_across"] =
        abx ? abx_j.at("bootstrap_across") : json("missing");
    if (ued) {
      for (const auto &t : ued_j)
        v["ued " + t.at("transform").get<std::string>()] = t.at("bootstrap");
    } else {
      v["ued"] = "missing";
    }
    return json{{"value", v}, {"model1", "cpc"}, {"model2", "huc"}};
  });
  return {{"config_hash", config_hash(cfg)},
          {"seed", cfg.seed},
          {"metrics", m}};
}

std::string fmt(double v, const char *spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string row(const std::string &label,
                const std::vector<std::string> &cells) {
  std::string out = "  " + pad(label, 24);
  for (const auto &c : cells) out += pad(c, 12);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out + "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(),
                 nullptr) != 1)
    fail(ErrorCode::kIo, "sha256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string config_hash(const PipelineConfig &cfg) {
  return sha256_hex(config_to_json(cfg).dump());
}

const std::vector<std::string> &stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto &d : stage_defs()) v.push_back(d.name);
    return v;
  }();
  return names;
}

StageOutcome run_stage(const PipelineConfig &cfg, const fs::path &run_dir,
                       const std::string &stage, const RunOptions &opts) {
  const StageDef &def = find_stage(stage);
  Graph graph(cfg, run_dir);
  const json upstream = graph.upstream_of(def, true);
  const std::string key = graph.key(def, upstream);
  const fs::path dir = run_dir / stage;

  StageOutcome outcome;
  outcome.stage = stage;
  if (!opts.force) {
    if (auto rec = read_record(run_dir, stage);
        rec && rec->value("key", "") == key && outputs_intact(dir, *rec)) {
      outcome.cached = true;
      outcome.output_hash = rec->at("output_hash").get<std::string>();
      if (opts.log) *opts.log << "[" << stage << "] up to date\n";
      return outcome;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(dir);
  fs::create_directories(dir);
  StageContext ctx{cfg, run_dir, dir, {}, {}};
  def.run(ctx);

  const json outputs(ctx.outputs);
  outcome.output_hash = sha256_hex(outputs.dump());
  const json record = {{"stage", stage},
                       {"key", key},
                       {"config_hash", config_hash(cfg)},
                       {"seed", cfg.seed},
                       {"upstream", upstream},
                       {"outputs", outputs},
                       {"output_hash", outcome.output_hash},
                       {"logs", ctx.logs}};
  write_file(dir / kRecordFile, record.dump(2) + "\n");
  if (opts.log) {
    const double s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    *opts.log << "[" << stage << "] done in " << fmt(s, "%.2f") << " s\n";
  }
  return outcome;
}

std::vector<StageOutcome> run_all(const PipelineConfig &cfg,
                                  const fs::path &run_dir,
                                  const RunOptions &opts) {
  std::vector<StageOutcome> out;
  for (const auto &s : stage_names()) out.push_back(run_stage(cfg, run_dir, s, opts));
  return out;
}

RunLock::RunLock(const fs::path &run_dir) : path_(run_dir / ".huc-lab.lock") {
  fs::create_directories(run_dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    fail(ErrorCode::kLocked, "run directory is in use (lock file " +
                                 path_.string() +
                                 "); delete it if no other run is active");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

json build_report(const PipelineConfig &cfg, const fs::path &run_dir) {
  std::map<std::string, bool> available;
  Graph g(cfg, run_dir);
  for (const char *s : {"eval-abx", "eval-ued", "eval-probe", "eval-purity"})
    available[s] = g.current(s).has_value();
  return build_report_from(cfg, run_dir, available);
}

std::string render_report_text(const json &report) {
  const json &m = report.at("metrics");
  std::string out = "huc-lab report\n";
  out += "config " + report.at("config_hash").get<std::string>() + "  seed " +
         std::to_string(report.at("seed").get<std::uint64_t>()) + "\n\n";

  out += "ABX error rate\n" + row("", {"huc", "cpc", "triplets"});
  for (const char *mode : {"within", "across"}) {
    const json &f = m.at(std::string("abx_") + mode);
    if (f.is_string())
      out += row(mode, {"missing"});
    else
      out += row(mode, {fmt(f.at("value").at("huc").get<double>()),
                        fmt(f.at("value").at("cpc").get<double>()),
                        std::to_string(f.at("triplets").get<int>())});
  }

  out += "\nSpeaker purity of utterance means\n";
  if (m.at("purity").is_string()) {
    out += row("", {"missing"});
  } else {
    const json &v = m.at("purity").at("value");
    for (const char *k : {"cpc_c", "huc_c", "huc_chat", "ground_truth"})
      out += row(k, {fmt(v.at(k).get<double>())});
  }

  out += "\nFrame probe accuracy\n";
  if (m.at("probe").is_string()) {
    out += row("", {"missing"});
  } else {
    const json &v = m.at("probe").at("value");
    out += row("", {"phone", "speaker"});
    for (const char *k : {"cpc_c", "cpc_chat", "huc_c", "huc_chat", "chance"})
      out += row(k, {fmt(v.at("phone").at(k).get<double>()),
                     fmt(v.at("speaker").at(k).get<double>())});
  }

  out += "\nUnit edit distance (x1000)\n";
  if (m.at("ued").is_string()) {
    out += row("", {"missing"});
  } else {
    out += row("", {"cpc", "huc"});
    for (const auto &[name, v] : m.at("ued").at("value").items())
      out += row(name, {fmt(v.at("cpc").get<double>(), "%.2f"),
                        fmt(v.at("huc").get<double>(), "%.2f")});
  }

  out += "\nBootstrap (model1 = cpc, model2 = huc)\n";
  if (m.at("bootstrap").is_string()) {
    out += row("", {"missing"});
  } else {
    out += row("", {"cpc lo", "cpc hi", "huc lo", "huc hi", "poi"});
    for (const auto &[name, v] : m.at("bootstrap").at("value").items()) {
      if (v.is_string()) {
        out += row(name, {"missing"});
        continue;
      }
      const auto &a = v.at("model1_ci"), &b = v.at("model2_ci");
      out += row(name, {fmt(a[0].get<double>()), fmt(a[1].get<double>()),
                        fmt(b[0].get<double>()), fmt(b[1].get<double>()),
                        fmt(v.at("poi").get<double>(), "%.3f")});
    }
  }
  return out;
}

}  // namespace huc
