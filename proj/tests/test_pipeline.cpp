// tests/test_pipeline.cpp

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

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "huc/pipeline.hpp"

using namespace huc;
namespace fs = std::filesystem;

namespace {

PipelineConfig quick_config() {
  PipelineConfig c;
  c.corpus.num_speakers = 3;
  c.corpus.utterances_per_speaker = 4;
  c.corpus.phones_per_utterance = 6;
  c.corpus.num_phonemes = 4;
  c.pretrain.epochs = 2;
  c.train.epochs = 2;
  c.k = 4;
  c.sampling.N = 2;
  c.sampling.M_grid = {2, 3, 4, 6};
  c.D = 8;
  c.boost.rounds = 4;
  c.eval.abx_triplets = 100;
  c.eval.bootstrap_resamples = 50;
  c.eval.probe_iters = 50;
  c.eval.ued_transforms = {"noise:0.3"};
  return c;
}

fs::path fresh_dir(const std::string &name) {
  const auto d = fs::temp_directory_path() /
                 ("huc_pipe_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string message_of(const std::function<void()> &f, ErrorCode *code = nullptr) {
  try {
    f();
  } catch (const Error &e) {
    if (code) *code = e.code();
    return e.what();
  }
  return "";
}

void run_until(const PipelineConfig &cfg, const fs::path &dir, const std::string &last) {
  for (const auto &s : stage_names()) {
    run_stage(cfg, dir, s);
    if (s == last) break;
  }
}

}  // namespace

TEST_CASE("an empty config file resolves to the defaults") {
  CHECK(config_to_json(parse_config_text("{}")) == config_to_json(PipelineConfig{}));
  CHECK(PipelineConfig{}.violations().empty());
}

TEST_CASE("config echo is stable") {
  const auto c = quick_config();
  const auto j = config_to_json(c);
  CHECK(config_to_json(parse_config(j)) == j);
  CHECK(config_hash(parse_config(j)) == config_hash(c));
  auto d = c;
  d.seed = 9;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("the shipped configs load") {
  CHECK_NOTHROW(load_config(fs::path(HUC_SOURCE_DIR) / "configs/desk.json"));
  const auto full = load_config(fs::path(HUC_SOURCE_DIR) / "configs/reference_full_scale.json");
  CHECK(full.D == 196);
  CHECK(full.k == 200);
  CHECK(full.sampling.N == 30);
  CHECK(full.train.lambda == 1e-4);
}

TEST_CASE("config validation names the offending fields") {
  ErrorCode code{};
  auto msg = message_of([] { parse_config_text(R"({"D": 33})"); }, &code);
  CHECK(code == ErrorCode::kInvalidConfig);
  CHECK(msg.find("D") != std::string::npos);
  CHECK(msg.find("hidden_dim") != std::string::npos);

  msg = message_of([] { parse_config_text(R"({"corpus": {"samples_per_frame": 10}})"); }, &code);
  CHECK(code == ErrorCode::kInvalidConfig);
  CHECK(msg.find("samples_per_frame") != std::string::npos);

  msg = message_of([] { parse_config_text(R"({"cpc": {"K": 4, "bogus": 1}})"); });
  CHECK(msg.find("unknown key cpc.bogus") != std::string::npos);

  msg = message_of([] { parse_config_text(R"({"k": "twelve"})"); }, &code);
  CHECK(code == ErrorCode::kInvalidConfig);

  msg = message_of([] { parse_config_text(R"({"D": 0, "k": 1, "sampling": {"mode": "sideways"}})"); });
  CHECK(msg.find("3 problem(s)") != std::string::npos);

  msg = message_of([] { parse_config_text("{ not json"); }, &code);
  CHECK(code == ErrorCode::kInvalidConfig);
}

TEST_CASE("a stage refuses to run before its inputs exist") {
  const auto dir = fresh_dir("missing");
  const auto cfg = quick_config();
  run_stage(cfg, dir, "gen-corpus");
  ErrorCode code{};
  const auto msg = message_of([&] { run_stage(cfg, dir, "extract"); }, &code);
  CHECK(code == ErrorCode::kMissingDependency);
  CHECK(msg.find("missing dependency: pretrain-cpc") != std::string::npos);
  CHECK_THROWS_AS(run_stage(cfg, dir, "no-such-stage"), Error);
  fs::remove_all(dir);
}

TEST_CASE("full run, cache hits, stale inputs and a partial report") {
  const auto dir = fresh_dir("full");
  auto cfg = quick_config();
  const auto first = run_all(cfg, dir);
  REQUIRE(first.size() == stage_names().size());
  for (const auto &o : first) CHECK_FALSE(o.cached);
  const auto report = slurp(dir / "report" / "report.json");
  const auto second = run_all(cfg, dir);
  for (std::size_t i = 0; i < second.size(); ++i) {
    CHECK(second[i].cached);
    CHECK(second[i].output_hash == first[i].output_hash);
  }
  CHECK(slurp(dir / "report" / "report.json") == report);

  const auto j = nlohmann::json::parse(report);
  for (const char *m : {"abx_within", "abx_across", "purity", "probe", "ued", "bootstrap"})
    CHECK(j["metrics"].contains(m));

  RunOptions force;
  force.force = true;
  CHECK_FALSE(run_stage(cfg, dir, "reduce", force).cached);

  // a changed pretraining budget leaves downstream stages stale
  cfg.pretrain.epochs = 1;
  ErrorCode code{};
  const auto msg = message_of([&] { run_stage(cfg, dir, "extract"); }, &code);
  CHECK(code == ErrorCode::kMissingDependency);
  CHECK(msg.find("pretrain-cpc") != std::string::npos);
  CHECK(msg.find("out of date") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report marks absent metric families as missing") {
  const auto dir = fresh_dir("partial");
  const auto cfg = quick_config();
  run_until(cfg, dir, "eval-abx");
  run_stage(cfg, dir, "report");
  const auto j = nlohmann::json::parse(slurp(dir / "report" / "report.json"));
  CHECK(j["metrics"]["ued"] == "missing");
  CHECK(j["metrics"]["abx_within"].is_object());
  CHECK(render_report_text(j).find("missing") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("farthest and nearest sampling both produce labels") {
  for (auto mode : {SamplingMode::kFarthest, SamplingMode::kNearest, SamplingMode::kRandom,
                    SamplingMode::kPoisson, SamplingMode::kNone}) {
    CAPTURE(sampling_mode_name(mode));
    const auto dir = fresh_dir(std::string(sampling_mode_name(mode)));
    auto cfg = quick_config();
    cfg.sampling.mode = mode;
    run_until(cfg, dir, "label");
    const auto plan = nlohmann::json::parse(slurp(dir / "sample" / "plan.json"));
    CHECK(plan["mode"] == sampling_mode_name(mode));
    CHECK(plan["selected_utterances"].size() >= 2);
    const auto &curve = plan["inertia_curve"];
    for (std::size_t i = 1; i < curve.size(); ++i)
      CHECK(curve[i][1].get<double>() <= curve[i - 1][1].get<double>());
    // sampling only narrows the k-means input; every utterance gets labels
    const auto labels = read_labels(dir / "cluster" / "labels.txt");
    CHECK(static_cast<int>(labels.size()) ==
          cfg.corpus.num_speakers * cfg.corpus.utterances_per_speaker);
    CHECK(fs::file_size(dir / "label" / "units.txt") > 0);
    fs::remove_all(dir);
  }
}

TEST_CASE("a run directory can only be locked once") {
  const auto dir = fresh_dir("lock");
  {
    RunLock a(dir);
    ErrorCode code{};
    message_of([&] { RunLock b(dir); }, &code);
    CHECK(code == ErrorCode::kLocked);
  }
  CHECK_NOTHROW(RunLock{dir});
  fs::remove_all(dir);
}

TEST_CASE("sha256 matches a known digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("command line exit codes") {
  const auto dir = fresh_dir("cli");
  const auto good = dir / "good.json", bad = dir / "bad.json";
  std::ofstream(good) << config_to_json(quick_config()).dump();
  std::ofstream(bad) << R"({"D": 999})";
  const std::string bin = HUC_LAB_BIN;
  auto run = [&](const std::string &args) {
    const int rc = std::system((bin + " " + args + " -q > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const std::string rd = " --run-dir " + (dir / "run").string();
  CHECK(run("") == 2);
  CHECK(run("gen-corpus --config " + bad.string() + rd) == 2);
  CHECK(run("gen-corpus --config " + (dir / "absent.json").string() + rd) == 2);
  CHECK(run("nonsense --config " + good.string() + rd) == 2);
  CHECK(run("gen-corpus --config " + good.string() + rd) == 0);
  CHECK(run("extract --config " + good.string() + rd) == 3);
  CHECK(run("gen-corpus --config " + good.string() + rd + " --seed 5") == 0);
  fs::remove_all(dir);
}
