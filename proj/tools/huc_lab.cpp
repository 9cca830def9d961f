// tools/huc_lab.cpp

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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "huc/pipeline.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitMissingDependency = 3;

int exit_code_for(huc::ErrorCode code) {
  switch (code) {
    case huc::ErrorCode::kInvalidConfig:
    case huc::ErrorCode::kInvalidArgument:
      return kExitValidation;
    case huc::ErrorCode::kMissingDependency:
      return kExitMissingDependency;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char **argv) {
  std::string stages_help = "stage to run:";
  for (const auto &s : huc::stage_names()) stages_help += " " + s;
  stages_help += " all";

  CLI::App app{"Hidden unit clustering laboratory"};
  std::string stage, config_path, run_dir;
  std::optional<std::uint64_t> seed;
  bool force = false, quiet = false;
  app.add_option("stage", stage, stages_help)->required();
  app.add_option("--config", config_path, "pipeline config (JSON)")
      ->required();
  app.add_option("--run-dir", run_dir, "directory holding stage artifacts")
      ->required();
  app.add_option("--seed", seed, "override the master seed");
  app.add_flag("--force", force, "recompute even if up to date");
  app.add_flag("-q,--quiet", quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    huc::PipelineConfig cfg = huc::load_config(config_path);
    if (seed) cfg.seed = *seed;
    huc::RunOptions opts;
    opts.force = force;
    opts.log = quiet ? nullptr : &std::cerr;

    huc::RunLock lock(run_dir);
    if (stage == "all")
      huc::run_all(cfg, run_dir, opts);
    else
      huc::run_stage(cfg, run_dir, stage, opts);
    if (stage == "all" || stage == "report")
      std::cout << huc::read_file(std::filesystem::path(run_dir) / "report" /
                                  "report.txt");
    return 0;
  } catch (const huc::Error &e) {
    std::cerr << "huc-lab: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    std::cerr << "huc-lab: " << e.what() << "\n";
    return kExitFailure;
  }
}
