// huc/pipeline.hpp

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

// Stage graph over a run directory. Each stage writes into <run-dir>/<stage>/
// and finishes by writing stage.json, which records the stage key (a hash of
// the stage name, the config sections it reads, the seed and the output
// hashes of its inputs), the hash of every output file and an aggregate
// output hash. A stage whose recorded key and outputs still match is skipped.

#ifndef HUC_PIPELINE_HPP_
#define HUC_PIPELINE_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "huc/config.hpp"
#include "huc/io.hpp"
#include "json.hpp"

namespace huc {

/// All stages in execution order.
const std::vector<std::string> &stage_names();

struct RunOptions {
  bool force = false;         // recompute even when up to date
  std::ostream *log = nullptr;  // progress lines; nullptr for silence
};

struct StageOutcome {
  std::string stage;
  bool cached = false;
  std::string output_hash;
};

/// Runs one stage. Fails with kMissingDependency naming the producing stage
/// when an input stage has not been run (or is stale for this config).
StageOutcome run_stage(const PipelineConfig &cfg,
                       const std::filesystem::path &run_dir,
                       const std::string &stage, const RunOptions &opts = {});

/// Runs every stage in order.
std::vector<StageOutcome> run_all(const PipelineConfig &cfg,
                                  const std::filesystem::path &run_dir,
                                  const RunOptions &opts = {});

/// Exclusive ownership of a run directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path &run_dir);
  ~RunLock();
  RunLock(const RunLock &) = delete;
  RunLock &operator=(const RunLock &) = delete;

 private:
  std::filesystem::path path_;
};

std::string sha256_hex(std::string_view bytes);

/// Hash of the canonical dump of the resolved config.
std::string config_hash(const PipelineConfig &cfg);

/// Collects whatever evaluation results exist; absent families are marked
/// "missing".
nlohmann::json build_report(const PipelineConfig &cfg,
                            const std::filesystem::path &run_dir);
std::string render_report_text(const nlohmann::json &report);

}  // namespace huc

#endif  // HUC_PIPELINE_HPP_
