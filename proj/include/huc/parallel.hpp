// huc/parallel.hpp

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

#ifndef HUC_PARALLEL_HPP_
#define HUC_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace huc {

/// Worker cap: HUC_LAB_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. Each index is
/// handled exactly once; callers write results to slot i and reduce in index
/// order afterwards, so results do not depend on scheduling. The first
/// exception thrown by any fn is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

}  // namespace huc

#endif  // HUC_PARALLEL_HPP_
