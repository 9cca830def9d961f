// tests/fixtures.hpp

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

#ifndef HUC_TESTS_FIXTURES_HPP_
#define HUC_TESTS_FIXTURES_HPP_

#include <random>

#include "huc/encoder.hpp"
#include "huc/objective.hpp"

namespace fixture {

/// A small random architecture: 1-2 conv layers, 1-2 recurrent layers of
/// width 2-4, 1-2 prediction heads, 2-3 units.
inline huc::EncoderArch random_tiny_arch(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  huc::EncoderArch a;
  a.conv_layers.clear();
  const int nconv = pick(1, 2);
  for (int l = 0; l < nconv; ++l) {
    const int stride = pick(1, 2);
    a.conv_layers.push_back({stride + pick(0, 2), stride, pick(1, 3)});
  }
  a.recurrent_layers = pick(1, 2);
  a.hidden_dim = pick(2, 4);
  a.prediction_steps = pick(1, 2);
  a.num_units = pick(2, 3);
  return a;
}

/// init_params plus a Gaussian jitter so biases and activations leave zero.
inline huc::EncoderParams jittered_params(const huc::EncoderArch &arch,
                                          std::uint64_t seed,
                                          double jitter = 0.3) {
  auto p = huc::init_params(arch, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> n(0.0, jitter);
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values(i) += n(rng);
  return p;
}

inline huc::Vector random_signal(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  huc::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline huc::Labels random_labels(int n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, k - 1);
  huc::Labels l(n);
  for (auto &v : l) v = d(rng);
  return l;
}

/// 500 frames, 16 features: feature 0 decides the binary label by its sign,
/// features 1..15 are independent noise of the same scale.
inline void separable_dataset(std::uint64_t seed, huc::FrameMatrix *x,
                              huc::Labels *y, int rows = 500,
                              int features = 16) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  x->resize(rows, features);
  y->assign(static_cast<std::size_t>(rows), 0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < features; ++j) (*x)(i, j) = g(rng);
    (*y)[i] = (*x)(i, 0) > 0.0 ? 1 : 0;
  }
}

}  // namespace fixture

#endif  // HUC_TESTS_FIXTURES_HPP_
