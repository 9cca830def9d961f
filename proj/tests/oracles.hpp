// tests/oracles.hpp

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

// Brute-force reference implementations used only by the tests. They share
// no code with the library beyond the basic types.

#ifndef HUC_TESTS_ORACLES_HPP_
#define HUC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "huc/common.hpp"
#include "huc/corpus.hpp"

namespace oracle {

using huc::FrameMatrix;
using huc::Labels;

inline FrameMatrix random_matrix(int rows, int cols, std::uint64_t seed,
                                 double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  FrameMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline double sq_dist(const FrameMatrix &a, int i, const FrameMatrix &b,
                      int j) {
  double s = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

/// Column means by plain summation.
inline std::vector<double> column_means(const FrameMatrix &m) {
  std::vector<double> out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  for (auto &v : out) v /= static_cast<double>(m.rows());
  return out;
}

/// Index of the nearest row of `centroids` to row i of `points`; first wins.
inline int nearest(const FrameMatrix &points, int i,
                   const FrameMatrix &centroids) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int j = 0; j < centroids.rows(); ++j) {
    const double d = sq_dist(points, i, centroids, j);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return best;
}

/// Within-cluster sum of squares of a labelling (clusters by label value).
inline double partition_sse(const FrameMatrix &x, const Labels &labels) {
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i)
    groups[labels[i]].push_back(i);
  double sse = 0.0;
  for (const auto &[g, idx] : groups) {
    std::vector<double> mu(x.cols(), 0.0);
    for (int i : idx)
      for (int c = 0; c < x.cols(); ++c) mu[c] += x(i, c);
    for (auto &v : mu) v /= static_cast<double>(idx.size());
    for (int i : idx)
      for (int c = 0; c < x.cols(); ++c) sse += (x(i, c) - mu[c]) * (x(i, c) - mu[c]);
  }
  return sse;
}

/// Optimal 2-partition by trying every assignment; point 0 is always in
/// group 0 so each partition is seen once.
inline Labels best_two_partition(const FrameMatrix &x, double *best_sse) {
  const int n = static_cast<int>(x.rows());
  Labels best;
  double bs = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    Labels l(n, 0);
    for (int i = 1; i < n; ++i) l[i] = (mask >> (i - 1)) & 1u;
    if (std::count(l.begin(), l.end(), 1) == 0) continue;
    const double s = partition_sse(x, l);
    if (s < bs) {
      bs = s;
      best = l;
    }
  }
  if (best_sse) *best_sse = bs;
  return best;
}

/// True when two labellings induce the same partition.
inline bool same_partition(const Labels &a, const Labels &b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

inline std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

inline double min_pairwise(const FrameMatrix &c, const std::vector<int> &s) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      m = std::min(m, std::sqrt(sq_dist(c, s[i], c, s[j])));
  return m;
}

inline double max_pairwise(const FrameMatrix &c, const std::vector<int> &s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      m = std::max(m, std::sqrt(sq_dist(c, s[i], c, s[j])));
  return m;
}

/// Largest achievable minimum pairwise distance over all n-subsets.
inline double best_maxmin(const FrameMatrix &c, int n) {
  double best = -1.0;
  for (const auto &s : subsets(static_cast<int>(c.rows()), n))
    best = std::max(best, min_pairwise(c, s));
  return best;
}

/// Smallest achievable maximum pairwise distance over all n-subsets.
inline double best_minmax(const FrameMatrix &c, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &s : subsets(static_cast<int>(c.rows()), n))
    best = std::min(best, max_pairwise(c, s));
  return best;
}

inline double angle(const FrameMatrix &a, int i, const FrameMatrix &b, int j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    dot += a(i, c) * b(j, c);
    na += a(i, c) * a(i, c);
    nb += b(j, c) * b(j, c);
  }
  double cosine = dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
  cosine = std::max(-1.0, std::min(1.0, cosine));
  return std::acos(cosine) / std::numbers::pi;
}

/// Every monotone path from (0,0) to (n-1,m-1); the one with the least total
/// cost (then fewest steps) gives cost / length.
inline double dtw_by_paths(const FrameMatrix &a, const FrameMatrix &b,
                           long *path_count = nullptr) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.rows());
  double best_cost = std::numeric_limits<double>::infinity();
  int best_len = 0;
  long count = 0;
  std::function<void(int, int, double, int)> walk = [&](int i, int j,
                                                        double cost, int len) {
    cost += angle(a, i, b, j);
    ++len;
    if (i == n - 1 && j == m - 1) {
      ++count;
      if (cost < best_cost - 1e-15 ||
          (std::abs(cost - best_cost) <= 1e-15 && len < best_len)) {
        best_cost = cost;
        best_len = len;
      }
      return;
    }
    if (i + 1 < n) walk(i + 1, j, cost, len);
    if (j + 1 < m) walk(i, j + 1, cost, len);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, cost, len);
  };
  walk(0, 0, 0.0, 0);
  if (path_count) *path_count = count;
  return best_cost / best_len;
}

/// Full-table edit distance.
inline int edit_distance(const Labels &a, const Labels &b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[n][m];
}

/// Sorted-order percentile with linear interpolation between ranks.
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Size-weighted dominant-speaker share by counting.
inline double purity(const Labels &clusters, const Labels &speakers) {
  std::set<int> ids(clusters.begin(), clusters.end());
  long dominant = 0;
  for (int c : ids) {
    std::map<int, long> count;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      if (clusters[i] == c) ++count[speakers[i]];
    long best = 0;
    for (const auto &[s, n] : count) best = std::max(best, n);
    dominant += best;
  }
  return static_cast<double>(dominant) / static_cast<double>(clusters.size());
}

/// Counts ABX triplets by scanning every ordered (A, B, X) segment triple.
inline std::size_t count_triplets(const huc::Corpus &corpus, int fpp,
                                  huc::AbxMode mode) {
  struct Seg {
    int utt, start, spk, l, c, r;
  };
  std::vector<Seg> segs;
  for (int u = 0; u < static_cast<int>(corpus.size()); ++u) {
    const auto &p = corpus[u].frame_phones;
    const int phones = static_cast<int>(p.size()) / fpp;
    for (int k = 1; k + 1 < phones; ++k)
      segs.push_back({u, (k - 1) * fpp, corpus[u].speaker_id,
                      p[(k - 1) * fpp], p[k * fpp], p[(k + 1) * fpp]});
  }
  std::size_t n = 0;
  for (std::size_t a = 0; a < segs.size(); ++a)
    for (std::size_t b = 0; b < segs.size(); ++b)
      for (std::size_t x = 0; x < segs.size(); ++x) {
        const Seg &A = segs[a], &B = segs[b], &X = segs[x];
        if (x == a) continue;
        if (B.spk != A.spk || B.l != A.l || B.r != A.r || B.c == A.c) continue;
        if (X.l != A.l || X.c != A.c || X.r != A.r) continue;
        if ((mode == huc::AbxMode::kWithin) != (X.spk == A.spk)) continue;
        ++n;
      }
  return n;
}

/// Central differences of f at x along every coordinate.
inline huc::Vector central_diff(const std::function<double(const huc::Vector &)> &f,
                                huc::Vector x, double h = 1e-5) {
  huc::Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    const double up = f(x);
    x(i) = keep - h;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// Largest |a - b| / max(1, |b|) over the entries.
inline double max_rel_error(const huc::Vector &a, const huc::Vector &b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst,
                     std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
  return worst;
}

}  // namespace oracle

#endif  // HUC_TESTS_ORACLES_HPP_
