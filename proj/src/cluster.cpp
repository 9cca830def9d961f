// src/cluster.cpp

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

#include "huc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "huc/io.hpp"

namespace huc {

Labels nearest_centroids(const FrameMatrix &points,
                         const FrameMatrix &centroids,
                         std::vector<double> *sq_dist) {
  const Eigen::Index n = points.rows();
  if (n > 0 && points.cols() != centroids.cols())
    fail(ErrorCode::kDimensionMismatch,
         "points have " + std::to_string(points.cols()) +
             " dims, centroids " + std::to_string(centroids.cols()));
  if (n > 0 && centroids.rows() == 0)
    fail(ErrorCode::kEmptyInput, "codebook has no centroids");
  Labels out(static_cast<std::size_t>(n));
  if (sq_dist) sq_dist->assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = (points.row(i) - centroids.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    out[i] = best;
    if (sq_dist) (*sq_dist)[i] = best_d;
  }
  return out;
}

double inertia(const FrameMatrix &points, const FrameMatrix &centroids) {
  std::vector<double> sq;
  nearest_centroids(points, centroids, &sq);
  double total = 0.0;
  for (double d : sq) total += d;
  return total;
}

Codebook kmeans(const FrameMatrix &points, int k, int max_iters,
                std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (n < k)
    fail(ErrorCode::kInvalidArgument, std::to_string(n) +
                                          " points cannot form " +
                                          std::to_string(k) + " clusters");
  if (max_iters < 0)
    fail(ErrorCode::kInvalidArgument, "max_iters must be >= 0");
  if (!points.allFinite())
    fail(ErrorCode::kNonFinite, "k-means input contains NaN or Inf");

  std::mt19937_64 rng(seed);
  Codebook cb;
  cb.seed = seed;
  cb.centroids.resize(k, points.cols());

  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  std::vector<double> d2(static_cast<std::size_t>(n));
  Eigen::Index first =
      std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
  chosen[first] = 1;
  cb.centroids.row(0) = points.row(first);
  for (Eigen::Index i = 0; i < n; ++i)
    d2[i] = (points.row(i) - points.row(first)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double r =
          std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > r) break;
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = 1;
    cb.centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points.row(i) - points.row(pick)).squaredNorm());
  }

  Labels prev;
  std::vector<double> sq;
  int it = 0;
  for (;; ++it) {
    Labels labels = nearest_centroids(points, cb.centroids, &sq);
    double total = 0.0;
    for (double d : sq) total += d;
    cb.inertia_history.push_back(total);
    if (labels == prev || it == max_iters) break;
    prev = std::move(labels);

    FrameMatrix sums = FrameMatrix::Zero(k, points.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(prev[i]) += points.row(i);
      ++counts[prev[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        cb.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (sq[i] > sq[far]) far = i;
      cb.centroids.row(c) = points.row(far);
      sq[far] = 0.0;
    }
  }
  cb.iterations = it;
  return cb;
}

int knee_point(const std::vector<std::pair<int, double>> &curve) {
  if (curve.size() < 3)
    fail(ErrorCode::kInvalidArgument, "knee point needs >= 3 points");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].first <= curve[i - 1].first)
      fail(ErrorCode::kInvalidArgument, "k must be strictly increasing");
    if (curve[i].second > curve[i - 1].second)
      fail(ErrorCode::kInvalidArgument, "inertia must be non-increasing");
  }
  const double k0 = curve.front().first, k1 = curve.back().first;
  double ymin = curve.front().second, ymax = ymin;
  for (const auto &p : curve) {
    ymin = std::min(ymin, p.second);
    ymax = std::max(ymax, p.second);
  }
  if (!(ymax > ymin)) fail(ErrorCode::kNoKnee, "inertia curve is flat");
  auto nx = [&](double k) { return (k - k0) / (k1 - k0); };
  auto ny = [&](double v) { return (v - ymin) / (ymax - ymin); };
  const double y_first = ny(curve.front().second);
  const double y_last = ny(curve.back().second);
  int best_k = curve.front().first;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &p : curve) {
    const double x = nx(p.first);
    const double chord = y_first + (y_last - y_first) * x;
    const double gap = chord - ny(p.second);
    if (gap > best) {
      best = gap;
      best_k = p.first;
    }
  }
  if (best <= 1e-9) fail(ErrorCode::kNoKnee, "curve has no knee");
  return best_k;
}

namespace {

FrameMatrix pairwise_distances(const FrameMatrix &c) {
  const Eigen::Index k = c.rows();
  FrameMatrix d(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      d(i, j) = (c.row(i) - c.row(j)).norm();
  return d;
}

// farthest = true: seed with max pair, add argmax of min distance.
// farthest = false: seed with min pair, add argmin of max distance.
std::vector<int> greedy_select(const Codebook &codebook, int n,
                               bool farthest) {
  const int k = codebook.k();
  if (n < 1 || n > k)
    fail(ErrorCode::kInvalidArgument, "N = " + std::to_string(n) +
                                          " must lie in [1, " +
                                          std::to_string(k) + "]");
  if (k == 1) return {0};
  const FrameMatrix d = pairwise_distances(codebook.centroids);
  auto better = [farthest](double a, double b) {
    return farthest ? a > b : a < b;
  };
  int bi = 0, bj = 1;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (better(d(i, j), d(bi, bj))) {
        bi = i;
        bj = j;
      }
  std::vector<int> sel = {bi};
  if (n == 1) return sel;
  sel.push_back(bj);
  std::vector<char> in(static_cast<std::size_t>(k), 0);
  in[bi] = in[bj] = 1;
  while (static_cast<int>(sel.size()) < n) {
    int best = -1;
    double best_score = 0.0;
    for (int c = 0; c < k; ++c) {
      if (in[c]) continue;
      double score = d(c, sel[0]);
      for (int s : sel)
        score = farthest ? std::min(score, d(c, s)) : std::max(score, d(c, s));
      if (best < 0 || better(score, best_score)) {
        best = c;
        best_score = score;
      }
    }
    in[best] = 1;
    sel.push_back(best);
  }
  return sel;
}

double binomial(int k, int n) {
  double c = 1.0;
  for (int i = 1; i <= n; ++i) c = c * (k - n + i) / i;
  return c;
}

// Exhaustive search over all n-subsets in lexicographic order, scoring each
// by its minimum (farthest) or maximum (nearest) pairwise distance. The first
// optimal subset wins, so ties go to the lexicographically lowest ids.
std::vector<int> exact_select(const Codebook &codebook, int n, bool farthest) {
  const int k = codebook.k();
  const FrameMatrix d = pairwise_distances(codebook.centroids);
  std::vector<int> cur(static_cast<std::size_t>(n)), best;
  for (int i = 0; i < n; ++i) cur[i] = i;
  double best_score = 0.0;
  while (true) {
    double score = farthest ? std::numeric_limits<double>::infinity() : 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        score = farthest ? std::min(score, d(cur[a], cur[b]))
                         : std::max(score, d(cur[a], cur[b]));
    if (best.empty() || (farthest ? score > best_score : score < best_score)) {
      best = cur;
      best_score = score;
    }
    int i = n - 1;
    while (i >= 0 && cur[i] == k - n + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < n; ++j) cur[j] = cur[j - 1] + 1;
  }
  return best;
}

std::vector<int> select(const Codebook &codebook, int n, bool farthest) {
  const int k = codebook.k();
  if (n >= 2 && n <= k && binomial(k, n) <= kExactSelectionLimit)
    return exact_select(codebook, n, farthest);
  return greedy_select(codebook, n, farthest);
}

}  // namespace

std::vector<int> select_farthest(const Codebook &codebook, int n) {
  return select(codebook, n, true);
}

std::vector<int> select_nearest(const Codebook &codebook, int n) {
  return select(codebook, n, false);
}

std::vector<int> sample_utterances(const FrameMatrix &utterance_means,
                                   const Codebook &codebook,
                                   const std::vector<int> &selected) {
  if (codebook.k() == 0) fail(ErrorCode::kEmptyInput, "empty codebook");
  std::vector<char> keep(static_cast<std::size_t>(codebook.k()), 0);
  for (int s : selected) {
    if (s < 0 || s >= codebook.k())
      fail(ErrorCode::kInvalidArgument, "selected centroid id out of range");
    keep[s] = 1;
  }
  const Labels nearest = nearest_centroids(utterance_means, codebook.centroids);
  std::vector<int> out;
  for (std::size_t i = 0; i < nearest.size(); ++i)
    if (keep[nearest[i]]) out.push_back(static_cast<int>(i));
  return out;
}

Labels assign_labels(const FrameMatrix &chat, const Codebook &codebook) {
  if (chat.rows() == 0) return {};
  return nearest_centroids(chat, codebook.centroids);
}

std::string encode_codebook(const Codebook &cb) {
  if (!cb.centroids.allFinite())
    fail(ErrorCode::kNonFinite, "codebook contains NaN or Inf");
  ByteWriter w;
  w.put_bytes("HUCC");
  w.put_u16(kCodebookVersion);
  w.put_u32(static_cast<std::uint32_t>(cb.centroids.rows()));
  w.put_u32(static_cast<std::uint32_t>(cb.centroids.cols()));
  for (Eigen::Index i = 0; i < cb.centroids.size(); ++i)
    w.put_f64(cb.centroids.data()[i]);
  w.put_u64(cb.seed);
  return w.bytes();
}

Codebook decode_codebook(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic("HUCC");
  const auto version = r.get_u16();
  if (version != kCodebookVersion)
    fail(ErrorCode::kUnsupportedVersion,
         "codebook version " + std::to_string(version));
  const std::uint64_t k = r.get_u32(), f = r.get_u32();
  if (r.remaining() < k * f * 8 + 8)
    fail(ErrorCode::kTruncated, "codebook payload");
  if (r.remaining() > k * f * 8 + 8)
    fail(ErrorCode::kDimensionMismatch, "trailing bytes after codebook");
  Codebook cb;
  cb.centroids.resize(static_cast<Eigen::Index>(k),
                      static_cast<Eigen::Index>(f));
  for (Eigen::Index i = 0; i < cb.centroids.size(); ++i)
    cb.centroids.data()[i] = r.get_f64();
  cb.seed = r.get_u64();
  return cb;
}

void write_codebook(const std::filesystem::path &path, const Codebook &cb) {
  write_file(path, encode_codebook(cb));
}

Codebook read_codebook(const std::filesystem::path &path) {
  return decode_codebook(read_file(path));
}

}  // namespace huc
