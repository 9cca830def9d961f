// src/eval.cpp

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

#include "huc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "huc/parallel.hpp"

namespace huc {

double angular_distance(const RowVector &a, const RowVector &b) {
  const double na = a.norm(), nb = b.norm();
  if (na * nb < kCosineEps) return 0.5;
  const RowVector ua = a / na, ub = b / nb;
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm()) /
         std::numbers::pi;
}

double dtw_angular(const FrameMatrix &a, const FrameMatrix &b) {
  const Eigen::Index n = a.rows(), m = b.rows();
  if (n == 0 || m == 0) fail(ErrorCode::kEmptyInput, "DTW of empty sequence");
  if (a.cols() != b.cols())
    fail(ErrorCode::kDimensionMismatch, "DTW feature dims differ");

  // (cost, length) compared lexicographically; both are additive along a
  // path so the dynamic programme finds the exact lexicographic optimum.
  struct Cell {
    double cost;
    long len;
  };
  auto less = [](const Cell &x, const Cell &y) {
    return x.cost < y.cost || (x.cost == y.cost && x.len < y.len);
  };
  std::vector<Cell> dp(static_cast<std::size_t>(n * m));
  auto at = [&](Eigen::Index i, Eigen::Index j) -> Cell & {
    return dp[static_cast<std::size_t>(i * m + j)];
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = angular_distance(a.row(i), b.row(j));
      if (i == 0 && j == 0) {
        at(i, j) = {d, 1};
        continue;
      }
      Cell best{std::numeric_limits<double>::infinity(), 0};
      if (i > 0 && j > 0 && less(at(i - 1, j - 1), best)) best = at(i - 1, j - 1);
      if (i > 0 && less(at(i - 1, j), best)) best = at(i - 1, j);
      if (j > 0 && less(at(i, j - 1), best)) best = at(i, j - 1);
      at(i, j) = {best.cost + d, best.len + 1};
    }
  }
  const Cell &end = at(n - 1, m - 1);
  return end.cost / static_cast<double>(end.len);
}

AbxReport abx_score(const TripletSet &triplets,
                    const std::vector<FrameMatrix> &features) {
  if (triplets.items.empty())
    fail(ErrorCode::kEmptyInput, "ABX triplet set is empty");
  auto segment = [&](const SegmentRef &s) -> FrameMatrix {
    if (s.utterance < 0 || s.utterance >= static_cast<int>(features.size()))
      fail(ErrorCode::kInvalidArgument, "segment utterance out of range");
    const auto &f = features[s.utterance];
    if (s.frame_len < 1 || s.frame_start < 0 ||
        s.frame_start + s.frame_len > f.rows())
      fail(ErrorCode::kInvalidArgument,
           "segment [" + std::to_string(s.frame_start) + ", +" +
               std::to_string(s.frame_len) + ") outside " +
               std::to_string(f.rows()) + " frames");
    return f.middleRows(s.frame_start, s.frame_len);
  };
  AbxReport rep;
  rep.mode = triplets.mode;
  rep.triplet_count = triplets.items.size();
  rep.per_triplet.assign(triplets.items.size(), 0.0);
  parallel_for(triplets.items.size(), [&](std::size_t i) {
    const auto &tr = triplets.items[i];
    const FrameMatrix a = segment(tr.a), b = segment(tr.b), x = segment(tr.x);
    const double dax = dtw_angular(a, x), dbx = dtw_angular(b, x);
    rep.per_triplet[i] = dax > dbx ? 1.0 : (dax == dbx ? 0.5 : 0.0);
  });
  double total = 0.0;
  for (double e : rep.per_triplet) total += e;
  rep.error_rate = total / static_cast<double>(rep.per_triplet.size());
  return rep;
}

double cluster_purity(const Labels &cluster_ids, const Labels &speaker_ids) {
  if (cluster_ids.size() != speaker_ids.size())
    fail(ErrorCode::kShapeMismatch, "cluster and speaker id counts differ");
  if (cluster_ids.empty()) fail(ErrorCode::kEmptyInput, "purity of nothing");
  std::map<int, std::map<int, long>> tally;
  for (std::size_t i = 0; i < cluster_ids.size(); ++i)
    ++tally[cluster_ids[i]][speaker_ids[i]];
  long dominant = 0;
  for (const auto &[cluster, speakers] : tally) {
    long best = 0;
    for (const auto &[spk, count] : speakers) best = std::max(best, count);
    dominant += best;
  }
  return static_cast<double>(dominant) /
         static_cast<double>(cluster_ids.size());
}

ProbeResult linear_probe(const FrameMatrix &x, const Labels &y,
                         const ProbeConfig &cfg) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n)
    fail(ErrorCode::kShapeMismatch, "probe label count");
  std::vector<int> classes = y;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2)
    fail(ErrorCode::kSingleClass, "linear probe needs >= 2 classes");
  if (n < 2) fail(ErrorCode::kEmptyInput, "linear probe needs >= 2 rows");
  if (!x.allFinite()) fail(ErrorCode::kNonFinite, "probe input");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::Index n_train = static_cast<Eigen::Index>(
      std::floor(cfg.train_fraction * static_cast<double>(n)));
  n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);
  const Eigen::Index n_test = n - n_train;

  const Eigen::Index F = x.cols();
  const Eigen::Index C = static_cast<Eigen::Index>(classes.size());
  auto class_of = [&](int label) {
    return static_cast<Eigen::Index>(
        std::lower_bound(classes.begin(), classes.end(), label) -
        classes.begin());
  };
  // Design matrices with a trailing constant column for the bias.
  FrameMatrix xtr(n_train, F + 1), xte(n_test, F + 1);
  FrameMatrix ytr = FrameMatrix::Zero(n_train, C);
  std::vector<Eigen::Index> yte(static_cast<std::size_t>(n_test));
  for (Eigen::Index i = 0; i < n_train; ++i) {
    xtr.row(i).head(F) = x.row(order[i]);
    ytr(i, class_of(y[order[i]])) = 1.0;
  }
  for (Eigen::Index i = 0; i < n_test; ++i) {
    xte.row(i).head(F) = x.row(order[n_train + i]);
    yte[i] = class_of(y[order[n_train + i]]);
  }
  const RowVector mean = xtr.leftCols(F).colwise().mean();
  RowVector sd = ((xtr.leftCols(F).rowwise() - mean).array().square()
                      .colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < F; ++j)
    if (!(sd(j) > 1e-12)) sd(j) = 1.0;
  xtr.leftCols(F) = ((xtr.leftCols(F).rowwise() - mean).array().rowwise() /
                     sd.array()).matrix();
  xte.leftCols(F) = ((xte.leftCols(F).rowwise() - mean).array().rowwise() /
                     sd.array()).matrix();
  xtr.col(F).setOnes();
  xte.col(F).setOnes();

  // The softmax cross-entropy Hessian is bounded by lambda_max(X^T X / n) / 2
  // (+ l2), so learning_rate = 1 steps by the inverse smoothness bound.
  const Eigen::MatrixXd gram =
      (xtr.transpose() * xtr) / static_cast<double>(n_train);
  const double lmax =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double step = cfg.learning_rate / (0.5 * lmax + cfg.l2);

  FrameMatrix w = FrameMatrix::Zero(F + 1, C);
  ProbeResult res;
  for (int it = 0; it < cfg.max_iters; ++it) {
    FrameMatrix logits = xtr * w;
    for (Eigen::Index i = 0; i < n_train; ++i) {
      const double mx = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    FrameMatrix grad = xtr.transpose() * (logits - ytr) /
                       static_cast<double>(n_train);
    grad.topRows(F) += cfg.l2 * w.topRows(F);
    res.iterations = it + 1;
    if (grad.cwiseAbs().maxCoeff() < cfg.tolerance) break;
    w -= step * grad;
  }
  const FrameMatrix scores = xte * w;
  long correct = 0;
  for (Eigen::Index i = 0; i < n_test; ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    if (arg == yte[i]) ++correct;
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(n_test);
  res.train_size = static_cast<std::size_t>(n_train);
  res.test_size = static_cast<std::size_t>(n_test);
  return res;
}

Labels dedup(const Labels &seq) {
  Labels out;
  for (int v : seq)
    if (out.empty() || out.back() != v) out.push_back(v);
  return out;
}

int levenshtein(const Labels &a, const Labels &b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string Transform::name() const {
  char buf[64];
  switch (kind) {
    case TransformKind::kIdentity: return "identity";
    case TransformKind::kFeatureNoise:
      std::snprintf(buf, sizeof(buf), "noise:%g", amount);
      return buf;
    case TransformKind::kFrameDropout:
      std::snprintf(buf, sizeof(buf), "dropout:%g", amount);
      return buf;
    case TransformKind::kGain:
      std::snprintf(buf, sizeof(buf), "gain:%g", amount);
      return buf;
  }
  return "unknown";
}

Transform Transform::parse(const std::string &spec) {
  if (spec == "identity") return {};
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    fail(ErrorCode::kInvalidConfig, "transform '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  double amount = 0.0;
  try {
    std::size_t used = 0;
    amount = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument(spec);
  } catch (const std::exception &) {
    fail(ErrorCode::kInvalidConfig, "transform amount in '" + spec + "'");
  }
  Transform t;
  t.amount = amount;
  if (kind == "noise" && amount >= 0.0) {
    t.kind = TransformKind::kFeatureNoise;
  } else if (kind == "dropout" && amount >= 0.0 && amount <= 1.0) {
    t.kind = TransformKind::kFrameDropout;
  } else if (kind == "gain" && amount > 0.0) {
    t.kind = TransformKind::kGain;
  } else {
    fail(ErrorCode::kInvalidConfig, "transform '" + spec + "'");
  }
  return t;
}

Vector apply_transform(const Transform &t, const Vector &samples,
                       int samples_per_frame, std::uint64_t seed) {
  Vector out = samples;
  std::mt19937_64 rng(seed);
  switch (t.kind) {
    case TransformKind::kIdentity:
      break;
    case TransformKind::kFeatureNoise: {
      if (t.amount == 0.0) break;
      std::normal_distribution<double> noise(0.0, t.amount);
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += noise(rng);
      break;
    }
    case TransformKind::kFrameDropout: {
      if (samples_per_frame < 1)
        fail(ErrorCode::kInvalidArgument, "samples_per_frame must be >= 1");
      std::bernoulli_distribution drop(t.amount);
      for (Eigen::Index s = 0; s < out.size(); s += samples_per_frame)
        if (drop(rng))
          out.segment(s, std::min<Eigen::Index>(samples_per_frame,
                                                out.size() - s))
              .setZero();
      break;
    }
    case TransformKind::kGain:
      if (t.amount != 1.0) out *= t.amount;
      break;
  }
  return out;
}

Labels unit_sequence(const EncoderParams &params, const Codebook &codebook,
                     const Vector &samples) {
  const Encoding enc = encode(params, samples);
  return dedup(assign_labels(mean_normalize(enc.c), codebook));
}

UedReport ued(const Corpus &corpus, const EncoderParams &params,
              const Codebook &codebook, const Transform &transform,
              int samples_per_frame, std::uint64_t seed) {
  if (corpus.empty()) fail(ErrorCode::kEmptyInput, "UED over empty corpus");
  UedReport rep;
  rep.transform = transform.name();
  rep.per_utterance.assign(corpus.size(), 0.0);
  parallel_for(corpus.size(), [&](std::size_t i) {
    const auto &x = corpus[i].samples;
    const Labels clean = unit_sequence(params, codebook, x);
    const Labels pert = unit_sequence(
        params, codebook,
        apply_transform(transform, x, samples_per_frame, derive_seed(seed, i)));
    rep.per_utterance[i] = 1000.0 * levenshtein(clean, pert) /
                           static_cast<double>(clean.size());
  });
  double total = 0.0;
  for (double v : rep.per_utterance) total += v;
  rep.ued = total / static_cast<double>(corpus.size());
  return rep;
}

std::vector<std::vector<int>> bootstrap_draws(int n, int resamples,
                                              std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::kEmptyInput, "bootstrap needs >= 1 utterance");
  if (resamples < 1)
    fail(ErrorCode::kInvalidArgument, "bootstrap needs >= 1 resample");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<std::vector<int>> draws(static_cast<std::size_t>(resamples));
  for (auto &d : draws) {
    d.resize(static_cast<std::size_t>(n));
    for (auto &i : d) i = pick(rng);
  }
  return draws;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "percentile of nothing");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapResult bootstrap_ci(const std::vector<double> &errors1,
                             const std::vector<double> &errors2,
                             int resamples, std::uint64_t seed) {
  if (errors1.size() != errors2.size())
    fail(ErrorCode::kShapeMismatch, "per-utterance error lists differ");
  const int n = static_cast<int>(errors1.size());
  const auto draws = bootstrap_draws(n, resamples, seed);
  std::vector<double> agg1, agg2, diff;
  long better = 0;
  for (const auto &d : draws) {
    double s1 = 0.0, s2 = 0.0;
    for (int i : d) {
      s1 += errors1[i];
      s2 += errors2[i];
    }
    s1 /= n;
    s2 /= n;
    agg1.push_back(s1);
    agg2.push_back(s2);
    diff.push_back(s1 - s2);
    if (s2 < s1) ++better;
  }
  BootstrapResult r;
  r.ci1_low = percentile(agg1, 2.5);
  r.ci1_high = percentile(agg1, 97.5);
  r.ci2_low = percentile(agg2, 2.5);
  r.ci2_high = percentile(agg2, 97.5);
  r.diff_low = percentile(diff, 2.5);
  r.diff_high = percentile(diff, 97.5);
  r.poi = static_cast<double>(better) / static_cast<double>(resamples);
  return r;
}

}  // namespace huc
