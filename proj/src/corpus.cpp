// src/corpus.cpp

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

#include "huc/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

namespace huc {

std::vector<std::string> CorpusConfig::violations() const {
  std::vector<std::string> out;
  auto positive = [&out](const char *name, int v) {
    if (v < 1) out.push_back(std::string("corpus.") + name + " must be >= 1");
  };
  positive("num_speakers", num_speakers);
  positive("num_phonemes", num_phonemes);
  positive("utterances_per_speaker", utterances_per_speaker);
  positive("phones_per_utterance", phones_per_utterance);
  positive("frames_per_phone", frames_per_phone);
  positive("samples_per_frame", samples_per_frame);
  if (num_phonemes < 3)
    out.push_back("corpus.num_phonemes must be >= 3 (ABX needs distinct "
                  "centre phones)");
  if (!(speaker_strength >= 0.0))
    out.push_back("corpus.speaker_strength must be >= 0");
  if (!(noise_std >= 0.0)) out.push_back("corpus.noise_std must be >= 0");
  return out;
}

Corpus gen_corpus(const CorpusConfig &config) {
  auto problems = config.violations();
  if (!problems.empty()) fail(ErrorCode::kInvalidConfig, problems.front());

  const int R = config.samples_per_frame;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  FrameMatrix phone_templates(config.num_phonemes, R);
  for (Eigen::Index i = 0; i < phone_templates.size(); ++i)
    phone_templates.data()[i] = normal(rng);
  FrameMatrix speaker_templates(config.num_speakers, R);
  for (Eigen::Index i = 0; i < speaker_templates.size(); ++i)
    speaker_templates.data()[i] = normal(rng);

  const int T = config.phones_per_utterance * config.frames_per_phone;
  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(config.num_speakers) *
                 config.utterances_per_speaker);
  for (int s = 0; s < config.num_speakers; ++s) {
    for (int u = 0; u < config.utterances_per_speaker; ++u) {
      SignalSequence seq;
      char id[64];
      std::snprintf(id, sizeof(id), "spk%03d_utt%03d", s, u);
      seq.utterance_id = id;
      seq.speaker_id = s;
      seq.frame_phones.resize(T);
      seq.samples.resize(static_cast<Eigen::Index>(T) * R);

      int prev = -1;
      for (int p = 0; p < config.phones_per_utterance; ++p) {
        int phone;
        if (prev < 0) {
          phone = std::uniform_int_distribution<int>(
              0, config.num_phonemes - 1)(rng);
        } else {
          // uniform over the other num_phonemes - 1 phones
          phone = std::uniform_int_distribution<int>(
              0, config.num_phonemes - 2)(rng);
          if (phone >= prev) ++phone;
        }
        prev = phone;
        for (int f = 0; f < config.frames_per_phone; ++f) {
          const int t = p * config.frames_per_phone + f;
          seq.frame_phones[t] = phone;
          for (int r = 0; r < R; ++r) {
            seq.samples[static_cast<Eigen::Index>(t) * R + r] =
                phone_templates(phone, r) +
                config.speaker_strength * speaker_templates(s, r) +
                config.noise_std * normal(rng);
          }
        }
      }
      corpus.push_back(std::move(seq));
    }
  }
  return corpus;
}

std::string_view abx_mode_name(AbxMode mode) {
  return mode == AbxMode::kWithin ? "within" : "across";
}

std::vector<SegmentRef> triphone_segments(const Corpus &corpus,
                                          int frames_per_phone) {
  if (frames_per_phone < 1)
    fail(ErrorCode::kInvalidArgument, "frames_per_phone must be >= 1");
  std::vector<SegmentRef> segs;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const auto &seq = corpus[u];
    const int num_phones = seq.num_frames() / frames_per_phone;
    for (int p = 1; p + 1 < num_phones; ++p) {
      SegmentRef ref;
      ref.utterance = static_cast<int>(u);
      ref.frame_start = (p - 1) * frames_per_phone;
      ref.frame_len = 3 * frames_per_phone;
      ref.center_phone = seq.frame_phones[p * frames_per_phone];
      ref.speaker_id = seq.speaker_id;
      segs.push_back(ref);
    }
  }
  return segs;
}

TripletSet make_abx_triplets(const Corpus &corpus, int frames_per_phone,
                             AbxMode mode, std::size_t max_triplets,
                             std::uint64_t seed) {
  const auto segs = triphone_segments(corpus, frames_per_phone);
  auto phone_at = [&](const SegmentRef &s, int which) {
    return corpus[s.utterance]
        .frame_phones[s.frame_start + which * frames_per_phone];
  };

  // Index segments by (left, right) context so B candidates are cheap.
  using Context = std::pair<int, int>;
  std::map<Context, std::vector<int>> by_context;
  std::map<std::tuple<int, int, int>, std::vector<int>> by_triple;
  for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
    const int l = phone_at(segs[i], 0), c = phone_at(segs[i], 1),
              r = phone_at(segs[i], 2);
    by_context[{l, r}].push_back(i);
    by_triple[{l, c, r}].push_back(i);
  }

  std::vector<AbxTriplet> all;
  for (int ia = 0; ia < static_cast<int>(segs.size()); ++ia) {
    const auto &a = segs[ia];
    const int l = phone_at(a, 0), c = phone_at(a, 1), r = phone_at(a, 2);
    const auto &xs = by_triple[{l, c, r}];
    for (int ib : by_context[{l, r}]) {
      const auto &b = segs[ib];
      if (b.speaker_id != a.speaker_id || b.center_phone == a.center_phone)
        continue;
      for (int ix : xs) {
        if (ix == ia) continue;
        const auto &x = segs[ix];
        const bool same = x.speaker_id == a.speaker_id;
        if ((mode == AbxMode::kWithin) != same) continue;
        all.push_back({a, b, x});
      }
    }
  }
  if (all.empty())
    fail(ErrorCode::kInsufficientMaterial,
         std::string("no valid ") + std::string(abx_mode_name(mode)) +
             " triplet in corpus");

  TripletSet out;
  out.mode = mode;
  if (all.size() <= max_triplets) {
    out.items = std::move(all);
    return out;
  }
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_triplets; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(max_triplets);
  std::sort(order.begin(), order.end());
  out.items.reserve(max_triplets);
  for (auto i : order) out.items.push_back(all[i]);
  return out;
}

}  // namespace huc
