// huc/corpus.hpp

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

#ifndef HUC_CORPUS_HPP_
#define HUC_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "huc/common.hpp"

namespace huc {

struct CorpusConfig {
  int num_speakers = 8;
  int num_phonemes = 6;
  int utterances_per_speaker = 12;
  int phones_per_utterance = 12;
  int frames_per_phone = 4;
  int samples_per_frame = 8;
  double speaker_strength = 3.0;
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  /// Returns one message per violated invariant; empty when valid.
  std::vector<std::string> violations() const;
};

/// One synthetic utterance. samples holds num_frames() * samples_per_frame
/// values; frame_phones[t] is the phone active in output frame t.
struct SignalSequence {
  std::string utterance_id;
  int speaker_id = 0;
  Vector samples;
  Labels frame_phones;

  int num_frames() const { return static_cast<int>(frame_phones.size()); }
};

using Corpus = std::vector<SignalSequence>;

/// Generative model, per sample r of frame t in an utterance of speaker s:
///   x[t*R + r] = phone_template[p_t][r] + alpha * speaker_template[s][r]
///                + noise_std * N(0, 1)
/// Templates are drawn from a seeded standard normal. Consecutive phones in
/// an utterance always differ, and every phone lasts frames_per_phone frames.
Corpus gen_corpus(const CorpusConfig &config);

enum class AbxMode { kWithin, kAcross };

std::string_view abx_mode_name(AbxMode mode);

struct SegmentRef {
  int utterance = 0;  // index into the corpus
  int frame_start = 0;
  int frame_len = 0;
  int center_phone = 0;
  int speaker_id = 0;
};

struct AbxTriplet {
  SegmentRef a, b, x;
};

struct TripletSet {
  AbxMode mode = AbxMode::kWithin;
  std::vector<AbxTriplet> items;
};

/// Triphone segments centred on every interior phone of every utterance.
std::vector<SegmentRef> triphone_segments(const Corpus &corpus,
                                          int frames_per_phone);

/// A and X carry the same phone triple, B differs from A only in its centre
/// phone. Within: all three from one speaker. Across: A and B share a speaker,
/// X comes from another. A is never the same segment as X. The full candidate
/// list is enumerated in a fixed order; when it exceeds max_triplets a seeded
/// subset is drawn without replacement.
TripletSet make_abx_triplets(const Corpus &corpus, int frames_per_phone,
                             AbxMode mode, std::size_t max_triplets,
                             std::uint64_t seed);

}  // namespace huc

#endif  // HUC_CORPUS_HPP_
