// tests/test_corpus.cpp

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

#include <filesystem>

#include "doctest.h"
#include "huc/corpus.hpp"
#include "huc/eval.hpp"
#include "huc/io.hpp"
#include "oracles.hpp"

using namespace huc;

namespace {

std::filesystem::path temp_path(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "huc_test_corpus";
  std::filesystem::create_directories(dir);
  return dir / name;
}

CorpusConfig tiny_config() {
  CorpusConfig c;
  c.num_speakers = 2;
  c.num_phonemes = 3;
  c.utterances_per_speaker = 3;
  c.phones_per_utterance = 5;
  c.frames_per_phone = 2;
  c.samples_per_frame = 4;
  c.seed = 11;
  return c;
}

void check_triplet(const Corpus &corpus, int fpp, const AbxTriplet &t,
                   AbxMode mode) {
  auto phone = [&](const SegmentRef &s, int k) {
    return corpus[s.utterance].frame_phones[s.frame_start + k * fpp];
  };
  CHECK(phone(t.a, 0) == phone(t.b, 0));
  CHECK(phone(t.a, 2) == phone(t.b, 2));
  CHECK(phone(t.a, 1) != phone(t.b, 1));
  for (int k = 0; k < 3; ++k) CHECK(phone(t.a, k) == phone(t.x, k));
  CHECK(t.a.speaker_id == t.b.speaker_id);
  if (mode == AbxMode::kWithin)
    CHECK(t.x.speaker_id == t.a.speaker_id);
  else
    CHECK(t.x.speaker_id != t.a.speaker_id);
  CHECK_FALSE((t.a.utterance == t.x.utterance &&
               t.a.frame_start == t.x.frame_start));
}

}  // namespace

TEST_CASE("gen_corpus is deterministic for a seed") {
  CorpusConfig c;
  c.seed = 7;
  const auto a = gen_corpus(c), b = gen_corpus(c);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].utterance_id == b[i].utterance_id);
    CHECK(encode_features(a[i].samples.transpose()) ==
          encode_features(b[i].samples.transpose()));
    CHECK(a[i].frame_phones == b[i].frame_phones);
  }
  c.seed = 8;
  CHECK(encode_features(gen_corpus(c)[0].samples.transpose()) !=
        encode_features(a[0].samples.transpose()));
}

TEST_CASE("corpus shape and label alignment") {
  CorpusConfig c;
  const auto corpus = gen_corpus(c);
  CHECK(corpus.size() ==
        static_cast<std::size_t>(c.num_speakers * c.utterances_per_speaker));
  for (const auto &s : corpus) {
    CHECK(s.frame_phones.size() * c.samples_per_frame ==
          static_cast<std::size_t>(s.samples.size()));
    CHECK(s.num_frames() == c.phones_per_utterance * c.frames_per_phone);
    for (int p : s.frame_phones) {
      CHECK(p >= 0);
      CHECK(p < c.num_phonemes);
    }
    for (int t = c.frames_per_phone; t < s.num_frames();
         t += c.frames_per_phone)
      CHECK(s.frame_phones[t] != s.frame_phones[t - 1]);
  }
}

TEST_CASE("without speaker factor or noise, equal phones give equal samples") {
  CorpusConfig c;
  c.speaker_strength = 0.0;
  c.noise_std = 0.0;
  const auto corpus = gen_corpus(c);
  const int R = c.samples_per_frame;
  int compared = 0;
  for (const auto &u : corpus)
    for (const auto &v : corpus) {
      if (u.speaker_id == v.speaker_id) continue;
      for (int t = 0; t < u.num_frames(); ++t) {
        if (u.frame_phones[t] != v.frame_phones[t]) continue;
        CHECK(u.samples.segment(t * R, R) == v.samples.segment(t * R, R));
        ++compared;
      }
    }
  CHECK(compared > 0);
}

TEST_CASE("strong speaker factor is linearly decodable from raw frames") {
  CorpusConfig c;
  c.speaker_strength = 5.0;
  c.noise_std = 0.01;
  const auto corpus = gen_corpus(c);
  const int R = c.samples_per_frame;
  Eigen::Index rows = 0;
  for (const auto &s : corpus) rows += s.num_frames();
  FrameMatrix x(rows, R);
  Labels y;
  Eigen::Index r = 0;
  for (const auto &s : corpus)
    for (int t = 0; t < s.num_frames(); ++t) {
      x.row(r++) = s.samples.segment(t * R, R).transpose();
      y.push_back(s.speaker_id);
    }
  ProbeConfig pc;
  pc.seed = 3;
  const double acc = linear_probe(x, y, pc).accuracy;
  CHECK(acc > 1.0 / c.num_speakers);
}

TEST_CASE("corpus config validation") {
  CorpusConfig c;
  c.num_phonemes = 2;
  CHECK_FALSE(c.violations().empty());
  try {
    gen_corpus(c);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kInvalidConfig);
  }
  CorpusConfig d;
  d.num_speakers = 0;
  d.noise_std = -1.0;
  CHECK(d.violations().size() == 2);
  CHECK(CorpusConfig{}.violations().empty());
}

TEST_CASE("feature files roundtrip bit-exactly") {
  SUBCASE("random 13x4") {
    const FrameMatrix m = oracle::random_matrix(13, 4, 1);
    const auto p = temp_path("m.hucf");
    write_features(p, m);
    const FrameMatrix back = read_features(p);
    CHECK(back.rows() == 13);
    CHECK(back.cols() == 4);
    CHECK(encode_features(back) == encode_features(m));
    CHECK((back.array() == m.array()).all());
  }
  SUBCASE("0xF") {
    const FrameMatrix m(0, 5);
    const FrameMatrix back = decode_features(encode_features(m));
    CHECK(back.rows() == 0);
    CHECK(back.cols() == 5);
  }
  SUBCASE("special values survive") {
    FrameMatrix m(1, 3);
    m << -0.0, 1e-308, std::numeric_limits<double>::denorm_min();
    const FrameMatrix back = decode_features(encode_features(m));
    CHECK(std::signbit(back(0, 0)));
    CHECK(back(0, 2) == std::numeric_limits<double>::denorm_min());
  }
}

TEST_CASE("feature file header layout") {
  FrameMatrix m(2, 1);
  m << 1.0, 2.0;
  const std::string b = encode_features(m);
  CHECK(b.size() == 4 + 2 + 4 + 4 + 16);
  CHECK(b.substr(0, 4) == "HUCF");
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(static_cast<unsigned char>(b[6]) == 2);
  CHECK(static_cast<unsigned char>(b[10]) == 1);
}

TEST_CASE("feature file errors are distinct") {
  const std::string good = encode_features(oracle::random_matrix(3, 2, 2));
  auto code_of = [](const std::string &bytes) {
    try {
      decode_features(bytes);
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(code_of(bad_magic) == ErrorCode::kBadMagic);
  CHECK(code_of(good.substr(0, good.size() - 3)) == ErrorCode::kTruncated);
  CHECK(code_of(good.substr(0, 7)) == ErrorCode::kTruncated);
  CHECK(code_of(good + std::string(8, '\0')) == ErrorCode::kDimensionMismatch);
  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK(code_of(bad_version) == ErrorCode::kUnsupportedVersion);

  FrameMatrix nan(1, 1);
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(write_features(temp_path("nan.hucf"), nan), Error);
}

TEST_CASE("label files roundtrip") {
  const std::vector<LabelEntry> entries = {
      {"spk000_utt000", {1, 2, 3}}, {"spk001_utt004", {}}, {"x", {0}}};
  const auto p = temp_path("labels.txt");
  write_labels(p, entries);
  const auto back = read_labels(p);
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].utterance_id == entries[i].utterance_id);
    CHECK(back[i].labels == entries[i].labels);
  }
  CHECK(read_file(p).substr(0, 20) == "spk000_utt000\t1 2 3\n");
}

TEST_CASE("ABX triplets: one speaker has no across material") {
  CorpusConfig c = tiny_config();
  c.num_speakers = 1;
  const auto corpus = gen_corpus(c);
  try {
    make_abx_triplets(corpus, c.frames_per_phone, AbxMode::kAcross, 100, 1);
    FAIL("expected insufficient material");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kInsufficientMaterial);
  }
}

TEST_CASE("ABX triplets satisfy the set invariants") {
  CorpusConfig c;
  const auto corpus = gen_corpus(c);
  for (AbxMode mode : {AbxMode::kWithin, AbxMode::kAcross}) {
    const auto set =
        make_abx_triplets(corpus, c.frames_per_phone, mode, 500, 4);
    CHECK(set.mode == mode);
    CHECK(set.items.size() <= 500);
    CHECK(!set.items.empty());
    for (const auto &t : set.items) check_triplet(corpus, c.frames_per_phone, t, mode);
  }
}

TEST_CASE("ABX triplet count matches brute-force enumeration") {
  const CorpusConfig c = tiny_config();
  const auto corpus = gen_corpus(c);
  for (AbxMode mode : {AbxMode::kWithin, AbxMode::kAcross}) {
    const std::size_t expected =
        oracle::count_triplets(corpus, c.frames_per_phone, mode);
    REQUIRE(expected > 0);
    const auto all =
        make_abx_triplets(corpus, c.frames_per_phone, mode, 1'000'000, 5);
    CHECK(all.items.size() == expected);
    const std::size_t cap = std::max<std::size_t>(1, expected / 2);
    const auto capped =
        make_abx_triplets(corpus, c.frames_per_phone, mode, cap, 5);
    CHECK(capped.items.size() == std::min(cap, expected));
  }
}

TEST_CASE("ABX triplet sampling is deterministic given the seed") {
  CorpusConfig c;
  const auto corpus = gen_corpus(c);
  auto key = [](const TripletSet &s) {
    std::vector<std::array<int, 3>> k;
    for (const auto &t : s.items)
      k.push_back({t.a.utterance * 1000 + t.a.frame_start,
                   t.b.utterance * 1000 + t.b.frame_start,
                   t.x.utterance * 1000 + t.x.frame_start});
    return k;
  };
  const auto a = make_abx_triplets(corpus, 4, AbxMode::kAcross, 50, 9);
  const auto b = make_abx_triplets(corpus, 4, AbxMode::kAcross, 50, 9);
  const auto d = make_abx_triplets(corpus, 4, AbxMode::kAcross, 50, 10);
  CHECK(key(a) == key(b));
  CHECK(key(a) != key(d));
}
