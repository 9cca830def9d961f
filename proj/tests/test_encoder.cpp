// tests/test_encoder.cpp

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

#include "doctest.h"
#include "fixtures.hpp"
#include "huc/encoder.hpp"
#include "huc/io.hpp"
#include "oracles.hpp"

using namespace huc;

namespace {

double inner(const FrameMatrix &a, const FrameMatrix &b) {
  return (a.array() * b.array()).sum();
}

UpstreamGrad random_upstream(const EncoderParams &p, const Vector &x,
                             std::uint64_t seed) {
  const auto e = encode(p, x);
  return {oracle::random_matrix(e.z.rows(), e.z.cols(), seed),
          oracle::random_matrix(e.c.rows(), e.c.cols(), seed + 1)};
}

double probe_loss(const EncoderParams &p, const Vector &x,
                  const UpstreamGrad &up) {
  const auto e = encode(p, x);
  return inner(up.dz, e.z) + inner(up.dc, e.c);
}

}  // namespace

TEST_CASE("init_params is deterministic and seed-sensitive") {
  const EncoderArch arch;
  const auto a = init_params(arch, 3), b = init_params(arch, 3),
             c = init_params(arch, 4);
  CHECK(encode_checkpoint(a) == encode_checkpoint(b));
  CHECK(encode_checkpoint(a) != encode_checkpoint(c));
}

TEST_CASE("init_params bounds and zero biases") {
  const EncoderArch arch;
  const auto p = init_params(arch, 9);
  const auto &L = *p.layout;
  int in = 1;
  for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
    const auto &s = arch.conv_layers[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.kernel * in));
    CHECK(p[L.conv_weight(static_cast<int>(l))].cwiseAbs().maxCoeff() <= bound);
    CHECK(p[L.conv_bias(static_cast<int>(l))].isZero(0.0));
    in = s.channels;
  }
  const double hb = 1.0 / std::sqrt(static_cast<double>(arch.hidden_dim));
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    CHECK(p[L.gru_wh(l)].cwiseAbs().maxCoeff() <= hb);
    CHECK(p[L.gru_bx(l)].isZero(0.0));
    CHECK(p[L.gru_bh(l)].isZero(0.0));
  }
  CHECK(p[L.logits_bias()].isZero(0.0));
  CHECK(p.values.allFinite());
}

TEST_CASE("invalid architectures are rejected") {
  EncoderArch a;
  a.hidden_dim = 0;
  CHECK_THROWS_AS(init_params(a, 0), Error);
  EncoderArch b;
  b.conv_layers[0].kernel = 1;  // below its stride of 2
  CHECK_FALSE(b.violations().empty());
  EncoderArch c;
  c.conv_layers.clear();
  CHECK_FALSE(c.violations().empty());
}

TEST_CASE("desk parameter count equals closed-form shape arithmetic") {
  const EncoderArch arch;
  // conv: C_out * K * C_in + C_out per layer
  const long conv = (16 * 4 * 1 + 16) + (16 * 4 * 16 + 16) + (16 * 2 * 16 + 16);
  // gru: 3H x I + 3H x H + 2 * 3H per layer
  const long gru = (96 * 16 + 96 * 32 + 2 * 96) + (96 * 32 + 96 * 32 + 2 * 96);
  const long heads = 4 * 16 * 32;
  const long logits = 12 * 32 + 12;
  CHECK(ParamLayout(arch).size() == conv + gru + heads + logits);
  CHECK(conv + gru + heads + logits == 15228);
  CHECK(ParamLayout(arch).trunk_size() == conv + gru);
}

TEST_CASE("slot layout follows declaration order") {
  const ParamLayout L(EncoderArch{});
  const auto &s = L.slots();
  CHECK(s.front().name == "conv0.weight");
  CHECK(s[1].name == "conv0.bias");
  CHECK(L.gru_wx(0).name == "gru0.wx");
  CHECK(L.head(0).name == "head1");
  CHECK(s.back().name == "logits.bias");
  for (std::size_t i = 1; i < s.size(); ++i)
    CHECK(s[i].offset == s[i - 1].offset + s[i - 1].size());
}

TEST_CASE("geometry of the desk and full-scale stacks") {
  const EncoderArch desk;
  CHECK(desk.total_stride() == 8);
  CHECK(desk.receptive_field() <= 2 * desk.total_stride());
  const auto full = full_scale_arch();
  CHECK(full.total_stride() == 160);
  CHECK(full.hidden_dim == 256);
  CHECK(full.num_units == 200);
}

TEST_CASE("zero signal with zero biases gives zero Z") {
  const auto p = init_params(EncoderArch{}, 1);
  const auto e = encode(p, Vector::Zero(48));
  CHECK(e.z.rows() == 6);
  CHECK(e.z.isZero(0.0));
  CHECK(e.c.isZero(0.0));
}

TEST_CASE("2R samples give exactly 2 rows") {
  const EncoderArch arch;
  const auto p = init_params(arch, 1);
  const auto e = encode(p, fixture::random_signal(2 * arch.total_stride(), 2));
  CHECK(e.z.rows() == 2);
  CHECK(e.c.rows() == 2);
  CHECK(e.c.cols() == arch.hidden_dim);
  CHECK(e.z.cols() == arch.feature_dim());
}

TEST_CASE("shape law: each layer maps L samples to floor(L / stride)") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto arch = fixture::random_tiny_arch(s);
    for (int len = 1; len < 40; ++len) {
      int expect = len;
      for (const auto &l : arch.conv_layers) expect /= l.stride;
      CHECK(output_frames(arch, len) == expect);
    }
  }
}

TEST_CASE("too-short signals are rejected") {
  const auto p = init_params(EncoderArch{}, 1);
  try {
    encode(p, Vector::Zero(7));
    FAIL("expected signal too short");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kSignalTooShort);
  }
}

TEST_CASE("causality: C rows before t ignore samples from frame t on") {
  const EncoderArch arch;
  const int R = arch.total_stride();
  const auto p = fixture::jittered_params(arch, 5);
  const Vector x = fixture::random_signal(10 * R, 6);
  const auto base = encode(p, x);
  for (int t = 0; t < 10; ++t) {
    Vector y = x;
    y.segment(t * R, R) += fixture::random_signal(R, 100 + t);
    const auto e = encode(p, y);
    if (t > 0) {
      CHECK(e.c.topRows(t) == base.c.topRows(t));
      CHECK(e.z.topRows(t) == base.z.topRows(t));
    }
    CHECK(e.c.row(t) != base.c.row(t));
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  const auto arch = fixture::random_tiny_arch(2);
  const auto p = fixture::jittered_params(arch, 2);
  const Vector x = fixture::random_signal(6 * arch.total_stride(), 3);
  const auto e = encode(p, x);
  const auto g = backward(p, x,
                          {FrameMatrix::Zero(e.z.rows(), e.z.cols()),
                           FrameMatrix::Zero(e.c.rows(), e.c.cols())});
  CHECK(g.values.isZero(0.0));
}

TEST_CASE("upstream shape mismatch is an error") {
  const auto p = init_params(EncoderArch{}, 1);
  const Vector x = Vector::Ones(32);
  try {
    backward(p, x, {FrameMatrix::Zero(3, 16), FrameMatrix::Zero(4, 32)});
    FAIL("expected shape mismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("encoder gradients match central finite differences") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    CAPTURE(s);
    const auto arch = fixture::random_tiny_arch(s);
    const auto p = fixture::jittered_params(arch, s);
    const int T = 3 + static_cast<int>(s % 3);
    const Vector x = fixture::random_signal(T * arch.total_stride(), s + 40);
    const auto up = random_upstream(p, x, s + 80);
    const auto g = backward(p, x, up);
    const Eigen::Index n = p.layout->trunk_size();
    auto f = [&](const Vector &v) {
      EncoderParams q = p;
      q.values.head(n) = v;
      return probe_loss(q, x, up);
    };
    const Vector fd = oracle::central_diff(f, p.values.head(n));
    CHECK(oracle::max_rel_error(g.values.head(n), fd) <= 1e-4);
    CHECK(g.values.tail(p.values.size() - n).isZero(0.0));
  }
}

TEST_CASE("backward is linear in the upstream and additive over utterances") {
  const auto arch = fixture::random_tiny_arch(7);
  const auto p = fixture::jittered_params(arch, 7);
  const Vector x1 = fixture::random_signal(5 * arch.total_stride(), 1);
  const Vector x2 = fixture::random_signal(4 * arch.total_stride(), 2);
  const auto u1 = random_upstream(p, x1, 3), u1b = random_upstream(p, x1, 5);
  const auto u2 = random_upstream(p, x2, 4);
  const UpstreamGrad sum{u1.dz + u1b.dz, u1.dc + u1b.dc};
  const Vector lin =
      backward(p, x1, u1).values + backward(p, x1, u1b).values;
  CHECK((backward(p, x1, sum).values - lin).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::Index n = p.layout->trunk_size();
  auto f = [&](const Vector &v) {
    EncoderParams q = p;
    q.values.head(n) = v;
    return probe_loss(q, x1, u1) + probe_loss(q, x2, u2);
  };
  const Vector both = backward(p, x1, u1).values + backward(p, x2, u2).values;
  CHECK(oracle::max_rel_error(both.head(n),
                              oracle::central_diff(f, p.values.head(n))) <=
        1e-4);
}

TEST_CASE("checkpoint roundtrip and validation") {
  const auto arch = fixture::random_tiny_arch(4);
  const auto p = fixture::jittered_params(arch, 4);
  const std::string bytes = encode_checkpoint(p);
  CHECK(bytes.substr(0, 4) == "HUCP");
  const auto q = decode_checkpoint(bytes);
  CHECK(q.arch == p.arch);
  CHECK(encode_checkpoint(q) == bytes);
  CHECK((q.values.array() == p.values.array()).all());

  auto code_of = [](const std::string &b) {
    try {
      decode_checkpoint(b);
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  std::string bad = bytes;
  bad[1] = 'X';
  CHECK(code_of(bad) == ErrorCode::kBadMagic);
  CHECK(code_of(bytes.substr(0, bytes.size() - 1)) == ErrorCode::kTruncated);
  CHECK(code_of(bytes + "x") == ErrorCode::kDimensionMismatch);
  bad = bytes;
  bad[4] = 7;
  CHECK(code_of(bad) == ErrorCode::kUnsupportedVersion);
}
