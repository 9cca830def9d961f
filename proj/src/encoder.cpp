// src/encoder.cpp

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

#include "huc/encoder.hpp"

#include <cmath>
#include <random>

#include "huc/io.hpp"

namespace huc {

int EncoderArch::total_stride() const {
  int r = 1;
  for (const auto &l : conv_layers) r *= l.stride;
  return r;
}

int EncoderArch::receptive_field() const {
  int rf = 1, jump = 1;
  for (const auto &l : conv_layers) {
    rf += (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

std::vector<std::string> EncoderArch::violations() const {
  std::vector<std::string> out;
  if (conv_layers.empty()) out.push_back("arch.conv_layers must not be empty");
  for (std::size_t i = 0; i < conv_layers.size(); ++i) {
    const auto &l = conv_layers[i];
    const std::string at = "arch.conv_layers[" + std::to_string(i) + "]";
    if (l.stride < 1) out.push_back(at + ".stride must be >= 1");
    if (l.kernel < l.stride)
      out.push_back(at + ".kernel must be >= stride");
    if (l.channels < 1) out.push_back(at + ".channels must be >= 1");
  }
  if (recurrent_layers < 1) out.push_back("arch.recurrent_layers must be >= 1");
  if (hidden_dim < 1) out.push_back("arch.hidden_dim must be >= 1");
  if (activation != Activation::kElu) out.push_back("arch.activation unknown");
  if (prediction_steps < 1) out.push_back("arch.prediction_steps must be >= 1");
  if (num_units < 1) out.push_back("arch.num_units must be >= 1");
  return out;
}

EncoderArch full_scale_arch() {
  EncoderArch a;
  a.conv_layers = {{10, 5, 256}, {8, 4, 256}, {4, 2, 256}, {4, 2, 256},
                   {4, 2, 256}};
  a.recurrent_layers = 2;
  a.hidden_dim = 256;
  a.prediction_steps = 12;
  a.num_units = 200;
  return a;
}

ParamLayout::ParamLayout(const EncoderArch &arch) {
  auto problems = arch.violations();
  if (!problems.empty()) fail(ErrorCode::kInvalidConfig, problems.front());
  int in = 1;
  for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
    const auto &spec = arch.conv_layers[l];
    conv_.push_back(slots_.size());
    const std::string p = "conv" + std::to_string(l);
    add(p + ".weight", spec.channels, spec.kernel * in);
    add(p + ".bias", 1, spec.channels);
    in = spec.channels;
  }
  const int H = arch.hidden_dim;
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    gru_.push_back(slots_.size());
    const std::string p = "gru" + std::to_string(l);
    add(p + ".wx", 3 * H, in);
    add(p + ".wh", 3 * H, H);
    add(p + ".bx", 1, 3 * H);
    add(p + ".bh", 1, 3 * H);
    in = H;
  }
  head_ = slots_.size();
  for (int k = 0; k < arch.prediction_steps; ++k)
    add("head" + std::to_string(k + 1), arch.feature_dim(), H);
  logits_ = slots_.size();
  add("logits.weight", arch.num_units, H);
  add("logits.bias", 1, arch.num_units);
}

void ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  slots_.push_back({std::move(name), size_, rows, cols});
  size_ += rows * cols;
}

ParamGrads ParamGrads::zeros_like(const EncoderParams &p) {
  return {p.layout, Vector::Zero(p.values.size())};
}

ParamGrads &ParamGrads::operator+=(const ParamGrads &o) {
  if (o.values.size() != values.size())
    fail(ErrorCode::kShapeMismatch, "gradient sizes differ");
  values += o.values;
  return *this;
}

EncoderParams init_params(const EncoderArch &arch, std::uint64_t seed) {
  EncoderParams p;
  p.arch = arch;
  p.layout = std::make_shared<const ParamLayout>(arch);
  p.values = Vector::Zero(p.layout->size());
  std::mt19937_64 rng(seed);
  auto fill = [&](const Slot &s, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto m = p[s];
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  const auto &L = *p.layout;
  for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
    const auto &w = L.conv_weight(static_cast<int>(l));
    fill(w, static_cast<double>(w.cols));
  }
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    fill(L.gru_wx(l), arch.hidden_dim);
    fill(L.gru_wh(l), arch.hidden_dim);
  }
  for (int k = 0; k < arch.prediction_steps; ++k)
    fill(L.head(k), arch.hidden_dim);
  fill(L.logits_weight(), arch.hidden_dim);
  return p;
}

int output_frames(const EncoderArch &arch, Eigen::Index samples) {
  Eigen::Index len = samples;
  for (const auto &l : arch.conv_layers) {
    const Eigen::Index padded = len + (l.kernel - l.stride);
    len = padded < l.kernel ? 0 : (padded - l.kernel) / l.stride + 1;
  }
  return static_cast<int>(len);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void conv_forward(const ConvLayerSpec &spec, ConstMatrixView w,
                  ConstMatrixView b, const FrameMatrix &in, ConvTrace *tr) {
  const int K = spec.kernel, S = spec.stride, P = K - S;
  const int cin = static_cast<int>(in.cols());
  const Eigen::Index padded = in.rows() + P;
  const Eigen::Index lout = padded < K ? 0 : (padded - K) / S + 1;
  tr->in_len = static_cast<int>(in.rows());
  tr->cols.setZero(lout, static_cast<Eigen::Index>(K) * cin);
  for (Eigen::Index t = 0; t < lout; ++t) {
    for (int j = 0; j < K; ++j) {
      const Eigen::Index src = t * S - P + j;
      if (src < 0 || src >= in.rows()) continue;
      tr->cols.row(t).segment(static_cast<Eigen::Index>(j) * cin, cin) =
          in.row(src);
    }
  }
  tr->pre = tr->cols * w.transpose();
  tr->pre.rowwise() += b.row(0);
  tr->out = tr->pre.unaryExpr(
      [](double x) { return x > 0.0 ? x : std::expm1(x); });
}

void gru_forward(ConstMatrixView wx, ConstMatrixView wh, ConstMatrixView bx,
                 ConstMatrixView bh, const FrameMatrix &in, GruTrace *tr) {
  const Eigen::Index T = in.rows(), H = wh.cols();
  tr->input = in;
  FrameMatrix gx = in * wx.transpose();
  gx.rowwise() += bx.row(0);
  tr->r.resize(T, H);
  tr->u.resize(T, H);
  tr->n.resize(T, H);
  tr->gh_n.resize(T, H);
  tr->h.resize(T, H);
  Vector h = Vector::Zero(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector gh = wh * h + bh.row(0).transpose();
    for (Eigen::Index i = 0; i < H; ++i) {
      const double r = sigmoid(gx(t, i) + gh(i));
      const double u = sigmoid(gx(t, H + i) + gh(H + i));
      const double n = std::tanh(gx(t, 2 * H + i) + r * gh(2 * H + i));
      tr->r(t, i) = r;
      tr->u(t, i) = u;
      tr->n(t, i) = n;
      tr->gh_n(t, i) = gh(2 * H + i);
      h(i) = (1.0 - u) * n + u * h(i);
    }
    tr->h.row(t) = h.transpose();
  }
}

}  // namespace

EncoderTrace encode_traced(const EncoderParams &params, const Vector &samples) {
  const auto &arch = params.arch;
  const auto &L = *params.layout;
  if (output_frames(arch, samples.size()) < 1)
    fail(ErrorCode::kSignalTooShort,
         std::to_string(samples.size()) + " samples yield no frame (stride " +
             std::to_string(arch.total_stride()) + ")");
  EncoderTrace tr;
  tr.conv.resize(arch.conv_layers.size());
  FrameMatrix x = Eigen::Map<const FrameMatrix>(samples.data(),
                                                samples.size(), 1);
  for (std::size_t l = 0; l < arch.conv_layers.size(); ++l) {
    const int li = static_cast<int>(l);
    conv_forward(arch.conv_layers[l], params[L.conv_weight(li)],
                 params[L.conv_bias(li)], x, &tr.conv[l]);
    x = tr.conv[l].out;
  }
  tr.gru.resize(arch.recurrent_layers);
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    gru_forward(params[L.gru_wx(l)], params[L.gru_wh(l)], params[L.gru_bx(l)],
                params[L.gru_bh(l)], x, &tr.gru[l]);
    x = tr.gru[l].h;
  }
  return tr;
}

Encoding encode(const EncoderParams &params, const Vector &samples) {
  auto tr = encode_traced(params, samples);
  return {tr.z(), tr.c()};
}

ParamGrads backward(const EncoderParams &params, const EncoderTrace &trace,
                    const UpstreamGrad &upstream) {
  const auto &arch = params.arch;
  const auto &L = *params.layout;
  const auto &z = trace.z();
  const auto &c = trace.c();
  if (upstream.dz.rows() != z.rows() || upstream.dz.cols() != z.cols() ||
      upstream.dc.rows() != c.rows() || upstream.dc.cols() != c.cols())
    fail(ErrorCode::kShapeMismatch,
         "upstream gradient is " + std::to_string(upstream.dz.rows()) + "x" +
             std::to_string(upstream.dz.cols()) + " / " +
             std::to_string(upstream.dc.rows()) + "x" +
             std::to_string(upstream.dc.cols()) + ", outputs are " +
             std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
             " / " + std::to_string(c.rows()) + "x" +
             std::to_string(c.cols()));

  ParamGrads g = ParamGrads::zeros_like(params);
  const Eigen::Index H = arch.hidden_dim;

  FrameMatrix dh_out = upstream.dc;
  for (int l = arch.recurrent_layers - 1; l >= 0; --l) {
    const auto &tr = trace.gru[l];
    auto wx = params[L.gru_wx(l)];
    auto wh = params[L.gru_wh(l)];
    auto dwh = g[L.gru_wh(l)];
    auto dbh = g[L.gru_bh(l)];
    const Eigen::Index T = tr.h.rows();
    FrameMatrix dgx(T, 3 * H);
    Vector dh_next = Vector::Zero(H);
    Vector dgh(3 * H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      Vector dh = dh_out.row(t).transpose() + dh_next;
      Vector h_prev = t > 0 ? Vector(tr.h.row(t - 1).transpose())
                            : Vector(Vector::Zero(H));
      Vector dh_prev(H);
      for (Eigen::Index i = 0; i < H; ++i) {
        const double r = tr.r(t, i), u = tr.u(t, i), n = tr.n(t, i);
        const double dn = dh(i) * (1.0 - u);
        const double du = dh(i) * (h_prev(i) - n);
        const double dn_pre = dn * (1.0 - n * n);
        const double dr_pre = dn_pre * tr.gh_n(t, i) * r * (1.0 - r);
        const double du_pre = du * u * (1.0 - u);
        dgx(t, i) = dr_pre;
        dgx(t, H + i) = du_pre;
        dgx(t, 2 * H + i) = dn_pre;
        dgh(i) = dr_pre;
        dgh(H + i) = du_pre;
        dgh(2 * H + i) = dn_pre * r;
        dh_prev(i) = dh(i) * u;
      }
      dwh.noalias() += dgh * h_prev.transpose();
      dbh.row(0) += dgh.transpose();
      dh_prev.noalias() += wh.transpose() * dgh;
      dh_next = dh_prev;
    }
    g[L.gru_wx(l)].noalias() += dgx.transpose() * tr.input;
    g[L.gru_bx(l)].row(0) += dgx.colwise().sum();
    dh_out = dgx * wx;
  }

  FrameMatrix dout = dh_out + upstream.dz;
  for (int l = static_cast<int>(arch.conv_layers.size()) - 1; l >= 0; --l) {
    const auto &spec = arch.conv_layers[l];
    const auto &tr = trace.conv[l];
    FrameMatrix dpre(tr.pre.rows(), tr.pre.cols());
    for (Eigen::Index i = 0; i < dpre.size(); ++i) {
      const double x = tr.pre.data()[i];
      dpre.data()[i] = dout.data()[i] * (x > 0.0 ? 1.0 : std::exp(x));
    }
    g[L.conv_weight(l)].noalias() += dpre.transpose() * tr.cols;
    g[L.conv_bias(l)].row(0) += dpre.colwise().sum();
    if (l == 0) break;
    const FrameMatrix dcols = dpre * params[L.conv_weight(l)];
    const int K = spec.kernel, S = spec.stride, P = K - S;
    const Eigen::Index cin = tr.cols.cols() / K;
    FrameMatrix din = FrameMatrix::Zero(tr.in_len, cin);
    for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
      for (int j = 0; j < K; ++j) {
        const Eigen::Index src = t * S - P + j;
        if (src < 0 || src >= din.rows()) continue;
        din.row(src) += dcols.row(t).segment(j * cin, cin);
      }
    }
    dout = std::move(din);
  }
  return g;
}

ParamGrads backward(const EncoderParams &params, const Vector &samples,
                    const UpstreamGrad &upstream) {
  return backward(params, encode_traced(params, samples), upstream);
}

std::string encode_checkpoint(const EncoderParams &params) {
  if (!params.values.allFinite())
    fail(ErrorCode::kNonFinite, "parameters contain NaN or Inf");
  const auto &a = params.arch;
  ByteWriter w;
  w.put_bytes("HUCP");
  w.put_u16(kCheckpointVersion);
  w.put_u32(static_cast<std::uint32_t>(a.conv_layers.size()));
  for (const auto &l : a.conv_layers) {
    w.put_u32(static_cast<std::uint32_t>(l.kernel));
    w.put_u32(static_cast<std::uint32_t>(l.stride));
    w.put_u32(static_cast<std::uint32_t>(l.channels));
  }
  w.put_u32(static_cast<std::uint32_t>(a.recurrent_layers));
  w.put_u32(static_cast<std::uint32_t>(a.hidden_dim));
  w.put_u32(static_cast<std::uint32_t>(a.activation));
  w.put_u32(static_cast<std::uint32_t>(a.prediction_steps));
  w.put_u32(static_cast<std::uint32_t>(a.num_units));
  w.put_u64(static_cast<std::uint64_t>(params.values.size()));
  for (Eigen::Index i = 0; i < params.values.size(); ++i)
    w.put_f64(params.values[i]);
  return w.bytes();
}

EncoderParams decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic("HUCP");
  const auto version = r.get_u16();
  if (version != kCheckpointVersion)
    fail(ErrorCode::kUnsupportedVersion,
         "checkpoint version " + std::to_string(version));
  EncoderArch a;
  const auto nconv = r.get_u32();
  if (nconv > 64) fail(ErrorCode::kDimensionMismatch, "absurd conv count");
  a.conv_layers.resize(nconv);
  for (auto &l : a.conv_layers) {
    l.kernel = static_cast<int>(r.get_u32());
    l.stride = static_cast<int>(r.get_u32());
    l.channels = static_cast<int>(r.get_u32());
  }
  a.recurrent_layers = static_cast<int>(r.get_u32());
  a.hidden_dim = static_cast<int>(r.get_u32());
  a.activation = static_cast<Activation>(r.get_u32());
  a.prediction_steps = static_cast<int>(r.get_u32());
  a.num_units = static_cast<int>(r.get_u32());
  const auto count = r.get_u64();
  EncoderParams p;
  p.arch = a;
  p.layout = std::make_shared<const ParamLayout>(a);
  if (count != static_cast<std::uint64_t>(p.layout->size()))
    fail(ErrorCode::kDimensionMismatch,
         "checkpoint holds " + std::to_string(count) + " values, arch needs " +
             std::to_string(p.layout->size()));
  if (r.remaining() < count * 8)
    fail(ErrorCode::kTruncated, "checkpoint payload");
  p.values.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] = r.get_f64();
  if (r.remaining() != 0)
    fail(ErrorCode::kDimensionMismatch, "trailing bytes after checkpoint");
  return p;
}

void write_checkpoint(const std::filesystem::path &path,
                      const EncoderParams &params) {
  write_file(path, encode_checkpoint(params));
}

EncoderParams read_checkpoint(const std::filesystem::path &path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace huc
