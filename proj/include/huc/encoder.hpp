// huc/encoder.hpp

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

// Strided 1-D convolution stack followed by stacked gated recurrent layers.
//
// Convolution layer l (kernel K, stride S) left-pads its input with K - S
// zeros, so an input of length L yields floor(L / S) frames and output frame t
// only sees input positions < (t + 1) * S. The stack is therefore causal and a
// signal of T * R samples produces exactly T rows, R being the product of the
// strides. Every conv output goes through ELU (x for x > 0, e^x - 1 otherwise),
// so act(0) = 0.
//
// Recurrent layer (gate order r, u, n; sigma = logistic):
//   r_t = sigma(Wx_r x_t + bx_r + Wh_r h_{t-1} + bh_r)
//   u_t = sigma(Wx_u x_t + bx_u + Wh_u h_{t-1} + bh_u)
//   n_t = tanh(Wx_n x_t + bx_n + r_t * (Wh_n h_{t-1} + bh_n))
//   h_t = (1 - u_t) * n_t + u_t * h_{t-1},   h_0 = 0
// The context vector c_t is h_t of the top layer.
//
// Parameters live in one flat vector so the optimizer, the checkpoint format
// and gradient checks can treat them uniformly. Declaration order:
//   conv{l}.weight (C_out x K*C_in), conv{l}.bias (1 x C_out)   per conv layer
//   gru{l}.wx (3H x I), gru{l}.wh (3H x H), gru{l}.bx, gru{l}.bh (1 x 3H)
//   head{k} (F x H) for k = 1..K                   CPC prediction matrices
//   logits.weight (units x H), logits.bias (1 x units)
// Conv weight column j*C_in + c multiplies input channel c at kernel tap j.

#ifndef HUC_ENCODER_HPP_
#define HUC_ENCODER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "huc/common.hpp"

namespace huc {

enum class Activation : std::uint32_t { kElu = 1 };

struct ConvLayerSpec {
  int kernel = 1;
  int stride = 1;
  int channels = 1;
  bool operator==(const ConvLayerSpec &) const = default;
};

struct EncoderArch {
  std::vector<ConvLayerSpec> conv_layers = {{4, 2, 16}, {4, 2, 16}, {2, 2, 16}};
  int recurrent_layers = 2;
  int hidden_dim = 32;
  Activation activation = Activation::kElu;
  int prediction_steps = 4;  // number of CPC heads (K)
  int num_units = 12;        // logits width (k)

  bool operator==(const EncoderArch &) const = default;

  int total_stride() const;
  int receptive_field() const;
  int feature_dim() const { return conv_layers.back().channels; }
  std::vector<std::string> violations() const;
};

/// Reference full-scale geometry: kernels 10,8,4,4,4, strides 5,4,2,2,2,
/// 2 x 256 recurrent units, 200 units.
EncoderArch full_scale_arch();

struct Slot {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

class ParamLayout {
 public:
  explicit ParamLayout(const EncoderArch &arch);

  const std::vector<Slot> &slots() const { return slots_; }
  Eigen::Index size() const { return size_; }

  const Slot &conv_weight(int l) const { return slots_[conv_[l]]; }
  const Slot &conv_bias(int l) const { return slots_[conv_[l] + 1]; }
  const Slot &gru_wx(int l) const { return slots_[gru_[l]]; }
  const Slot &gru_wh(int l) const { return slots_[gru_[l] + 1]; }
  const Slot &gru_bx(int l) const { return slots_[gru_[l] + 2]; }
  const Slot &gru_bh(int l) const { return slots_[gru_[l] + 3]; }
  const Slot &head(int k) const { return slots_[head_ + k]; }
  const Slot &logits_weight() const { return slots_[logits_]; }
  const Slot &logits_bias() const { return slots_[logits_ + 1]; }

  /// Offsets of everything except the CPC heads and logits layer.
  Eigen::Index trunk_size() const { return slots_[head_].offset; }

 private:
  void add(std::string name, Eigen::Index rows, Eigen::Index cols);

  std::vector<Slot> slots_;
  std::vector<std::size_t> conv_, gru_;
  std::size_t head_ = 0, logits_ = 0;
  Eigen::Index size_ = 0;
};

using MatrixView = Eigen::Map<FrameMatrix>;
using ConstMatrixView = Eigen::Map<const FrameMatrix>;

inline MatrixView view(Vector &values, const Slot &s) {
  return MatrixView(values.data() + s.offset, s.rows, s.cols);
}
inline ConstMatrixView view(const Vector &values, const Slot &s) {
  return ConstMatrixView(values.data() + s.offset, s.rows, s.cols);
}

struct EncoderParams {
  EncoderArch arch;
  std::shared_ptr<const ParamLayout> layout;
  Vector values;

  ConstMatrixView operator[](const Slot &s) const { return view(values, s); }
  MatrixView operator[](const Slot &s) { return view(values, s); }
};

/// Gradient with the same layout as the parameters it belongs to.
struct ParamGrads {
  std::shared_ptr<const ParamLayout> layout;
  Vector values;

  static ParamGrads zeros_like(const EncoderParams &p);
  ConstMatrixView operator[](const Slot &s) const { return view(values, s); }
  MatrixView operator[](const Slot &s) { return view(values, s); }
  ParamGrads &operator+=(const ParamGrads &o);
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in = K*C_in for conv,
/// H for recurrent, CPC head and logits matrices; every bias starts at zero.
EncoderParams init_params(const EncoderArch &arch, std::uint64_t seed);

struct ConvTrace {
  int in_len = 0;
  FrameMatrix cols;  // im2col of the padded input, L_out x K*C_in
  FrameMatrix pre;   // before activation
  FrameMatrix out;
};

struct GruTrace {
  FrameMatrix input;
  FrameMatrix r, u, n, gh_n, h;
};

struct EncoderTrace {
  std::vector<ConvTrace> conv;
  std::vector<GruTrace> gru;

  const FrameMatrix &z() const { return conv.back().out; }
  const FrameMatrix &c() const { return gru.back().h; }
};

struct Encoding {
  FrameMatrix z;
  FrameMatrix c;
};

struct UpstreamGrad {
  FrameMatrix dz;
  FrameMatrix dc;
};

/// Rows of the conv stack for an input of `samples` samples.
int output_frames(const EncoderArch &arch, Eigen::Index samples);

EncoderTrace encode_traced(const EncoderParams &params, const Vector &samples);
Encoding encode(const EncoderParams &params, const Vector &samples);

/// Reverse-mode gradients of <dz, Z> + <dc, C> with respect to the conv and
/// recurrent parameters. CPC head and logits slots are left at zero; those
/// gradients come from the loss functions that own them.
ParamGrads backward(const EncoderParams &params, const EncoderTrace &trace,
                    const UpstreamGrad &upstream);
ParamGrads backward(const EncoderParams &params, const Vector &samples,
                    const UpstreamGrad &upstream);

// Checkpoint: "HUCP" | version u16 | conv count u32 | (kernel, stride,
// channels) u32 each | recurrent layers u32 | hidden u32 | activation u32 |
// prediction steps u32 | units u32 | value count u64 | values f64.
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string encode_checkpoint(const EncoderParams &params);
EncoderParams decode_checkpoint(std::string_view bytes);
void write_checkpoint(const std::filesystem::path &path,
                      const EncoderParams &params);
EncoderParams read_checkpoint(const std::filesystem::path &path);

}  // namespace huc

#endif  // HUC_ENCODER_HPP_
