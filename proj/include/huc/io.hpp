// huc/io.hpp

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

#ifndef HUC_IO_HPP_
#define HUC_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "huc/common.hpp"

namespace huc {

// Feature file layout (all integers and reals little-endian):
//   "HUCF" | version u16 | rows u32 | cols u32 | rows*cols f64, row-major
inline constexpr std::uint16_t kFeatureFileVersion = 1;

void write_features(const std::filesystem::path &path, const FrameMatrix &m);
FrameMatrix read_features(const std::filesystem::path &path);

std::string encode_features(const FrameMatrix &m);
FrameMatrix decode_features(std::string_view bytes);

/// Label file: UTF-8, one line per utterance, "<id>\t<int> <int> ...".
struct LabelEntry {
  std::string utterance_id;
  Labels labels;
};

void write_labels(const std::filesystem::path &path,
                  const std::vector<LabelEntry> &entries);
std::vector<LabelEntry> read_labels(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view bytes);

/// Little-endian append/consume helpers shared by the binary formats.
class ByteWriter {
 public:
  void put_bytes(std::string_view b) { buf_.append(b); }
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f64(double v);
  const std::string &bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  /// Fails with kBadMagic when the next bytes differ from magic.
  void expect_magic(std::string_view magic);
  std::uint16_t get_u16();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  double get_f64();
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n);
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace huc

#endif  // HUC_IO_HPP_
