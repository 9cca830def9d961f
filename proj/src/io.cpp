// src/io.cpp

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

#include "huc/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace huc {

namespace {

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | (v & 0xFF));
      v = static_cast<U>(v >> 8);
    }
    return out;
  } else {
    return v;
  }
}

template <typename U>
void append_le(std::string *buf, U v) {
  v = to_little(v);
  char raw[sizeof(U)];
  std::memcpy(raw, &v, sizeof(U));
  buf->append(raw, sizeof(U));
}

}  // namespace

void ByteWriter::put_u16(std::uint16_t v) { append_le(&buf_, v); }
void ByteWriter::put_u32(std::uint32_t v) { append_le(&buf_, v); }
void ByteWriter::put_u64(std::uint64_t v) { append_le(&buf_, v); }
void ByteWriter::put_f64(double v) {
  append_le(&buf_, std::bit_cast<std::uint64_t>(v));
}

void ByteReader::need(std::size_t n) {
  if (remaining() < n)
    fail(ErrorCode::kTruncated, "needed " + std::to_string(n) +
                                    " bytes, have " +
                                    std::to_string(remaining()));
}

void ByteReader::expect_magic(std::string_view magic) {
  if (remaining() < magic.size() ||
      bytes_.substr(pos_, magic.size()) != magic)
    fail(ErrorCode::kBadMagic, "expected \"" + std::string(magic) + "\"");
  pos_ += magic.size();
}

#define HUC_GET_LE(TYPE)                        \
  need(sizeof(TYPE));                           \
  TYPE v;                                       \
  std::memcpy(&v, bytes_.data() + pos_, sizeof(TYPE)); \
  pos_ += sizeof(TYPE);                         \
  return to_little(v);

std::uint16_t ByteReader::get_u16() { HUC_GET_LE(std::uint16_t) }
std::uint32_t ByteReader::get_u32() { HUC_GET_LE(std::uint32_t) }
std::uint64_t ByteReader::get_u64() { HUC_GET_LE(std::uint64_t) }
#undef HUC_GET_LE

double ByteReader::get_f64() { return std::bit_cast<double>(get_u64()); }

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path &path, std::string_view bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::string encode_features(const FrameMatrix &m) {
  if (!m.allFinite())
    fail(ErrorCode::kNonFinite, "feature matrix contains NaN or Inf");
  ByteWriter w;
  w.put_bytes("HUCF");
  w.put_u16(kFeatureFileVersion);
  w.put_u32(static_cast<std::uint32_t>(m.rows()));
  w.put_u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) w.put_f64(m.data()[i]);
  return w.bytes();
}

FrameMatrix decode_features(std::string_view bytes) {
  ByteReader r(bytes);
  r.expect_magic("HUCF");
  const auto version = r.get_u16();
  if (version != kFeatureFileVersion)
    fail(ErrorCode::kUnsupportedVersion,
         "feature file version " + std::to_string(version));
  const std::uint64_t rows = r.get_u32();
  const std::uint64_t cols = r.get_u32();
  const std::uint64_t payload = rows * cols * 8;
  if (r.remaining() < payload)
    fail(ErrorCode::kTruncated, "header declares " + std::to_string(rows) +
                                    "x" + std::to_string(cols) +
                                    " but payload has " +
                                    std::to_string(r.remaining()) + " bytes");
  if (r.remaining() > payload)
    fail(ErrorCode::kDimensionMismatch,
         "header declares " + std::to_string(rows) + "x" +
             std::to_string(cols) + " but payload has " +
             std::to_string(r.remaining()) + " bytes");
  FrameMatrix m(static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.get_f64();
  return m;
}

void write_features(const std::filesystem::path &path, const FrameMatrix &m) {
  write_file(path, encode_features(m));
}

FrameMatrix read_features(const std::filesystem::path &path) {
  return decode_features(read_file(path));
}

void write_labels(const std::filesystem::path &path,
                  const std::vector<LabelEntry> &entries) {
  std::string out;
  for (const auto &e : entries) {
    if (e.utterance_id.find_first_of("\t\n") != std::string::npos)
      fail(ErrorCode::kInvalidArgument,
           "utterance id contains tab or newline: " + e.utterance_id);
    out += e.utterance_id;
    out += '\t';
    for (std::size_t i = 0; i < e.labels.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(e.labels[i]);
    }
    out += '\n';
  }
  write_file(path, out);
}

std::vector<LabelEntry> read_labels(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::vector<LabelEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      fail(ErrorCode::kInvalidArgument, path.string() + ":" +
                                            std::to_string(lineno) +
                                            ": missing tab");
    LabelEntry e;
    e.utterance_id = line.substr(0, tab);
    std::istringstream fields(line.substr(tab + 1));
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != tok.size())
        fail(ErrorCode::kInvalidArgument, path.string() + ":" +
                                              std::to_string(lineno) +
                                              ": bad integer '" + tok + "'");
      e.labels.push_back(v);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace huc
