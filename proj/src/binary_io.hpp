// Copyright 2026 The lateprot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian framing shared by the embedding, head and signature formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lateprot/error.hpp"

namespace lateprot::binary {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this target");

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) fail(ErrorCode::kIo, "write failed on '" + path_ + "'");
  }
  template <class T>
  void scalar(T v) { bytes(&v, sizeof(T)); }
  template <class T>
  void array(std::span<const T> v) { bytes(v.data(), v.size_bytes()); }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }
  void id(const std::string& id) {
    if (id.size() > 0xFFFF) fail(ErrorCode::kInvalidArgument, "id longer than 65535 bytes");
    scalar<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    bytes(id.data(), id.size());
  }
  void close() {
    out_.close();
    if (!out_) fail(ErrorCode::kIo, "close failed on '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  void bytes(void* dst, std::size_t n) {
    if (remaining() < n) {
      fail(ErrorCode::kTruncated, "'" + path_ + "' ends at byte " + std::to_string(data_.size()) +
                                      ", needed " + std::to_string(n) + " more at " + std::to_string(pos_));
    }
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T scalar() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  template <class T>
  std::vector<T> array(std::size_t n) {
    if (n > remaining() / sizeof(T)) {
      fail(ErrorCode::kTruncated, "'" + path_ + "' too short for " + std::to_string(n) + " values");
    }
    std::vector<T> v(n);
    bytes(v.data(), n * sizeof(T));
    return v;
  }
  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    if (remaining() < m.size()) fail(ErrorCode::kBadMagic, "'" + path_ + "' is too short for a header");
    bytes(got.data(), m.size());
    if (got != m) fail(ErrorCode::kBadMagic, "'" + path_ + "' does not start with " + std::string(m));
  }
  std::string id() {
    const auto n = scalar<std::uint16_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

}  // namespace lateprot::binary
