/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Little-endian binary file helpers shared by the data-file readers and
// writers. Values are copied byte-for-byte, so the build is restricted to
// little-endian hosts.

#ifndef PSZ_SRC_BINIO_HPP_
#define PSZ_SRC_BINIO_HPP_

#include <bit>
#include <cstddef>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "psz/error.hpp"

namespace psz::binio {

static_assert(std::endian::native == std::endian::little,
              "data files are written in host byte order");

class Writer {
 public:
  explicit Writer(const std::string& path)
      : path_(path), os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) throw IoError("cannot open " + path + " for writing");
  }

  void Bytes(const void* data, std::size_t n) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void Put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    Bytes(&v, sizeof(T));
  }
  void Doubles(const double* v, std::size_t n) { Bytes(v, n * sizeof(double)); }

  void Close() {
    os_.flush();
    if (!os_) throw IoError("write to " + path_ + " failed");
    os_.close();
  }

 private:
  std::string path_;
  std::ofstream os_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : path_(path), is_(path, std::ios::binary) {
    if (!is_) throw IoError("cannot open " + path);
  }

  void Bytes(void* data, std::size_t n) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError(path_ + ": truncated file");
    }
  }
  template <typename T>
  T Get() {
    T v;
    Bytes(&v, sizeof(T));
    return v;
  }
  void Doubles(double* v, std::size_t n) { Bytes(v, n * sizeof(double)); }

  void ExpectMagic(const char* magic) {
    const std::size_t n = std::strlen(magic);
    std::string got(n, '\0');
    is_.read(got.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n || got != magic) {
      throw FormatError(path_ + ": bad magic, expected " + magic);
    }
  }

  bool AtEnd() { return is_.peek() == std::char_traits<char>::eof(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream is_;
};

}  // namespace psz::binio

#endif  // PSZ_SRC_BINIO_HPP_
