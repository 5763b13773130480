// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Private little-endian byte packing shared by the binary file formats.
// Everything on disk is little-endian regardless of host; these helpers
// assemble and parse byte-by-byte so that holds by construction.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "avse/common.hpp"

namespace avse::io {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  out.insert(out.end(), p, p + n);
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size, std::string origin)
      : p_(data), n_(size), origin_(std::move(origin)) {}

  std::size_t remaining() const { return n_ - off_; }
  std::size_t offset() const { return off_; }

  void bytes(void* dst, std::size_t k) {
    require_data(off_ + k <= n_, origin_ + ": truncated file");
    std::memcpy(dst, p_ + off_, k);
    off_ += k;
  }

  void skip(std::size_t k) {
    require_data(off_ + k <= n_, origin_ + ": truncated file");
    off_ += k;
  }

  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }

  std::uint16_t u16() {
    std::uint8_t b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t off_ = 0;
  std::string origin_;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require_data(f.good(), "cannot open '" + path + "'");
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(f.tellg());
  f.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> data(size);
  if (size > 0) f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  require_data(f.good(), "cannot read '" + path + "'");
  return data;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require_data(f.good(), "cannot create '" + path + "'");
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  f.flush();
  require_data(f.good(), "cannot write '" + path + "'");
}

}  // namespace avse::io
