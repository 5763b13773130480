// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/formats.hpp"

#include <cmath>
#include <cstdint>

#include "binary_io.hpp"

namespace avse {

namespace {

constexpr char kWeightMagic[] = "AVSEW001";
constexpr char kFeatureMagic[] = "AVSEV001";

void check_magic(io::Reader& r, const char* expect, const std::string& path) {
  char m[9] = {0};
  r.bytes(m, 8);
  require_data(std::string(m) == expect,
               path + ": unknown magic '" + std::string(m) + "' (expected " + expect + ")");
}

}  // namespace

void save_weights(const std::string& path, const WeightStore& store) {
  std::vector<std::uint8_t> out;
  io::put_bytes(out, kWeightMagic, 8);
  io::put_u32(out, static_cast<std::uint32_t>(store.tensors.size()));
  for (const auto& [name, t] : store.tensors) {  // std::map: stable name order
    require(name.size() <= 0xFFFF, "save_weights: tensor name too long");
    io::put_u16(out, static_cast<std::uint16_t>(name.size()));
    io::put_bytes(out, name.data(), name.size());
    require(t.shape.size() <= 0xFF, "save_weights: tensor rank too large");
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) {
      require(d > 0, "save_weights: tensor '" + name + "' has a non-positive extent");
      io::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (float v : t.data) io::put_f32(out, v);
  }
  io::write_file(path, out);
}

WeightStore load_weights(const std::string& path) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::Reader r(raw.data(), raw.size(), path);
  check_magic(r, kWeightMagic, path);

  WeightStore store;
  const std::uint32_t count = r.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t name_len = r.u16();
    std::string name(name_len, '\0');
    if (name_len > 0) r.bytes(name.data(), name_len);
    const std::uint8_t rank = r.u8();
    Tensor t;
    std::size_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      const std::uint32_t extent = r.u32();
      require_data(extent > 0, path + ": tensor '" + name + "' has a zero extent");
      require_data(numel <= (1ull << 31) / extent, path + ": tensor '" + name + "' too large");
      t.shape.push_back(static_cast<int>(extent));
      numel *= extent;
    }
    require_data(r.remaining() >= 4 * numel, path + ": truncated payload for '" + name + "'");
    t.data.resize(numel);
    for (std::size_t i = 0; i < numel; ++i) t.data[i] = r.f32();
    require_data(store.tensors.emplace(name, std::move(t)).second,
                 path + ": duplicate tensor '" + name + "'");
  }
  require_data(r.remaining() == 0, path + ": trailing bytes after last tensor");
  return store;
}

void save_features(const std::string& path, const Tensor& video, double fps) {
  require(video.shape.size() == 3, "save_features: video must be [frames, h, w]");
  require(fps > 0.0 && fps <= 65535.0 && fps == std::floor(fps),
          "save_features: fps must be a positive integer");
  for (float v : video.data)
    require(v >= 0.0f && v <= 1.0f, "save_features: intensities must lie in [0, 1]");

  std::vector<std::uint8_t> out;
  io::put_bytes(out, kFeatureMagic, 8);
  io::put_u32(out, static_cast<std::uint32_t>(video.shape[0]));
  io::put_u16(out, static_cast<std::uint16_t>(video.shape[1]));
  io::put_u16(out, static_cast<std::uint16_t>(video.shape[2]));
  io::put_u16(out, static_cast<std::uint16_t>(fps));
  for (float v : video.data) io::put_f32(out, v);
  io::write_file(path, out);
}

Features load_features(const std::string& path) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::Reader r(raw.data(), raw.size(), path);
  check_magic(r, kFeatureMagic, path);

  const std::uint32_t frames = r.u32();
  const std::uint16_t h = r.u16();
  const std::uint16_t w = r.u16();
  const std::uint16_t fps = r.u16();
  require_data(fps > 0, path + ": fps must be positive");
  require_data(h > 0 && w > 0, path + ": empty frame geometry");
  const std::size_t numel = static_cast<std::size_t>(frames) * h * w;
  require_data(r.remaining() == 4 * numel, path + ": payload length does not match header");

  Features f;
  f.fps = fps;
  f.video.shape = {static_cast<int>(frames), h, w};
  f.video.data.resize(numel);
  for (std::size_t i = 0; i < numel; ++i) {
    const float v = r.f32();
    require_data(v >= 0.0f && v <= 1.0f, path + ": intensity outside [0, 1]");
    f.video.data[i] = v;
  }
  return f;
}

}  // namespace avse
