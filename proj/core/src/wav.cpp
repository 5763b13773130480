// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/wav.hpp"

#include <cmath>
#include <cstdint>

#include "binary_io.hpp"

namespace avse {

namespace {

constexpr std::uint16_t kFmtPcm = 1;
constexpr std::uint16_t kFmtFloat = 3;

}  // namespace

WavData load_wav(const std::string& path) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::Reader r(raw.data(), raw.size(), path);

  char tag[5] = {0};
  r.bytes(tag, 4);
  require_data(std::string(tag) == "RIFF", path + ": not a RIFF file");
  r.u32();  // RIFF payload size; chunk walk below is bounds-checked anyway
  r.bytes(tag, 4);
  require_data(std::string(tag) == "WAVE", path + ": not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  WavData out;
  bool have_data = false;

  while (r.remaining() >= 8) {
    r.bytes(tag, 4);
    const std::uint32_t size = r.u32();
    if (std::string(tag) == "fmt ") {
      require_data(size >= 16, path + ": malformed fmt chunk");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      r.skip(size - 16);
      have_fmt = true;
    } else if (std::string(tag) == "data") {
      require_data(have_fmt, path + ": data chunk precedes fmt chunk");
      require_data(channels == 1,
                   path + ": expected mono audio, got " + std::to_string(channels) + " channels");
      require_data(rate == static_cast<std::uint32_t>(kWavSampleRate),
                   path + ": expected " + std::to_string(kWavSampleRate) + " Hz, got " +
                       std::to_string(rate) + " Hz (resampling is not performed)");
      if (format == kFmtPcm) {
        require_data(bits == 16, path + ": PCM must be 16-bit, got " + std::to_string(bits));
        const std::size_t n = size / 2;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = static_cast<std::int16_t>(r.u16());
          out.samples[i] = static_cast<float>(v) * (1.0f / 32768.0f);
        }
        r.skip(size % 2);
      } else if (format == kFmtFloat) {
        require_data(bits == 32, path + ": float must be 32-bit, got " + std::to_string(bits));
        const std::size_t n = size / 4;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = r.f32();
        r.skip(size % 4);
      } else {
        require_data(false, path + ": unsupported WAV encoding " + std::to_string(format) +
                                " (need 16-bit PCM or 32-bit float)");
      }
      out.sample_rate = static_cast<int>(rate);
      have_data = true;
    } else {
      r.skip(size + (size & 1));  // chunks are word-aligned
    }
  }
  require_data(have_data, path + ": no data chunk");
  return out;
}

void save_wav(const std::string& path, const std::vector<float>& samples, int sample_rate,
              WavEncoding enc) {
  require(sample_rate > 0, "save_wav: bad sample rate");
  const bool f32 = enc == WavEncoding::float32;
  const std::uint32_t bytes_per = f32 ? 4 : 2;
  const auto data_size = static_cast<std::uint32_t>(samples.size() * bytes_per);
  const std::uint32_t fact_size = f32 ? 12 : 0;  // float WAVs carry a fact chunk
  const std::uint32_t riff_size = 4 + 24 + fact_size + 8 + data_size;

  std::vector<std::uint8_t> out;
  out.reserve(riff_size + 8);
  io::put_bytes(out, "RIFF", 4);
  io::put_u32(out, riff_size);
  io::put_bytes(out, "WAVE", 4);

  io::put_bytes(out, "fmt ", 4);
  io::put_u32(out, 16);
  io::put_u16(out, f32 ? kFmtFloat : kFmtPcm);
  io::put_u16(out, 1);  // mono
  io::put_u32(out, static_cast<std::uint32_t>(sample_rate));
  io::put_u32(out, static_cast<std::uint32_t>(sample_rate) * bytes_per);
  io::put_u16(out, static_cast<std::uint16_t>(bytes_per));
  io::put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));

  if (f32) {
    io::put_bytes(out, "fact", 4);
    io::put_u32(out, 4);
    io::put_u32(out, static_cast<std::uint32_t>(samples.size()));
  }

  io::put_bytes(out, "data", 4);
  io::put_u32(out, data_size);
  if (f32) {
    for (float v : samples) io::put_f32(out, v);
  } else {
    for (float v : samples) {
      long q = std::lround(static_cast<double>(v) * 32768.0);
      if (q < -32768) q = -32768;
      if (q > 32767) q = 32767;
      io::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  io::write_file(path, out);
}

}  // namespace avse
