// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Mono 16 kHz WAV reading and writing. Accepted encodings: 16-bit PCM
// (samples scale to [-1, 1) by 1/32768) and 32-bit IEEE float. Anything
// else — other rates, channel counts, or encodings — is rejected with an
// explicit message; no resampling or downmixing is ever performed.
#pragma once

#include <string>
#include <vector>

namespace avse {

inline constexpr int kWavSampleRate = 16000;

struct WavData {
  std::vector<float> samples;
  int sample_rate = kWavSampleRate;
};

WavData load_wav(const std::string& path);

enum class WavEncoding { float32, pcm16 };

// float32 (the default) round-trips samples bit-exactly; pcm16 quantizes to
// 1/32768 steps (clamped to full scale).
void save_wav(const std::string& path, const std::vector<float>& samples,
              int sample_rate = kWavSampleRate, WavEncoding enc = WavEncoding::float32);

}  // namespace avse
