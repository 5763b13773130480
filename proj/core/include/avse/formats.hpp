// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Binary containers for model weights and visual feature tracks. Both are
// little-endian regardless of host and round-trip float payloads bit-exactly.
//
// Weight file ("AVSEW001"): u32 entry count; per entry u16 name length,
// UTF-8 name, u8 rank, rank u32 dims, then row-major f32 payload.
//
// Feature file ("AVSEV001"): u32 frame count, u16 height, u16 width,
// u16 fps, then frame-major f32 intensities in [0, 1].
#pragma once

#include <string>

#include "avse/model.hpp"

namespace avse {

void save_weights(const std::string& path, const WeightStore& store);
WeightStore load_weights(const std::string& path);

struct Features {
  Tensor video;  // [T, H, W]
  double fps = 0.0;
};

void save_features(const std::string& path, const Tensor& video, double fps);
Features load_features(const std::string& path);

}  // namespace avse
