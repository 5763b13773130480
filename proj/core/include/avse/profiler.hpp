// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Analytic parameter and MACs-per-second accounting over an assembled model.
//
// Convention (declared in every emitted report): 1 MAC = 1 scalar multiply
// inside a convolution, linear, or recurrent kernel. Biases count as
// parameters but never as MACs; activations, pooling, repeat-upsampling, and
// the element-wise mask product are free. Each layer is charged at its
// native rate: audio-frame layers at sample_rate/stride Hz, visual layers at
// visual_fps, and the segment-memory LSTM once per segment.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avse/model.hpp"

namespace avse {

struct CostRow {
  std::string path;
  Subsystem subsystem;
  std::uint64_t params = 0;
  std::uint64_t macs_per_frame = 0;
  double rate_hz = 0.0;      // firings per second at this layer's native rate
  double macs_per_s = 0.0;   // macs_per_frame * rate_hz (exact when integral)
};

struct SubsystemTotal {
  Subsystem subsystem;
  std::uint64_t params = 0;
  double macs_per_s = 0.0;
};

struct CostReport {
  std::vector<CostRow> rows;              // one per declared layer
  std::vector<SubsystemTotal> subsystems; // only subsystems that have rows
  std::uint64_t total_params = 0;
  double total_macs_per_s = 0.0;

  std::uint64_t subsystem_params(Subsystem s) const;
  double subsystem_macs_per_s(Subsystem s) const;
};

const char* subsystem_name(Subsystem s);

// Audits the weights against the config (rejecting undeclared tensors, so
// every stored entry lands in exactly one row), then prices each declared
// layer. Pure function of the config; stable across runs.
CostReport profile(const ModelConfig& cfg, const WeightStore& w);

// Aligned human-readable table (convention header included) / CSV rows.
std::string to_text(const CostReport& r);
std::string to_csv(const CostReport& r);

}  // namespace avse
