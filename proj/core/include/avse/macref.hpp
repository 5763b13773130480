// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Instrumented multiply-counting reference, independent of the analytic cost
// formulas: every layer kind is re-evaluated here with naive double-precision
// loops that bump a counter once per scalar multiply, and the full model is
// driven by an explicit per-frame schedule that mirrors the engine (encoder,
// acoustic branch, extractor, and decoder fire once per audio frame; the
// visual stack once per video frame; the segment-memory LSTM once per
// completed segment). Agreement with profile() is therefore a real check of
// both the per-layer formulas and the per-layer rates.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "avse/model.hpp"

namespace avse::macref {

// Multiplies counted while evaluating one layer `firings` times on synthetic
// data (one audio/LSTM/linear step or one full video frame per firing).
std::uint64_t count_layer(const nn::LayerSpec& spec, int firings);

// Instrumented evaluation of the assembled model over exactly one second,
// keyed by the profiler's layer paths.
std::map<std::string, std::uint64_t> count_one_second(const ModelConfig& cfg);

// Total multiplies over one second (the sum of count_one_second).
std::uint64_t count_oracle(const ModelConfig& cfg);

}  // namespace avse::macref
