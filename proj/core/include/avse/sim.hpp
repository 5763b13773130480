// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Deterministic mixture simulator: synthetic "speech-like" sources with a
// physically correlated visual track, energy normalization, SNR assignment,
// and the three two-speaker scenarios (overlap, switch, sequential).
//
// SNR convention: snr_db is the interferer's level relative to the target
// track after energy normalization (gain 10^(snr_db/20) on the interferer),
// so a positive value means a louder interferer.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avse/common.hpp"

namespace avse {

// Fixed synthesis format; matches the engine's default front-end layout.
inline constexpr int kSimSampleRate = 16000;
inline constexpr double kSimVideoFps = 25.0;
inline constexpr int kSimLipSize = 64;

enum class ScenarioKind { overlap, target_switch, sequential };

ScenarioKind scenario_kind_from_string(const std::string& s);  // "overlap"|"switch"|"sequential"
std::string to_string(ScenarioKind k);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::overlap;
  double duration_s = 4.0;
  double snr_db = 0.0;        // must lie in [-10, 10]
  double switch_time_s = 0.0; // used by switch/sequential; 0 < t < duration
  std::uint64_t seed = 0;

  void validate() const;
};

struct MixtureRecord {
  std::vector<float> mix, target, interferer;  // equal lengths; mix = target + interferer
  Tensor target_video;                         // [T, 64, 64], intensities in [0, 1]
  std::optional<double> switch_time_s;
  std::uint64_t seed = 0;
  double snr_db = 0.0;
};

struct SourceClip {
  std::vector<float> audio;  // 16 kHz mono
  Tensor video;              // [round(duration*25), 64, 64]
};

// Seeded amplitude-modulated multi-tone source. The video's per-frame mean
// intensity tracks the audio RMS over that frame's 40 ms window, so the
// visual stream carries a real cue about who is speaking. duration >= 0.5 s.
SourceClip synth_source(std::uint64_t seed, double duration_s);

// Rescale `signal` so its RMS matches `anchor`'s (within 1e-6 relative).
// Errors on silent input (either side).
std::vector<float> normalize_energy(const std::vector<float>& signal,
                                    const std::vector<float>& anchor);

struct MixPair {
  std::vector<float> mix, scaled_other;
};

// scaled_other = other * 10^(snr_db/20); mix = anchor + scaled_other.
// A length mismatch is resolved by zero-padding the shorter signal at the
// tail, so the mixture always spans the longer of the two.
MixPair mix_at_snr(const std::vector<float>& anchor, const std::vector<float>& other,
                   double snr_db);

// Assemble one mixture for the given scenario:
//   overlap    — speaker A is the target, speaker B interferes throughout;
//   switch     — target identity (audio and video) flips from A to B at
//                switch_time; the other speaker interferes;
//   sequential — A speaks before switch_time and B after (the target track
//                is their concatenation) while a third source C interferes
//                throughout.
// The assembled target track is the SNR anchor in every case.
MixtureRecord make_scenario(const ScenarioSpec& spec);

// Root-mean-square level of a signal (0 for an empty one).
double rms(const std::vector<float>& x);

// Post-hoc interferer level relative to the target, in dB (the quantity
// snr_db assigns; see the convention note at the top of this header).
double achieved_snr_db(const MixtureRecord& rec);

}  // namespace avse
