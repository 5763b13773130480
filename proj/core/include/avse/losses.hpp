// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Training objectives and evaluation metrics.
//
// Every value returned here is a double snapped to the 2^-36 grid and capped
// to the documented ranges. On that grid the composed losses are *exact*
// multiples of 2^-38 well inside double precision, so identities like
// loss_pass2 - loss_pass1 == 0.5 * freq_delta_loss hold to the last bit
// rather than "within tolerance".
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avse/model.hpp"

namespace avse {

// Ratio guard: a norm at or below kLossEps activates the +-60 dB cap.
inline constexpr double kLossEps = 1e-8;
inline constexpr double kDbCap = 60.0;

// Scale-invariant SNR in dB: 20*log10(|proj| / |est - proj|) with
// proj = (<est,s>/|s|^2) s. No epsilon enters the ratio itself, so the
// value is exactly invariant to power-of-two rescaling of est; the guard
// caps at +-60 when either norm vanishes (estimate carrying no target
// energy reads -60, a residual-free estimate reads +60).
double si_snr(const std::vector<float>& s, const std::vector<float>& est);

// Plain SNR in dB: 20*log10(|s| / |s - est|), same guard and cap. Not
// scale-invariant: snr(s, 2s) == 0 exactly (the residual is s itself).
double snr(const std::vector<float>& s, const std::vector<float>& est);

// Multi-resolution magnitude-spectrogram distance: over windows/hops
// {256/64, 512/128, 1024/256} (periodic Hann, no centering), the mean
// absolute difference of magnitudes plus the mean absolute difference of
// their frame-to-frame deltas. Resolutions longer than the signal are
// skipped; signals shorter than 256 samples score 0. Phase-blind:
// freq_delta_loss(s, -s) == 0 exactly.
double freq_delta_loss(const std::vector<float>& s, const std::vector<float>& est);

// Named registry so an alternate spectral loss can be swapped in without
// touching call sites. "multires_hann" is the default (freq_delta_loss).
using FreqLossFn = double (*)(const std::vector<float>&, const std::vector<float>&);
const std::map<std::string, FreqLossFn>& frequency_loss_registry();

// Hybrid objectives of the two-pass procedure:
//   pass 1: -si_snr + 0.25 * freq_delta_loss
//   pass 2: -si_snr + 0.75 * freq_delta_loss
double loss_pass1(const std::vector<float>& s, const std::vector<float>& est1);
double loss_pass2(const std::vector<float>& s, const std::vector<float>& est2);

// Two-pass evaluation: pass 1 runs with the zero acoustic placeholder,
// pass 2 re-runs with the acoustic encoder reading pass 1's output (each
// frame sees only strictly-earlier samples). The reference s is truncated
// to the emitted length for the losses.
struct TwoPassResult {
  std::vector<float> est1, est2;
  double l1 = 0.0, l2 = 0.0;
};
TwoPassResult paris_two_pass(const ModelConfig& cfg, const WeightStore& w,
                             const std::vector<float>& x, const Tensor& v,
                             const std::vector<float>& s);

// Improvement metrics over a mixture, optionally split at a target-switch
// time: before/after are present iff switch_time is given; without is
// present iff it is not.
struct EvalBreakdown {
  double si_snri_all = 0.0;
  double snri_all = 0.0;
  std::optional<double> si_snri_before;
  std::optional<double> si_snri_after;
  std::optional<double> si_snri_without;
};
EvalBreakdown evaluate(const std::vector<float>& mix, const std::vector<float>& target,
                       const std::vector<float>& est, int sample_rate,
                       std::optional<double> switch_time_s = std::nullopt);

}  // namespace avse
