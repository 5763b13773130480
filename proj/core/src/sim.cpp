// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/sim.hpp"

#include <algorithm>
#include <cmath>

#include "avse/rng.hpp"

namespace avse {

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "overlap") return ScenarioKind::overlap;
  if (s == "switch") return ScenarioKind::target_switch;
  if (s == "sequential") return ScenarioKind::sequential;
  require(false, "scenario kind must be overlap, switch, or sequential (got '" + s + "')");
  return ScenarioKind::overlap;  // unreachable
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::overlap: return "overlap";
    case ScenarioKind::target_switch: return "switch";
    case ScenarioKind::sequential: return "sequential";
  }
  return "?";
}

void ScenarioSpec::validate() const {
  require(duration_s >= 0.5, "scenario: duration must be at least 0.5 s");
  require(snr_db >= -10.0 && snr_db <= 10.0, "scenario: snr_db must lie in [-10, 10]");
  if (kind != ScenarioKind::overlap)
    require(switch_time_s > 0.0 && switch_time_s < duration_s,
            "scenario: switch_time must lie strictly inside the utterance");
}

double rms(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

SourceClip synth_source(std::uint64_t seed, double duration_s) {
  require(duration_s >= 0.5, "synth_source: duration must be at least 0.5 s");
  Rng rng = rng_for(seed, "sim.source");

  // Voice layout: a fundamental with decaying, slightly detuned partials,
  // shaped by a syllabic-rate envelope that never fully gates the sound.
  const double f0 = 90.0 + 150.0 * rng.next_unit();
  constexpr int kPartials = 4;
  double freq[kPartials], amp[kPartials], phase[kPartials];
  double amp_sum = 0.0;
  for (int k = 0; k < kPartials; ++k) {
    freq[k] = f0 * (k + 1) * (1.0 + 0.002 * (2.0 * rng.next_unit() - 1.0));
    amp[k] = 1.0 / (k + 1);
    amp_sum += amp[k];
    phase[k] = 2.0 * M_PI * rng.next_unit();
  }
  for (double& a : amp) a /= amp_sum;
  const double m1 = 1.8 + 1.4 * rng.next_unit();  // syllabic rate, Hz
  const double m2 = 5.0 + 3.0 * rng.next_unit();
  const double p1 = 2.0 * M_PI * rng.next_unit();
  const double p2 = 2.0 * M_PI * rng.next_unit();

  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSimSampleRate));
  SourceClip clip;
  clip.audio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSimSampleRate;
    const double env = 0.42 + 0.25 * std::sin(2.0 * M_PI * m1 * t + p1) +
                       0.08 * std::sin(2.0 * M_PI * m2 * t + p2);
    double v = 0.0;
    for (int k = 0; k < kPartials; ++k)
      v += amp[k] * std::sin(2.0 * M_PI * freq[k] * t + phase[k]);
    clip.audio[i] = static_cast<float>(env * v);
  }

  // Video: per-frame mean intensity is an affine image of the audio RMS over
  // that frame's window, plus low-amplitude texture that cannot push pixels
  // outside [0, 1] (so the mean stays on the RMS curve).
  const auto frames = static_cast<int>(std::llround(duration_s * kSimVideoFps));
  const auto hop = static_cast<std::size_t>(kSimSampleRate / kSimVideoFps);  // 640
  clip.video = Tensor::zeros({frames, kSimLipSize, kSimLipSize});
  constexpr int kPix = kSimLipSize * kSimLipSize;
  for (int f = 0; f < frames; ++f) {
    const std::size_t a = std::min(n, static_cast<std::size_t>(f) * hop);
    const std::size_t b = std::min(n, a + hop);
    double acc = 0.0;
    for (std::size_t i = a; i < b; ++i)
      acc += static_cast<double>(clip.audio[i]) * static_cast<double>(clip.audio[i]);
    const double win_rms = b > a ? std::sqrt(acc / static_cast<double>(b - a)) : 0.0;
    const double base = std::min(0.9, std::max(0.1, 0.10 + 1.10 * win_rms));
    float* px = clip.video.ptr() + static_cast<std::size_t>(f) * kPix;
    for (int p = 0; p < kPix; ++p)
      px[p] = static_cast<float>(base + 0.05 * (rng.next_unit() - 0.5f));
  }
  return clip;
}

std::vector<float> normalize_energy(const std::vector<float>& signal,
                                    const std::vector<float>& anchor) {
  const double rs = rms(signal), ra = rms(anchor);
  require(rs > 0.0, "normalize_energy: silent signal");
  require(ra > 0.0, "normalize_energy: silent anchor");
  const auto g = static_cast<float>(ra / rs);
  std::vector<float> out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] * g;
  return out;
}

MixPair mix_at_snr(const std::vector<float>& anchor, const std::vector<float>& other,
                   double snr_db) {
  const std::size_t n = std::max(anchor.size(), other.size());
  const auto g = static_cast<float>(std::pow(10.0, snr_db / 20.0));
  MixPair out;
  out.scaled_other.resize(n, 0.0f);
  out.mix.resize(n, 0.0f);
  for (std::size_t i = 0; i < other.size(); ++i) out.scaled_other[i] = other[i] * g;
  for (std::size_t i = 0; i < n; ++i) {
    const float a = i < anchor.size() ? anchor[i] : 0.0f;
    out.mix[i] = a + out.scaled_other[i];
  }
  return out;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return rng_for(seed, name).next_u64();
}

// target = a[:k] ++ b[k:] sample-wise; same for video at the frame cut.
std::vector<float> splice(const std::vector<float>& a, const std::vector<float>& b,
                          std::size_t k) {
  std::vector<float> out(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k));
  out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(k), b.end());
  return out;
}

Tensor splice_video(const Tensor& a, const Tensor& b, int kf) {
  Tensor out = a;
  const auto pix = static_cast<std::size_t>(a.shape[1]) * a.shape[2];
  std::copy(b.data.begin() + kf * pix, b.data.end(), out.data.begin() + kf * pix);
  return out;
}

}  // namespace

MixtureRecord make_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const SourceClip a = synth_source(derive_seed(spec.seed, "sim.speaker_a"), spec.duration_s);
  const SourceClip b = synth_source(derive_seed(spec.seed, "sim.speaker_b"), spec.duration_s);

  MixtureRecord rec;
  rec.seed = spec.seed;
  rec.snr_db = spec.snr_db;

  std::vector<float> target_track, other_track;
  switch (spec.kind) {
    case ScenarioKind::overlap: {
      target_track = a.audio;
      other_track = b.audio;
      rec.target_video = a.video;
      break;
    }
    case ScenarioKind::target_switch: {
      const auto k = static_cast<std::size_t>(std::llround(spec.switch_time_s * kSimSampleRate));
      const auto kf = static_cast<int>(std::llround(spec.switch_time_s * kSimVideoFps));
      target_track = splice(a.audio, b.audio, k);
      other_track = splice(b.audio, a.audio, k);  // whoever is not the target
      rec.target_video = splice_video(a.video, b.video, kf);
      rec.switch_time_s = spec.switch_time_s;
      break;
    }
    case ScenarioKind::sequential: {
      const SourceClip c =
          synth_source(derive_seed(spec.seed, "sim.speaker_c"), spec.duration_s);
      const auto k = static_cast<std::size_t>(std::llround(spec.switch_time_s * kSimSampleRate));
      const auto kf = static_cast<int>(std::llround(spec.switch_time_s * kSimVideoFps));
      target_track = splice(a.audio, b.audio, k);  // A speaks, then B
      other_track = c.audio;                       // third voice throughout
      rec.target_video = splice_video(a.video, b.video, kf);
      rec.switch_time_s = spec.switch_time_s;
      break;
    }
  }

  const std::vector<float> leveled = normalize_energy(other_track, target_track);
  MixPair mp = mix_at_snr(target_track, leveled, spec.snr_db);
  rec.target = std::move(target_track);
  rec.interferer = std::move(mp.scaled_other);
  rec.mix = std::move(mp.mix);
  return rec;
}

double achieved_snr_db(const MixtureRecord& rec) {
  return 20.0 * std::log10(rms(rec.interferer) / rms(rec.target));
}

}  // namespace avse
