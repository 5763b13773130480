// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/losses.hpp"

#include <cmath>
#include <cstdint>

namespace avse {

namespace {

// Snap a dB / loss value to the 2^-36 grid. Everything downstream then
// combines exact multiples of 2^-38 whose magnitudes stay far below 2^53,
// so sums and differences of losses are exact in double arithmetic.
double quantize_grid(double x) {
  return std::ldexp(static_cast<double>(std::llround(std::ldexp(x, 36))), -36);
}

// 20*log10(num/den) with the documented guard: a vanished numerator reads
// -60 dB (nothing of the reference captured), a vanished denominator +60 dB
// (no residual); otherwise clamped to [-60, 60] and snapped to the grid.
double ratio_db(double num, double den) {
  if (num <= kLossEps) return -kDbCap;
  if (den <= kLossEps) return kDbCap;
  const double v = 20.0 * std::log10(num / den);
  if (v <= -kDbCap) return -kDbCap;
  if (v >= kDbCap) return kDbCap;
  return quantize_grid(v);
}

double dot_d(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

// Iterative radix-2 FFT, double precision, in place. n must be a power of 2.
void fft(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {  // bit reversal
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double xr = re[b] * cr - im[b] * ci;
        const double xi = re[b] * ci + im[b] * cr;
        re[b] = re[a] - xr;
        im[b] = im[a] - xi;
        re[a] += xr;
        im[a] += xi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

// Magnitude spectrogram: periodic Hann, no centering, frames of `w` every
// `h` samples, bins 0..w/2. Rows are frames.
std::vector<std::vector<double>> magnitudes(const std::vector<float>& x, int w, int h) {
  const int frames = 1 + static_cast<int>((x.size() - static_cast<std::size_t>(w)) /
                                          static_cast<std::size_t>(h));
  std::vector<double> win(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / w);

  std::vector<std::vector<double>> m(static_cast<std::size_t>(frames));
  std::vector<double> re(static_cast<std::size_t>(w)), im(static_cast<std::size_t>(w));
  for (int f = 0; f < frames; ++f) {
    const float* src = x.data() + static_cast<std::size_t>(f) * h;
    for (int i = 0; i < w; ++i) {
      re[i] = static_cast<double>(src[i]) * win[i];
      im[i] = 0.0;
    }
    fft(re, im);
    auto& row = m[static_cast<std::size_t>(f)];
    row.resize(static_cast<std::size_t>(w) / 2 + 1);
    for (std::size_t b = 0; b < row.size(); ++b)
      row[b] = std::sqrt(re[b] * re[b] + im[b] * im[b]);
  }
  return m;
}

}  // namespace

double si_snr(const std::vector<float>& s, const std::vector<float>& est) {
  require(!s.empty() && s.size() == est.size(), "si_snr: need equal nonzero lengths");
  const double ss = dot_d(s, s);
  require(ss > 0.0, "si_snr: zero reference signal");
  const double alpha = dot_d(est, s) / ss;
  const double np = std::fabs(alpha) * std::sqrt(ss);  // |proj| = |alpha| |s|
  double err2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = static_cast<double>(est[i]) - alpha * static_cast<double>(s[i]);
    err2 += e * e;
  }
  return ratio_db(np, std::sqrt(err2));
}

double snr(const std::vector<float>& s, const std::vector<float>& est) {
  require(!s.empty() && s.size() == est.size(), "snr: need equal nonzero lengths");
  const double ss = dot_d(s, s);
  require(ss > 0.0, "snr: zero reference signal");
  double res2 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = static_cast<double>(s[i]) - static_cast<double>(est[i]);
    res2 += r * r;
  }
  return ratio_db(std::sqrt(ss), std::sqrt(res2));
}

double freq_delta_loss(const std::vector<float>& s, const std::vector<float>& est) {
  require(s.size() == est.size(), "freq_delta_loss: length mismatch");
  static constexpr int kWindows[3] = {256, 512, 1024};
  static constexpr int kHops[3] = {64, 128, 256};

  double total = 0.0;
  for (int r = 0; r < 3; ++r) {
    const int w = kWindows[r], h = kHops[r];
    if (s.size() < static_cast<std::size_t>(w)) continue;  // resolution unavailable
    const auto ms = magnitudes(s, w, h);
    const auto me = magnitudes(est, w, h);
    const std::size_t frames = ms.size(), bins = ms[0].size();

    double mag_abs = 0.0;
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < bins; ++b) mag_abs += std::fabs(ms[f][b] - me[f][b]);
    total += mag_abs / (static_cast<double>(frames) * static_cast<double>(bins));

    if (frames >= 2) {
      double del_abs = 0.0;
      for (std::size_t f = 0; f + 1 < frames; ++f)
        for (std::size_t b = 0; b < bins; ++b) {
          const double ds = ms[f + 1][b] - ms[f][b];
          const double de = me[f + 1][b] - me[f][b];
          del_abs += std::fabs(ds - de);
        }
      total += del_abs / (static_cast<double>(frames - 1) * static_cast<double>(bins));
    }
  }
  if (total < 0.0) total = 0.0;
  if (total > 16384.0) total = 16384.0;
  return quantize_grid(total);
}

const std::map<std::string, FreqLossFn>& frequency_loss_registry() {
  static const std::map<std::string, FreqLossFn> reg = {{"multires_hann", &freq_delta_loss}};
  return reg;
}

double loss_pass1(const std::vector<float>& s, const std::vector<float>& est1) {
  return -si_snr(s, est1) + 0.25 * freq_delta_loss(s, est1);
}

double loss_pass2(const std::vector<float>& s, const std::vector<float>& est2) {
  return -si_snr(s, est2) + 0.75 * freq_delta_loss(s, est2);
}

TwoPassResult paris_two_pass(const ModelConfig& cfg, const WeightStore& w,
                             const std::vector<float>& x, const Tensor& v,
                             const std::vector<float>& s) {
  require(cfg.use_acoustic_encoder,
          "paris_two_pass: pass 2 is undefined without the acoustic encoder");
  require(s.size() == x.size(), "paris_two_pass: reference/input length mismatch");
  TwoPassResult r;
  r.est1 = forward_offline(cfg, w, x, v, /*use_ar=*/false);
  r.est2 = forward_offline(cfg, w, x, v, /*use_ar=*/true, &r.est1);
  const std::vector<float> st(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(r.est1.size()));
  r.l1 = loss_pass1(st, r.est1);
  r.l2 = loss_pass2(st, r.est2);
  return r;
}

EvalBreakdown evaluate(const std::vector<float>& mix, const std::vector<float>& target,
                       const std::vector<float>& est, int sample_rate,
                       std::optional<double> switch_time_s) {
  require(mix.size() == target.size() && mix.size() == est.size(),
          "evaluate: signals must have equal length");
  require(sample_rate > 0, "evaluate: bad sample rate");

  EvalBreakdown out;
  out.si_snri_all = si_snr(target, est) - si_snr(target, mix);
  out.snri_all = snr(target, est) - snr(target, mix);
  if (!switch_time_s) {
    out.si_snri_without = out.si_snri_all;
    return out;
  }

  const std::int64_t n = static_cast<std::int64_t>(mix.size());
  const std::int64_t k = std::llround(*switch_time_s * sample_rate);
  require(k > 0 && k < n, "evaluate: switch_time outside signal");
  auto slice = [](const std::vector<float>& v, std::int64_t a, std::int64_t b) {
    return std::vector<float>(v.begin() + static_cast<std::ptrdiff_t>(a),
                              v.begin() + static_cast<std::ptrdiff_t>(b));
  };
  const auto tb = slice(target, 0, k), eb = slice(est, 0, k), mb = slice(mix, 0, k);
  const auto ta = slice(target, k, n), ea = slice(est, k, n), ma = slice(mix, k, n);
  out.si_snri_before = si_snr(tb, eb) - si_snr(tb, mb);
  out.si_snri_after = si_snr(ta, ea) - si_snr(ta, ma);
  return out;
}

}  // namespace avse
