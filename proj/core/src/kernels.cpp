// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#if defined(__AVX512F__)
#include <immintrin.h>
#define AVSE_AVX512 1
#else
#define AVSE_AVX512 0
#endif

namespace avse::kern {

// ===================== dot: fixed accumulation structure =====================
//
// Structure (function of n only):
//   chains a0, a1 of 16 lanes each; k advances in 32-element blocks
//   (a0 <- lanes k..k+15, a1 <- lanes k+16..k+31); one optional full
//   16-block into a0; one optional masked tail into a1; then
//   v = a0 + a1 and the reduction tree
//   (v0..7 + v8..15) -> (+4) -> (+2) -> (+1).
// The scalar build emulates the same lanes with fmaf, so both builds agree.

#if AVSE_AVX512

static inline float reduce16(__m512 v) {
  __m256 lo = _mm512_castps512_ps256(v);
  __m256 hi = _mm512_extractf32x8_ps(v, 1);
  __m256 s8 = _mm256_add_ps(lo, hi);
  __m128 s4 = _mm_add_ps(_mm256_castps256_ps128(s8), _mm256_extractf128_ps(s8, 1));
  __m128 s2 = _mm_add_ps(s4, _mm_movehl_ps(s4, s4));
  __m128 s1 = _mm_add_ss(s2, _mm_shuffle_ps(s2, s2, 1));
  return _mm_cvtss_f32(s1);
}

float dot(const float* w, const float* x, int n) {
  __m512 a0 = _mm512_setzero_ps(), a1 = _mm512_setzero_ps();
  int k = 0;
  for (; k + 32 <= n; k += 32) {
    a0 = _mm512_fmadd_ps(_mm512_loadu_ps(w + k), _mm512_loadu_ps(x + k), a0);
    a1 = _mm512_fmadd_ps(_mm512_loadu_ps(w + k + 16), _mm512_loadu_ps(x + k + 16), a1);
  }
  if (k + 16 <= n) {
    a0 = _mm512_fmadd_ps(_mm512_loadu_ps(w + k), _mm512_loadu_ps(x + k), a0);
    k += 16;
  }
  if (k < n) {
    __mmask16 m = static_cast<__mmask16>((1u << (n - k)) - 1u);
    a1 = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(m, w + k), _mm512_maskz_loadu_ps(m, x + k), a1);
  }
  return reduce16(_mm512_add_ps(a0, a1));
}

#else  // scalar build: lane-exact emulation of the AVX-512 path

namespace {
struct Lanes16 {
  float v[16] = {0};
};

inline void fma_block(Lanes16& acc, const float* w, const float* x, int lanes) {
  for (int j = 0; j < lanes; ++j) acc.v[j] = std::fmaf(w[j], x[j], acc.v[j]);
}

inline float reduce16(const Lanes16& a) {
  float s8[8], s4[4], s2[2];
  for (int j = 0; j < 8; ++j) s8[j] = a.v[j] + a.v[j + 8];
  for (int j = 0; j < 4; ++j) s4[j] = s8[j] + s8[j + 4];
  for (int j = 0; j < 2; ++j) s2[j] = s4[j] + s4[j + 2];
  return s2[0] + s2[1];
}
}  // namespace

float dot(const float* w, const float* x, int n) {
  Lanes16 a0, a1;
  int k = 0;
  for (; k + 32 <= n; k += 32) {
    fma_block(a0, w + k, x + k, 16);
    fma_block(a1, w + k + 16, x + k + 16, 16);
  }
  if (k + 16 <= n) {
    fma_block(a0, w + k, x + k, 16);
    k += 16;
  }
  if (k < n) fma_block(a1, w + k, x + k, n - k);
  Lanes16 s;
  for (int j = 0; j < 16; ++j) s.v[j] = a0.v[j] + a1.v[j];
  return reduce16(s);
}

#endif

void matvec(const float* W, int ld, int rows, int n, const float* x, float* y) {
  for (int r = 0; r < rows; ++r) y[r] = dot(W + static_cast<std::size_t>(r) * ld, x, n);
}

#if AVSE_AVX512

// Tile of up to 8 columns. Per column the instruction sequence on its own
// accumulators is exactly dot(); interleaving columns only reuses the W row.
static void matvec_tile(const float* W, int ld, int rows, int n,
                        const float* const* X, float* const* Y, int c0, int nc) {
  for (int r = 0; r < rows; ++r) {
    const float* w = W + static_cast<std::size_t>(r) * ld;
    __m512 a0[8], a1[8];
    for (int c = 0; c < nc; ++c) {
      a0[c] = _mm512_setzero_ps();
      a1[c] = _mm512_setzero_ps();
    }
    int k = 0;
    for (; k + 32 <= n; k += 32) {
      __m512 w0 = _mm512_loadu_ps(w + k), w1 = _mm512_loadu_ps(w + k + 16);
      for (int c = 0; c < nc; ++c) {
        a0[c] = _mm512_fmadd_ps(w0, _mm512_loadu_ps(X[c0 + c] + k), a0[c]);
        a1[c] = _mm512_fmadd_ps(w1, _mm512_loadu_ps(X[c0 + c] + k + 16), a1[c]);
      }
    }
    if (k + 16 <= n) {
      __m512 w0 = _mm512_loadu_ps(w + k);
      for (int c = 0; c < nc; ++c)
        a0[c] = _mm512_fmadd_ps(w0, _mm512_loadu_ps(X[c0 + c] + k), a0[c]);
      k += 16;
    }
    if (k < n) {
      __mmask16 m = static_cast<__mmask16>((1u << (n - k)) - 1u);
      __m512 w1 = _mm512_maskz_loadu_ps(m, w + k);
      for (int c = 0; c < nc; ++c)
        a1[c] = _mm512_fmadd_ps(w1, _mm512_maskz_loadu_ps(m, X[c0 + c] + k), a1[c]);
    }
    for (int c = 0; c < nc; ++c) Y[c0 + c][r] = reduce16(_mm512_add_ps(a0[c], a1[c]));
  }
}

void matvec_cols(const float* W, int ld, int rows, int n,
                 const float* const* X, float* const* Y, int ncols) {
  for (int c0 = 0; c0 < ncols; c0 += 8)
    matvec_tile(W, ld, rows, n, X, Y, c0, std::min(8, ncols - c0));
}

#else

void matvec_cols(const float* W, int ld, int rows, int n,
                 const float* const* X, float* const* Y, int ncols) {
  // Scalar build: plain per-column matvec is already the same bits.
  for (int c = 0; c < ncols; ++c) matvec(W, ld, rows, n, X[c], Y[c]);
}

#endif

// ===================== elementwise =====================

void add_bias(float* y, const float* b, int n) {
  for (int i = 0; i < n; ++i) y[i] += b[i];
}

void relu(float* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = y[i] > 0.0f ? y[i] : 0.0f;
}

void mul(float* y, const float* a, const float* m, int n) {
  for (int i = 0; i < n; ++i) y[i] = a[i] * m[i];
}

// ===================== sigmoid / tanh =====================
//
// exp via base-2 range reduction and a degree-7 Taylor polynomial evaluated
// with explicit fmaf; identical scalar formula in both builds. Assumes the
// default round-to-nearest-even FP environment (never changed by this
// library). Inputs are clamped, so no overflow paths are reachable.

namespace {

constexpr float kLog2E = 1.44269504088896341f;
constexpr float kLn2Hi = 0.693359375f;            // exact in float
constexpr float kLn2Lo = -2.12194440e-4f;
constexpr float kExpClamp = 87.0f;

inline float exp_fixed(float t) {
  t = std::min(std::max(t, -kExpClamp), kExpClamp);
  float z = t * kLog2E;
  float nf = std::nearbyintf(z);
  float r = std::fmaf(nf, -kLn2Hi, t);
  r = std::fmaf(nf, -kLn2Lo, r);
  float p = 1.9841270e-4f;                        // 1/5040
  p = std::fmaf(p, r, 1.3888889e-3f);             // 1/720
  p = std::fmaf(p, r, 8.3333333e-3f);             // 1/120
  p = std::fmaf(p, r, 4.1666667e-2f);             // 1/24
  p = std::fmaf(p, r, 1.6666667e-1f);             // 1/6
  p = std::fmaf(p, r, 0.5f);
  p = std::fmaf(p, r, 1.0f);
  p = std::fmaf(p, r, 1.0f);
  // p * 2^n, built directly in the exponent field. The clamp above keeps
  // n within [-126, 126], so the result is a normal float (== ldexpf).
  std::uint32_t bits = static_cast<std::uint32_t>(127 + static_cast<int>(nf)) << 23;
  float scale;
  std::memcpy(&scale, &bits, sizeof scale);
  return p * scale;
}

inline float sigmoid_fixed(float x) {
  // Saturate outside the exp clamp so extreme inputs land on exactly 0 / 1
  // instead of the clamped residual 1/(1 + e^87).
  if (x <= -kExpClamp) return 0.0f;
  if (x >= kExpClamp) return 1.0f;
  return 1.0f / (1.0f + exp_fixed(-x));
}

constexpr float kTanhTiny = 0.000244140625f;  // 2^-12: below this, tanh(x) == x in float

inline float tanh_fixed(float x) {
  if (std::fabs(x) < kTanhTiny) return x;
  return std::fmaf(2.0f, sigmoid_fixed(x + x), -1.0f);
}

}  // namespace

void vsigmoid(float* x, int n) {
  for (int i = 0; i < n; ++i) x[i] = sigmoid_fixed(x[i]);
}

void vtanh(float* x, int n) {
  for (int i = 0; i < n; ++i) x[i] = tanh_fixed(x[i]);
}

void lstm_cell(float* gates, float* h, float* c, int n) {
  float* gi = gates;
  float* gf = gates + n;
  float* gg = gates + 2 * n;
  float* go = gates + 3 * n;
  vsigmoid(gi, n);
  vsigmoid(gf, n);
  vtanh(gg, n);
  vsigmoid(go, n);
  for (int j = 0; j < n; ++j) {
    c[j] = std::fmaf(gf[j], c[j], gi[j] * gg[j]);
    h[j] = go[j] * tanh_fixed(c[j]);
  }
}

}  // namespace avse::kern
