// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Fixed-order float kernels.
//
// Every dot product in the engine runs through kern::dot or a wrapper around
// it. The accumulation structure (two 16-lane chains over 32-element blocks,
// one masked tail, one fixed reduction tree) is a pure function of the length
// n — never of how many columns are processed together, never of the caller.
// That makes batched and one-at-a-time evaluation bit-identical, which in
// turn makes streaming output independent of how the input was chunked.
//
// All helpers are defined out-of-line in one translation unit on purpose:
// a single code-gen instance means a single rounding behavior shared by every
// call site (no inline-context-dependent FMA contraction).
#pragma once

#include <cstdint>

namespace avse::kern {

// Dot product of w[0..n) and x[0..n) with the fixed accumulation structure.
float dot(const float* w, const float* x, int n);

// y[r] = dot(W + r*ld, x, n). `ld` is the row stride of W in floats.
void matvec(const float* W, int ld, int rows, int n, const float* x, float* y);

// Y[c][r] = dot(W + r*ld, X[c], n) for c in [0, ncols).
// Bit-identical per column to matvec; streams each W row once per tile of
// up to 8 columns instead of once per column.
void matvec_cols(const float* W, int ld, int rows, int n,
                 const float* const* X, float* const* Y, int ncols);

// y[i] += b[i]
void add_bias(float* y, const float* b, int n);
// y[i] = max(y[i], 0)
void relu(float* y, int n);
// y[i] = a[i] * m[i]
void mul(float* y, const float* a, const float* m, int n);

// In-place logistic sigmoid / tanh using a fixed polynomial exp.
// Absolute error < 3e-7; identical bits for identical inputs everywhere.
void vsigmoid(float* x, int n);
void vtanh(float* x, int n);

// LSTM cell elementwise update, shared by every LSTM in the engine:
//   c[j] = fma(f[j], c[j], i[j]*g[j]);  h[j] = o[j] * tanh(c[j])
// where gates = [i | f | g | o] (4 blocks of length n) holds pre-activations
// on entry and is clobbered.
void lstm_cell(float* gates, float* h, float* c, int n);

}  // namespace avse::kern
