// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Deterministic neural primitives. Layouts are channels-first and row-major;
// inner products accumulate channel-major through kern::dot, so results are
// reproducible bit-for-bit across calls and chunkings.
#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "avse/common.hpp"

namespace avse::nn {

enum class Act { none, relu };

// ===== specs =====

struct Conv1DSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int groups = 1;
  bool causal_pad = true;  // logically prepend (kernel - stride) zeros
  bool bias = true;
  Act activation = Act::none;
};

// Symmetric spatial zero padding of floor(kernel/2) on both axes.
struct Conv2DSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;     // square
  int stride = 1;
  int groups = 1;
  bool bias = true;
  int in_h = 0;       // input spatial extents; used by layer_cost
  int in_w = 0;
};

// Temporal axis: left-only zero padding of (kernel_t - 1) frames (causal).
// Spatial axes: symmetric padding, stride 1 temporally.
struct Conv3DSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_t = 3;
  int kernel = 3;     // square spatial
  int stride = 1;     // spatial only
  bool bias = true;
  int in_h = 0;
  int in_w = 0;
};

struct LstmSpec {
  int input_size = 1;
  int hidden_size = 1;
  bool bias = true;
};

struct LinearSpec {
  int in = 1;
  int out = 1;
  bool bias = true;
};

// Fresh state is all zeros.
struct LstmState {
  std::vector<float> h, c;
  explicit LstmState(int hidden = 0) : h(hidden, 0.0f), c(hidden, 0.0f) {}
  void reset() {
    std::fill(h.begin(), h.end(), 0.0f);
    std::fill(c.begin(), c.end(), 0.0f);
  }
};

// ===== ops =====

// x: [Cin, T]; w: [Cout, Cin/groups, K]; b: [Cout] or null.
// Output frame t covers padded input [t*stride, t*stride + K); with the
// causal pad that window never reads past original sample t*stride + K - 1
// - pad, so no output frame depends on future samples.
Tensor conv1d(const Tensor& x, const Conv1DSpec& spec, const Tensor& w, const Tensor* b);

// x: [Cin, H, W]; w: [Cout, Cin/groups, k, k]; b: [Cout] or null.
Tensor conv2d(const Tensor& x, const Conv2DSpec& spec, const Tensor& w, const Tensor* b);

// Depthwise (groups == C) then pointwise (1x1) stage.
Tensor depthwise_separable_conv2d(const Tensor& x, const Conv2DSpec& dw_spec,
                                  const Conv2DSpec& pw_spec, const Tensor& dw_w,
                                  const Tensor* dw_b, const Tensor& pw_w, const Tensor* pw_b);

// x: [Cin, T, H, W]; w: [Cout, Cin, kt, k, k]; b: [Cout] or null.
// Output frame t depends only on input frames <= t.
Tensor conv3d_causal(const Tensor& x, const Conv3DSpec& spec, const Tensor& w, const Tensor* b);

// One recurrent step. Wx: [4H, D], Wh: [4H, H], gate rows blocked
// [input | forget | cell | output]; y == updated h. The input and recurrent
// matrices are separate dense tensors so the per-step recurrence streams
// contiguous memory. The gx variant takes the x-side contribution
// precomputed (gx[r] = dot(Wx[r], x)) so batched and one-at-a-time
// evaluation share bits.
void lstm_step(const LstmSpec& spec, const float* x, LstmState& state,
               const float* Wx, const float* Wh, const float* b, float* y);
void lstm_step_pre(const LstmSpec& spec, const float* gx, LstmState& state,
                   const float* Wh, const float* b, float* y);

// frames: [T', L], stride S <= L. Output length (T'-1)*S + L; every output
// sample is the sum of all frames covering it, added in frame order.
std::vector<float> overlap_add(const Tensor& frames, int stride);

// ===== cost formulas =====

using LayerSpec = std::variant<Conv1DSpec, Conv2DSpec, Conv3DSpec, LstmSpec, LinearSpec>;

struct LayerCost {
  std::uint64_t params = 0;
  std::uint64_t macs_per_frame = 0;  // per output frame (1-D: one time step;
                                     // 2-D/3-D: one full video frame; LSTM /
                                     // linear: one step)
};

// One MAC = one scalar multiply inside a convolution, linear, or recurrent
// kernel. Biases count as params, never as MACs; activations, pooling, and
// elementwise products are excluded.
LayerCost layer_cost(const LayerSpec& spec);

}  // namespace avse::nn
