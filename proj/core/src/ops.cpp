// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/ops.hpp"

#include <algorithm>
#include <cstring>

#include "avse/kernels.hpp"

namespace avse::nn {

namespace {

int conv_out_len(int t_padded, int kernel, int stride) {
  return (t_padded - kernel) / stride + 1;
}

void apply_act(Act act, float* y, int n) {
  if (act == Act::relu) kern::relu(y, n);
}

}  // namespace

// ===== conv1d =====

Tensor conv1d(const Tensor& x, const Conv1DSpec& spec, const Tensor& w, const Tensor* b) {
  require(spec.in_channels >= 1 && spec.out_channels >= 1, "conv1d: channels must be >= 1");
  require(spec.groups >= 1 && spec.in_channels % spec.groups == 0 &&
              spec.out_channels % spec.groups == 0,
          "conv1d: channels must divide groups");
  require(spec.stride >= 1 && spec.stride <= spec.kernel, "conv1d: need 1 <= stride <= kernel");
  require(x.shape.size() == 2 && x.dim(0) == spec.in_channels, "conv1d: x must be [Cin, T]");
  const int cin_g = spec.in_channels / spec.groups;
  const int cout_g = spec.out_channels / spec.groups;
  require(static_cast<int>(w.numel()) == spec.out_channels * cin_g * spec.kernel,
          "conv1d: weight shape mismatch");
  require(!spec.bias || (b && static_cast<int>(b->numel()) == spec.out_channels),
          "conv1d: bias shape mismatch");

  const int T = x.dim(1);
  const int pad = spec.causal_pad ? spec.kernel - spec.stride : 0;
  require(T + pad >= spec.kernel, "conv1d: input shorter than kernel");
  const int Tout = conv_out_len(T + pad, spec.kernel, spec.stride);
  const int n = cin_g * spec.kernel;

  Tensor y = Tensor::zeros({spec.out_channels, Tout});
  std::vector<float> win(static_cast<std::size_t>(n));
  for (int t = 0; t < Tout; ++t) {
    const int start = t * spec.stride - pad;  // may be negative into the pad
    for (int g = 0; g < spec.groups; ++g) {
      // Gather the window channel-major: [ci, k].
      for (int ci = 0; ci < cin_g; ++ci) {
        const float* row = x.ptr() + static_cast<std::size_t>(g * cin_g + ci) * T;
        for (int k = 0; k < spec.kernel; ++k) {
          const int idx = start + k;
          win[static_cast<std::size_t>(ci) * spec.kernel + k] =
              (idx >= 0 && idx < T) ? row[idx] : 0.0f;
        }
      }
      for (int co = 0; co < cout_g; ++co) {
        const int oc = g * cout_g + co;
        float v = kern::dot(w.ptr() + static_cast<std::size_t>(oc) * n, win.data(), n);
        if (spec.bias) v += b->data[oc];
        y.data[static_cast<std::size_t>(oc) * Tout + t] = v;
      }
    }
  }
  apply_act(spec.activation, y.ptr(), static_cast<int>(y.numel()));
  return y;
}

// ===== conv2d =====

Tensor conv2d(const Tensor& x, const Conv2DSpec& spec, const Tensor& w, const Tensor* b) {
  require(spec.groups >= 1 && spec.in_channels % spec.groups == 0 &&
              spec.out_channels % spec.groups == 0,
          "conv2d: channels must divide groups");
  require(x.shape.size() == 3 && x.dim(0) == spec.in_channels, "conv2d: x must be [Cin, H, W]");
  const int cin_g = spec.in_channels / spec.groups;
  const int cout_g = spec.out_channels / spec.groups;
  const int K = spec.kernel;
  require(static_cast<int>(w.numel()) == spec.out_channels * cin_g * K * K,
          "conv2d: weight shape mismatch");
  require(!spec.bias || (b && static_cast<int>(b->numel()) == spec.out_channels),
          "conv2d: bias shape mismatch");

  const int H = x.dim(1), W = x.dim(2);
  const int pad = K / 2;
  const int Ho = conv_out_len(H + 2 * pad, K, spec.stride);
  const int Wo = conv_out_len(W + 2 * pad, K, spec.stride);
  const int n = cin_g * K * K;

  Tensor y = Tensor::zeros({spec.out_channels, Ho, Wo});
  std::vector<float> win(static_cast<std::size_t>(n));
  for (int oy = 0; oy < Ho; ++oy) {
    for (int ox = 0; ox < Wo; ++ox) {
      const int y0 = oy * spec.stride - pad;
      const int x0 = ox * spec.stride - pad;
      for (int g = 0; g < spec.groups; ++g) {
        float* wp = win.data();
        for (int ci = 0; ci < cin_g; ++ci) {
          const float* plane = x.ptr() + static_cast<std::size_t>(g * cin_g + ci) * H * W;
          for (int ky = 0; ky < K; ++ky) {
            const int iy = y0 + ky;
            for (int kx = 0; kx < K; ++kx) {
              const int ix = x0 + kx;
              *wp++ = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                          ? plane[static_cast<std::size_t>(iy) * W + ix]
                          : 0.0f;
            }
          }
        }
        for (int co = 0; co < cout_g; ++co) {
          const int oc = g * cout_g + co;
          float v = kern::dot(w.ptr() + static_cast<std::size_t>(oc) * n, win.data(), n);
          if (spec.bias) v += b->data[oc];
          y.data[(static_cast<std::size_t>(oc) * Ho + oy) * Wo + ox] = v;
        }
      }
    }
  }
  return y;
}

Tensor depthwise_separable_conv2d(const Tensor& x, const Conv2DSpec& dw_spec,
                                  const Conv2DSpec& pw_spec, const Tensor& dw_w,
                                  const Tensor* dw_b, const Tensor& pw_w, const Tensor* pw_b) {
  require(dw_spec.groups == dw_spec.in_channels && dw_spec.out_channels == dw_spec.in_channels,
          "depthwise stage must have one filter per channel");
  require(pw_spec.kernel == 1 && pw_spec.groups == 1, "pointwise stage must be 1x1, groups 1");
  require(pw_spec.in_channels == dw_spec.out_channels,
          "channel mismatch between depthwise and pointwise stages");
  Tensor mid = conv2d(x, dw_spec, dw_w, dw_b);
  return conv2d(mid, pw_spec, pw_w, pw_b);
}

// ===== conv3d (causal temporal axis) =====

Tensor conv3d_causal(const Tensor& x, const Conv3DSpec& spec, const Tensor& w, const Tensor* b) {
  require(x.shape.size() == 4 && x.dim(0) == spec.in_channels,
          "conv3d_causal: x must be [Cin, T, H, W]");
  const int Kt = spec.kernel_t, K = spec.kernel;
  require(static_cast<int>(w.numel()) == spec.out_channels * spec.in_channels * Kt * K * K,
          "conv3d_causal: weight shape mismatch");
  require(!spec.bias || (b && static_cast<int>(b->numel()) == spec.out_channels),
          "conv3d_causal: bias shape mismatch");

  const int T = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int pad = K / 2;
  const int Ho = conv_out_len(H + 2 * pad, K, spec.stride);
  const int Wo = conv_out_len(W + 2 * pad, K, spec.stride);
  const int n = spec.in_channels * Kt * K * K;

  Tensor y = Tensor::zeros({spec.out_channels, T, Ho, Wo});
  std::vector<float> win(static_cast<std::size_t>(n));
  for (int t = 0; t < T; ++t) {
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        const int y0 = oy * spec.stride - pad;
        const int x0 = ox * spec.stride - pad;
        float* wp = win.data();
        for (int ci = 0; ci < spec.in_channels; ++ci) {
          for (int kt = 0; kt < Kt; ++kt) {
            const int it = t - (Kt - 1) + kt;  // left-only temporal pad
            for (int ky = 0; ky < K; ++ky) {
              const int iy = y0 + ky;
              for (int kx = 0; kx < K; ++kx) {
                const int ix = x0 + kx;
                const bool in =
                    it >= 0 && it < T && iy >= 0 && iy < H && ix >= 0 && ix < W;
                *wp++ = in ? x.data[((static_cast<std::size_t>(ci) * T + it) * H + iy) * W + ix]
                           : 0.0f;
              }
            }
          }
        }
        for (int co = 0; co < spec.out_channels; ++co) {
          float v = kern::dot(w.ptr() + static_cast<std::size_t>(co) * n, win.data(), n);
          if (spec.bias) v += b->data[co];
          y.data[((static_cast<std::size_t>(co) * T + t) * Ho + oy) * Wo + ox] = v;
        }
      }
    }
  }
  return y;
}

// ===== lstm =====

void lstm_step_pre(const LstmSpec& spec, const float* gx, LstmState& state,
                   const float* Wh, const float* b, float* y) {
  const int H = spec.hidden_size;
  require(static_cast<int>(state.h.size()) == H && static_cast<int>(state.c.size()) == H,
          "lstm: state size mismatch");
  thread_local std::vector<float> gates;
  gates.resize(static_cast<std::size_t>(4) * H);
  kern::matvec(Wh, H, 4 * H, H, state.h.data(), gates.data());
  kern::add_bias(gates.data(), gx, 4 * H);  // addition commutes bit-exactly
  if (spec.bias) kern::add_bias(gates.data(), b, 4 * H);
  kern::lstm_cell(gates.data(), state.h.data(), state.c.data(), H);
  std::memcpy(y, state.h.data(), static_cast<std::size_t>(H) * sizeof(float));
}

void lstm_step(const LstmSpec& spec, const float* x, LstmState& state,
               const float* Wx, const float* Wh, const float* b, float* y) {
  const int D = spec.input_size, H = spec.hidden_size;
  thread_local std::vector<float> gx;
  gx.resize(static_cast<std::size_t>(4) * H);
  kern::matvec(Wx, D, 4 * H, D, x, gx.data());
  lstm_step_pre(spec, gx.data(), state, Wh, b, y);
}

// ===== overlap-add =====

std::vector<float> overlap_add(const Tensor& frames, int stride) {
  require(frames.shape.size() == 2 && frames.dim(0) >= 1, "overlap_add: need [T', L], T' >= 1");
  const int T = frames.dim(0), L = frames.dim(1);
  require(stride >= 1 && stride <= L, "overlap_add: need 1 <= stride <= frame length");
  std::vector<float> out(static_cast<std::size_t>(T - 1) * stride + L, 0.0f);
  for (int t = 0; t < T; ++t) {
    const float* f = frames.ptr() + static_cast<std::size_t>(t) * L;
    float* o = out.data() + static_cast<std::size_t>(t) * stride;
    for (int i = 0; i < L; ++i) o[i] += f[i];
  }
  return out;
}

// ===== cost =====

LayerCost layer_cost(const LayerSpec& spec) {
  LayerCost c;
  if (const auto* s = std::get_if<Conv1DSpec>(&spec)) {
    const std::uint64_t cin_g = static_cast<std::uint64_t>(s->in_channels) / s->groups;
    c.params = static_cast<std::uint64_t>(s->out_channels) * cin_g * s->kernel +
               (s->bias ? s->out_channels : 0);
    c.macs_per_frame = static_cast<std::uint64_t>(s->out_channels) * cin_g * s->kernel;
  } else if (const auto* s = std::get_if<Conv2DSpec>(&spec)) {
    const std::uint64_t cin_g = static_cast<std::uint64_t>(s->in_channels) / s->groups;
    const std::uint64_t kk = static_cast<std::uint64_t>(s->kernel) * s->kernel;
    const int pad = s->kernel / 2;
    const std::uint64_t ho = conv_out_len(s->in_h + 2 * pad, s->kernel, s->stride);
    const std::uint64_t wo = conv_out_len(s->in_w + 2 * pad, s->kernel, s->stride);
    c.params = static_cast<std::uint64_t>(s->out_channels) * cin_g * kk +
               (s->bias ? s->out_channels : 0);
    c.macs_per_frame = ho * wo * s->out_channels * cin_g * kk;
  } else if (const auto* s = std::get_if<Conv3DSpec>(&spec)) {
    const std::uint64_t kv = static_cast<std::uint64_t>(s->kernel_t) * s->kernel * s->kernel;
    const int pad = s->kernel / 2;
    const std::uint64_t ho = conv_out_len(s->in_h + 2 * pad, s->kernel, s->stride);
    const std::uint64_t wo = conv_out_len(s->in_w + 2 * pad, s->kernel, s->stride);
    c.params = static_cast<std::uint64_t>(s->out_channels) * s->in_channels * kv +
               (s->bias ? s->out_channels : 0);
    c.macs_per_frame = ho * wo * s->out_channels * s->in_channels * kv;
  } else if (const auto* s = std::get_if<LstmSpec>(&spec)) {
    const std::uint64_t dh = static_cast<std::uint64_t>(s->input_size) + s->hidden_size;
    c.params = 4ull * (s->hidden_size * dh + (s->bias ? s->hidden_size : 0));
    c.macs_per_frame = 4ull * s->hidden_size * dh;
  } else if (const auto* s = std::get_if<LinearSpec>(&spec)) {
    c.params = static_cast<std::uint64_t>(s->in) * s->out + (s->bias ? s->out : 0);
    c.macs_per_frame = static_cast<std::uint64_t>(s->in) * s->out;
  }
  return c;
}

}  // namespace avse::nn
