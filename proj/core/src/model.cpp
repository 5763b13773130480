// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/model.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include "avse/kernels.hpp"
#include "avse/rng.hpp"

namespace avse {

// ===== configuration =====

void ModelConfig::validate() const {
  require(sample_rate > 0 && enc_channels > 0 && enc_kernel > 0 && enc_stride > 0,
          "config: core sizes must be positive");
  require(enc_stride <= enc_kernel, "config: encoder stride must not exceed kernel");
  require(sample_rate % enc_stride == 0, "config: sample_rate must be divisible by stride");
  require(skim_hidden > 0 && skim_layers > 0 && skim_segment >= 1,
          "config: extractor sizes must be positive");
  require(visual_fps > 0 && visual_dim > 0 && visual_base > 0 && lip_h > 0 && lip_w > 0,
          "config: visual sizes must be positive");
  require(acoustic_dim > 0 && acoustic_hidden > 0, "config: acoustic sizes must be positive");
  const double f = static_cast<double>(frame_rate()) / visual_fps;
  require(std::fabs(f - std::round(f)) < 1e-9 && f >= 1.0,
          "config: audio frame rate must be an integer multiple of visual_fps");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.sample_rate = 1600;
  c.enc_channels = 8;
  c.skim_hidden = 8;
  c.skim_layers = 2;
  c.skim_segment = 4;
  c.visual_dim = 4;
  c.visual_base = 2;
  c.lip_h = 8;
  c.lip_w = 8;
  c.acoustic_dim = 4;
  c.acoustic_hidden = 4;
  return c;
}

std::int64_t frames_for_samples(const ModelConfig& cfg, std::int64_t n) {
  if (n <= 0) return 0;
  return n / cfg.enc_stride;
}

// ===== layer declarations =====

std::vector<LayerDecl> enumerate_layers(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<LayerDecl> out;

  nn::Conv1DSpec enc;
  enc.in_channels = 1;
  enc.out_channels = cfg.enc_channels;
  enc.kernel = cfg.enc_kernel;
  enc.stride = cfg.enc_stride;
  enc.bias = true;
  enc.activation = nn::Act::relu;
  out.push_back({"enc.conv", enc, Subsystem::speech_encoder, Rate::audio});

  // Visual stack: causal 3-D front conv, then five depthwise-separable
  // blocks with spatial stride 2 in blocks 1, 3, 5, then a global average
  // pool (free) down to visual_dim.
  {
    const auto ch = cfg.visual_channels();
    nn::Conv3DSpec front;
    front.in_channels = 1;
    front.out_channels = ch[0];
    front.kernel_t = 3;
    front.kernel = 3;
    front.stride = 1;
    front.bias = true;
    front.in_h = cfg.lip_h;
    front.in_w = cfg.lip_w;
    out.push_back({"visual.front", front, Subsystem::visual, Rate::video});

    int h = cfg.lip_h, w = cfg.lip_w;
    for (int i = 1; i <= 5; ++i) {
      const int cin = ch[i - 1], cout = ch[i];
      const int stride = (i % 2 == 1) ? 2 : 1;
      nn::Conv2DSpec dw;
      dw.in_channels = cin;
      dw.out_channels = cin;
      dw.kernel = 3;
      dw.stride = stride;
      dw.groups = cin;
      dw.bias = true;
      dw.in_h = h;
      dw.in_w = w;
      h = (h + 2 * 1 - 3) / stride + 1;
      w = (w + 2 * 1 - 3) / stride + 1;
      nn::Conv2DSpec pw;
      pw.in_channels = cin;
      pw.out_channels = cout;
      pw.kernel = 1;
      pw.stride = 1;
      pw.bias = true;
      pw.in_h = h;
      pw.in_w = w;
      const std::string base = "visual.block" + std::to_string(i);
      out.push_back({base + ".dw", dw, Subsystem::visual, Rate::video});
      out.push_back({base + ".pw", pw, Subsystem::visual, Rate::video});
    }
  }

  // Acoustic branch: bias-free throughout so zero input and zero state give
  // exactly zero embeddings (the placeholder identity is bit-exact).
  if (cfg.use_acoustic_encoder) {
    nn::Conv1DSpec aenc = enc;
    aenc.bias = false;
    out.push_back({"acoustic.enc", aenc, Subsystem::acoustic, Rate::audio});

    nn::Conv1DSpec c1;
    c1.in_channels = cfg.enc_channels;
    c1.out_channels = cfg.acoustic_hidden;
    c1.kernel = 3;
    c1.stride = 1;
    c1.bias = false;
    c1.activation = nn::Act::relu;
    out.push_back({"acoustic.conv1", c1, Subsystem::acoustic, Rate::audio});

    nn::Conv1DSpec c2 = c1;
    c2.in_channels = cfg.acoustic_hidden;
    out.push_back({"acoustic.conv2", c2, Subsystem::acoustic, Rate::audio});

    nn::LstmSpec al;
    al.input_size = cfg.acoustic_hidden;
    al.hidden_size = cfg.acoustic_hidden;
    al.bias = false;
    out.push_back({"acoustic.lstm", al, Subsystem::acoustic, Rate::audio});

    nn::LinearSpec ap;
    ap.in = cfg.acoustic_hidden;
    ap.out = cfg.acoustic_dim;
    ap.bias = false;
    out.push_back({"acoustic.proj", ap, Subsystem::acoustic, Rate::audio});
  }

  nn::LinearSpec inproj;
  inproj.in = cfg.fused_dim();
  inproj.out = cfg.skim_hidden;
  inproj.bias = true;
  out.push_back({"skim.inproj", inproj, Subsystem::extractor, Rate::audio});

  for (int i = 1; i <= cfg.skim_layers; ++i) {
    nn::LstmSpec l;
    l.input_size = cfg.skim_hidden;
    l.hidden_size = cfg.skim_hidden;
    l.bias = true;
    const std::string base = "skim.block" + std::to_string(i);
    out.push_back({base + ".seg", l, Subsystem::extractor, Rate::audio});
    out.push_back({base + ".mem", l, Subsystem::extractor, Rate::segment});
  }

  nn::LinearSpec outproj;
  outproj.in = cfg.skim_hidden;
  outproj.out = cfg.enc_channels;
  outproj.bias = true;
  out.push_back({"skim.outproj", outproj, Subsystem::extractor, Rate::audio});

  nn::LinearSpec dec;
  dec.in = cfg.enc_channels;
  dec.out = cfg.enc_kernel;
  dec.bias = true;
  out.push_back({"dec.linear", dec, Subsystem::speech_decoder, Rate::audio});

  return out;
}

// ===== weights =====

const Tensor& WeightStore::get(const std::string& name) const {
  auto it = tensors.find(name);
  require(it != tensors.end(), "weights: missing tensor '" + name + "'");
  return it->second;
}

namespace {

struct TensorPlan {
  // Suffix (".w", ".b"; LSTMs split into ".wx"/".wh") -> shape.
  std::vector<std::pair<std::string, std::vector<int>>> tensors;
  int fan_in = 1;
};

TensorPlan plan_for(const nn::LayerSpec& spec) {
  TensorPlan p;
  if (const auto* s = std::get_if<nn::Conv1DSpec>(&spec)) {
    const int cin_g = s->in_channels / s->groups;
    p.tensors.emplace_back(".w", std::vector<int>{s->out_channels, cin_g, s->kernel});
    if (s->bias) p.tensors.emplace_back(".b", std::vector<int>{s->out_channels});
    p.fan_in = cin_g * s->kernel;
  } else if (const auto* s = std::get_if<nn::Conv2DSpec>(&spec)) {
    const int cin_g = s->in_channels / s->groups;
    p.tensors.emplace_back(".w",
                           std::vector<int>{s->out_channels, cin_g, s->kernel, s->kernel});
    if (s->bias) p.tensors.emplace_back(".b", std::vector<int>{s->out_channels});
    p.fan_in = cin_g * s->kernel * s->kernel;
  } else if (const auto* s = std::get_if<nn::Conv3DSpec>(&spec)) {
    p.tensors.emplace_back(
        ".w", std::vector<int>{s->out_channels, s->in_channels, s->kernel_t, s->kernel,
                               s->kernel});
    if (s->bias) p.tensors.emplace_back(".b", std::vector<int>{s->out_channels});
    p.fan_in = s->in_channels * s->kernel_t * s->kernel * s->kernel;
  } else if (const auto* s = std::get_if<nn::LstmSpec>(&spec)) {
    p.tensors.emplace_back(".wx", std::vector<int>{4 * s->hidden_size, s->input_size});
    p.tensors.emplace_back(".wh", std::vector<int>{4 * s->hidden_size, s->hidden_size});
    if (s->bias) p.tensors.emplace_back(".b", std::vector<int>{4 * s->hidden_size});
    p.fan_in = s->input_size + s->hidden_size;
  } else if (const auto* s = std::get_if<nn::LinearSpec>(&spec)) {
    p.tensors.emplace_back(".w", std::vector<int>{s->out, s->in});
    if (s->bias) p.tensors.emplace_back(".b", std::vector<int>{s->out});
    p.fan_in = s->in;
  }
  return p;
}

Tensor draw_tensor(std::vector<int> shape, float k, std::uint64_t seed, const std::string& name,
                   bool nonneg) {
  Tensor t = Tensor::zeros(std::move(shape));
  Rng rng = rng_for(seed, name);
  if (nonneg) {
    for (auto& v : t.data) v = rng.next_unit() * k;
  } else {
    for (auto& v : t.data) v = rng.next_symmetric(k);
  }
  return t;
}

}  // namespace

WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  WeightStore store;
  for (const auto& decl : enumerate_layers(cfg)) {
    TensorPlan p = plan_for(decl.spec);
    const float k = 1.0f / std::sqrt(static_cast<float>(p.fan_in));
    for (const auto& [suffix, shape] : p.tensors) {
      const std::string name = decl.path + suffix;
      // Biases start non-negative: a uniform [-k, k] bias can leave a whole
      // ReLU channel dead at init, and narrow stages (few channels) then have
      // a real chance of zeroing the entire path behind them.
      store.tensors[name] = draw_tensor(shape, k, seed, name, suffix == ".b");
    }
  }
  return store;
}

void audit_weights(const ModelConfig& cfg, const WeightStore& store, bool allow_extra) {
  std::set<std::string> declared;
  for (const auto& decl : enumerate_layers(cfg)) {
    TensorPlan p = plan_for(decl.spec);
    for (const auto& [suffix, shape] : p.tensors) {
      const Tensor& t = store.get(decl.path + suffix);
      require(t.shape == shape, "weights: shape mismatch for '" + decl.path + suffix + "'");
      declared.insert(decl.path + suffix);
    }
  }
  if (!allow_extra)
    for (const auto& [name, t] : store.tensors)
      require(declared.count(name) != 0, "weights: '" + name + "' is not a declared tensor");
}

// ===== speech encoder / decoder =====

EmbeddingSeq speech_encode(const std::vector<float>& x, const ModelConfig& cfg,
                           const WeightStore& w) {
  require(!x.empty(), "speech_encode: empty signal");
  const int S = cfg.enc_stride, K = cfg.enc_kernel, C = cfg.enc_channels;
  const int pad = K - S;
  const std::int64_t T = frames_for_samples(cfg, static_cast<std::int64_t>(x.size()));
  require(T >= 1, "speech_encode: signal shorter than one stride");

  const float* ew = w.w("enc.conv");
  const float* eb = w.b("enc.conv");
  EmbeddingSeq e;
  e.frames = Tensor::zeros({static_cast<int>(T), C});
  e.frame_rate = cfg.frame_rate();
  std::vector<float> win(static_cast<std::size_t>(K));
  for (std::int64_t t = 0; t < T; ++t) {
    const std::int64_t start = t * S - pad;
    const float* src;
    if (start >= 0) {
      src = x.data() + start;
    } else {
      for (int i = 0; i < K; ++i) {
        const std::int64_t idx = start + i;
        win[i] = idx >= 0 ? x[static_cast<std::size_t>(idx)] : 0.0f;
      }
      src = win.data();
    }
    float* row = e.frames.ptr() + static_cast<std::size_t>(t) * C;
    kern::matvec(ew, K, C, K, src, row);
    kern::add_bias(row, eb, C);
    kern::relu(row, C);
  }
  return e;
}

std::vector<float> speech_decode(const EmbeddingSeq& e, const ModelConfig& cfg,
                                 const WeightStore& w) {
  require(e.frames.shape.size() == 2 && e.frames.dim(1) == cfg.enc_channels,
          "speech_decode: embeddings must be [T, enc_channels]");
  const int T = e.frames.dim(0);
  require(T >= 1, "speech_decode: zero frames");
  const int S = cfg.enc_stride, K = cfg.enc_kernel, C = cfg.enc_channels;
  const int pad = K - S;

  const float* dw = w.w("dec.linear");
  const float* db = w.b("dec.linear");
  std::vector<float> out(static_cast<std::size_t>(T) * S, 0.0f);
  std::vector<float> frame(static_cast<std::size_t>(K));
  for (int t = 0; t < T; ++t) {
    kern::matvec(dw, C, K, C, e.frames.ptr() + static_cast<std::size_t>(t) * C, frame.data());
    kern::add_bias(frame.data(), db, K);
    const std::int64_t base = static_cast<std::int64_t>(t) * S - pad;
    for (int i = 0; i < K; ++i) {
      const std::int64_t idx = base + i;
      if (idx >= 0 && idx < static_cast<std::int64_t>(out.size()))
        out[static_cast<std::size_t>(idx)] += frame[i];
    }
  }
  return out;
}

// ===== visual encoder =====

namespace {

// One output frame of the front causal 3-D conv + the block stack + pool.
// prev2/prev1 may be null (zeros) near the stream start.
void visual_frame(const float* prev2, const float* prev1, const float* cur,
                  const ModelConfig& cfg, const WeightStore& w, float* emb) {
  const int H = cfg.lip_h, W = cfg.lip_w;
  const auto ch = cfg.visual_channels();

  // Front conv, evaluated for this output frame only. The window gather
  // ([kt][ky][kx], zeros outside) and the per-channel dot are exactly those
  // of nn::conv3d_causal on the full clip.
  const float* fw = w.w("visual.front");
  const float* fb = w.b("visual.front");
  const float* planes[3] = {prev2, prev1, cur};
  Tensor x = Tensor::zeros({ch[0], H, W});
  {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const int n = 3 * 3 * 3;
    float win[27];
    for (int oy = 0; oy < H; ++oy) {
      for (int ox = 0; ox < W; ++ox) {
        float* wp = win;
        for (int kt = 0; kt < 3; ++kt) {
          const float* p = planes[kt];
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy - 1 + ky;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox - 1 + kx;
              const bool in = p != nullptr && iy >= 0 && iy < H && ix >= 0 && ix < W;
              *wp++ = in ? p[static_cast<std::size_t>(iy) * W + ix] : 0.0f;
            }
          }
        }
        for (int co = 0; co < ch[0]; ++co)
          x.data[static_cast<std::size_t>(co) * plane + static_cast<std::size_t>(oy) * W + ox] =
              kern::dot(fw + static_cast<std::size_t>(co) * n, win, n) + fb[co];
      }
    }
  }
  kern::relu(x.ptr(), static_cast<int>(x.numel()));

  int h = H, wd = W;
  for (int i = 1; i <= 5; ++i) {
    const int cin = ch[i - 1], cout = ch[i];
    const int stride = (i % 2 == 1) ? 2 : 1;
    nn::Conv2DSpec dw;
    dw.in_channels = cin;
    dw.out_channels = cin;
    dw.kernel = 3;
    dw.stride = stride;
    dw.groups = cin;
    dw.bias = true;
    dw.in_h = h;
    dw.in_w = wd;
    h = (h + 2 - 3) / stride + 1;
    wd = (wd + 2 - 3) / stride + 1;
    nn::Conv2DSpec pw;
    pw.in_channels = cin;
    pw.out_channels = cout;
    pw.kernel = 1;
    pw.stride = 1;
    pw.bias = true;
    pw.in_h = h;
    pw.in_w = wd;
    const std::string base = "visual.block" + std::to_string(i);
    x = nn::depthwise_separable_conv2d(x, dw, pw, w.get(base + ".dw.w"), &w.get(base + ".dw.b"),
                                       w.get(base + ".pw.w"), &w.get(base + ".pw.b"));
    kern::relu(x.ptr(), static_cast<int>(x.numel()));
  }

  // Global average pool (no MACs by the accounting convention).
  const int npix = h * wd;
  const float inv = 1.0f / static_cast<float>(npix);
  for (int c = 0; c < ch[5]; ++c) {
    const float* p = x.ptr() + static_cast<std::size_t>(c) * npix;
    float s = 0.0f;
    for (int i = 0; i < npix; ++i) s += p[i];
    emb[c] = s * inv;
  }
}

}  // namespace

EmbeddingSeq visual_encode(const Tensor& v, const ModelConfig& cfg, const WeightStore& w) {
  require(v.shape.size() == 3, "visual_encode: frames must be [T, H, W]");
  require(v.dim(1) == cfg.lip_h && v.dim(2) == cfg.lip_w,
          "visual_encode: wrong spatial size");
  const int T = v.dim(0);
  const std::size_t plane = static_cast<std::size_t>(cfg.lip_h) * cfg.lip_w;
  EmbeddingSeq e;
  e.frames = Tensor::zeros({T, cfg.visual_dim});
  e.frame_rate = cfg.visual_fps;
  for (int t = 0; t < T; ++t) {
    const float* cur = v.ptr() + static_cast<std::size_t>(t) * plane;
    const float* p1 = t >= 1 ? v.ptr() + static_cast<std::size_t>(t - 1) * plane : nullptr;
    const float* p2 = t >= 2 ? v.ptr() + static_cast<std::size_t>(t - 2) * plane : nullptr;
    visual_frame(p2, p1, cur, cfg, w, e.frames.ptr() + static_cast<std::size_t>(t) * cfg.visual_dim);
  }
  return e;
}

// Session-side entry point for one video frame; defined here so the whole
// visual path has exactly one implementation.
void visual_encode_frame(const float* prev2, const float* prev1, const float* cur,
                         const ModelConfig& cfg, const WeightStore& w, float* emb) {
  visual_frame(prev2, prev1, cur, cfg, w, emb);
}

// ===== repeat upsampling =====

EmbeddingSeq repeat_upsample(const EmbeddingSeq& e, double target_rate, int target_len) {
  require(e.frames.shape.size() == 2 && e.frames.dim(0) >= 1, "repeat_upsample: empty input");
  require(target_rate >= e.frame_rate, "repeat_upsample: target rate below source rate");
  const double fd = target_rate / e.frame_rate;
  const int factor = static_cast<int>(fd + 0.5);
  require(std::fabs(fd - factor) < 1e-9, "repeat_upsample: non-integral rate ratio");

  const int Tv = e.frames.dim(0), C = e.frames.dim(1);
  const int Tout = target_len >= 0 ? target_len : Tv * factor;
  EmbeddingSeq out;
  out.frames = Tensor::zeros({Tout, C});
  out.frame_rate = target_rate;
  for (int i = 0; i < Tout; ++i) {
    int src = i / factor;
    if (src >= Tv) src = Tv - 1;  // extend-last
    std::memcpy(out.frames.ptr() + static_cast<std::size_t>(i) * C,
                e.frames.ptr() + static_cast<std::size_t>(src) * C,
                static_cast<std::size_t>(C) * sizeof(float));
  }
  return out;
}

// ===== acoustic encoder =====

void AcousticState::reset() {
  // Return to the freshly-constructed condition: the first acoustic_encode
  // call re-seeds sig_tail with the causal pad (keyed off lstm.h.empty()),
  // so a reset state must look exactly like a never-used one.
  consumed = 0;
  frames = 0;
  sig_tail.clear();
  c1_tail.clear();
  c2_tail.clear();
  lstm = nn::LstmState();
}

EmbeddingSeq acoustic_encode(const std::vector<float>& past, AcousticState& st,
                             const ModelConfig& cfg, const WeightStore& w) {
  require(cfg.use_acoustic_encoder, "acoustic_encode: branch disabled in config");
  const int S = cfg.enc_stride, K = cfg.enc_kernel;
  const int Ce = cfg.enc_channels, Ca = cfg.acoustic_hidden, Co = cfg.acoustic_dim;
  const int pad = K - S;

  if (st.lstm.h.empty()) {
    st.lstm = nn::LstmState(Ca);
    st.c1_tail.assign(static_cast<std::size_t>(2) * Ce, 0.0f);
    st.c2_tail.assign(static_cast<std::size_t>(2) * Ca, 0.0f);
    st.sig_tail.assign(static_cast<std::size_t>(pad), 0.0f);  // causal pad
  }

  // sig_tail always starts at absolute sample index 8*frames - pad.
  std::vector<float> buf = st.sig_tail;
  buf.insert(buf.end(), past.begin(), past.end());
  st.consumed += static_cast<std::int64_t>(past.size());
  const int F = buf.size() >= static_cast<std::size_t>(K)
                    ? static_cast<int>((buf.size() - K) / S) + 1
                    : 0;

  EmbeddingSeq out;
  out.frame_rate = cfg.frame_rate();
  if (F == 0) {
    out.frames = Tensor{{0, Co}, {}};  // zero frames this call
    st.sig_tail = std::move(buf);
    return out;
  }

  // Stage 1: encoder conv over the F windows (ReLU, bias-free).
  Tensor e0 = Tensor::zeros({F, Ce});
  {
    std::vector<const float*> xs(F);
    std::vector<float*> ys(F);
    for (int i = 0; i < F; ++i) {
      xs[i] = buf.data() + static_cast<std::size_t>(i) * S;
      ys[i] = e0.ptr() + static_cast<std::size_t>(i) * Ce;
    }
    kern::matvec_cols(w.w("acoustic.enc"), K, Ce, K, xs.data(), ys.data(), F);
    kern::relu(e0.ptr(), static_cast<int>(e0.numel()));
  }

  // Stage 2/3: the two K=3 causal convs, windows gathered channel-major
  // from [tail(2 frames) ++ new frames].
  auto conv_k3 = [](const Tensor& in, std::vector<float>& tail, const float* wts, int cin,
                    int cout) {
    const int F2 = in.dim(0);
    Tensor outp = Tensor::zeros({F2, cout});
    std::vector<float> wins(static_cast<std::size_t>(F2) * cin * 3);
    auto frame_at = [&](int t) -> const float* {  // t relative, -2..F2-1
      if (t >= 0) return in.ptr() + static_cast<std::size_t>(t) * cin;
      return tail.data() + static_cast<std::size_t>(t + 2) * cin;
    };
    std::vector<const float*> xs(F2);
    std::vector<float*> ys(F2);
    for (int t = 0; t < F2; ++t) {
      float* dst = wins.data() + static_cast<std::size_t>(t) * cin * 3;
      for (int k = 0; k < 3; ++k) {
        const float* f = frame_at(t - 2 + k);
        for (int ci = 0; ci < cin; ++ci) dst[ci * 3 + k] = f[ci];  // [ci][k]
      }
      xs[t] = dst;
      ys[t] = outp.ptr() + static_cast<std::size_t>(t) * cout;
    }
    kern::matvec_cols(wts, cin * 3, cout, cin * 3, xs.data(), ys.data(), F2);
    kern::relu(outp.ptr(), static_cast<int>(outp.numel()));
    // Update tail with the last two input frames.
    for (int k = 0; k < 2; ++k) {
      const float* f = frame_at(F2 - 2 + k);
      std::memcpy(tail.data() + static_cast<std::size_t>(k) * cin, f,
                  static_cast<std::size_t>(cin) * sizeof(float));
    }
    return outp;
  };
  Tensor f1 = conv_k3(e0, st.c1_tail, w.w("acoustic.conv1"), Ce, Ca);
  Tensor f2 = conv_k3(f1, st.c2_tail, w.w("acoustic.conv2"), Ca, Ca);

  // Stage 4: LSTM (x-side batched, recurrence stepped) + projection.
  nn::LstmSpec ls;
  ls.input_size = Ca;
  ls.hidden_size = Ca;
  ls.bias = false;
  const float* lwx = w.get("acoustic.lstm.wx").ptr();
  const float* lwh = w.get("acoustic.lstm.wh").ptr();
  Tensor gx = Tensor::zeros({F, 4 * Ca});
  {
    std::vector<const float*> xs(F);
    std::vector<float*> ys(F);
    for (int i = 0; i < F; ++i) {
      xs[i] = f2.ptr() + static_cast<std::size_t>(i) * Ca;
      ys[i] = gx.ptr() + static_cast<std::size_t>(i) * 4 * Ca;
    }
    kern::matvec_cols(lwx, Ca, 4 * Ca, Ca, xs.data(), ys.data(), F);
  }
  Tensor hs = Tensor::zeros({F, Ca});
  for (int i = 0; i < F; ++i)
    nn::lstm_step_pre(ls, gx.ptr() + static_cast<std::size_t>(i) * 4 * Ca, st.lstm, lwh,
                      nullptr, hs.ptr() + static_cast<std::size_t>(i) * Ca);

  out.frames = Tensor::zeros({F, Co});
  {
    std::vector<const float*> xs(F);
    std::vector<float*> ys(F);
    for (int i = 0; i < F; ++i) {
      xs[i] = hs.ptr() + static_cast<std::size_t>(i) * Ca;
      ys[i] = out.frames.ptr() + static_cast<std::size_t>(i) * Co;
    }
    kern::matvec_cols(w.w("acoustic.proj"), Ca, Co, Ca, xs.data(), ys.data(), F);
  }

  // Keep the unconsumed suffix: next frame's window starts at (frames+F)*S - pad
  // relative to this buffer's origin (frames*S - pad).
  st.sig_tail.assign(buf.begin() + static_cast<std::ptrdiff_t>(F) * S, buf.end());
  st.frames += F;
  return out;
}

// ===== extractor =====

void SkimState::reset() {
  for (auto& b : blocks) {
    b.seg.reset();
    b.mem.reset();
    std::fill(b.carry_h.begin(), b.carry_h.end(), 0.0f);
    std::fill(b.carry_c.begin(), b.carry_c.end(), 0.0f);
  }
  frame = 0;
}

SkimState make_skim_state(const ModelConfig& cfg) {
  SkimState st;
  st.blocks.resize(static_cast<std::size_t>(cfg.skim_layers));
  for (auto& b : st.blocks) {
    b.seg = nn::LstmState(cfg.skim_hidden);
    b.mem = nn::LstmState(cfg.skim_hidden);
    b.carry_h.assign(static_cast<std::size_t>(cfg.skim_hidden), 0.0f);
    b.carry_c.assign(static_cast<std::size_t>(cfg.skim_hidden), 0.0f);
  }
  return st;
}

EmbeddingSeq skim_extract(const EmbeddingSeq& fused, SkimState& st, const ModelConfig& cfg,
                          const WeightStore& w) {
  require(fused.frames.shape.size() == 2 && fused.frames.dim(1) == cfg.fused_dim(),
          "skim_extract: fused channel mismatch");
  const int T = fused.frames.dim(0);
  const int Hh = cfg.skim_hidden, Cenc = cfg.enc_channels, seg = cfg.skim_segment;
  require(static_cast<int>(st.blocks.size()) == cfg.skim_layers,
          "skim_extract: state/layer count mismatch");

  nn::LstmSpec ls;
  ls.input_size = Hh;
  ls.hidden_size = Hh;
  ls.bias = true;

  // Input projection (batched across frames).
  Tensor cur = Tensor::zeros({T, Hh});
  {
    std::vector<const float*> xs(T);
    std::vector<float*> ys(T);
    for (int t = 0; t < T; ++t) {
      xs[t] = fused.frames.ptr() + static_cast<std::size_t>(t) * cfg.fused_dim();
      ys[t] = cur.ptr() + static_cast<std::size_t>(t) * Hh;
    }
    kern::matvec_cols(w.w("skim.inproj"), cfg.fused_dim(), Hh, cfg.fused_dim(), xs.data(),
                      ys.data(), T);
    for (int t = 0; t < T; ++t) kern::add_bias(ys[t], w.b("skim.inproj"), Hh);
  }

  Tensor gx = Tensor::zeros({T, 4 * Hh});
  for (int bi = 0; bi < cfg.skim_layers; ++bi) {
    auto& bs = st.blocks[static_cast<std::size_t>(bi)];
    const std::string base = "skim.block" + std::to_string(bi + 1);
    const float* seg_wx = w.get(base + ".seg.wx").ptr();
    const float* seg_wh = w.get(base + ".seg.wh").ptr();
    const float* bseg = w.b(base + ".seg");
    const float* mem_wx = w.get(base + ".mem.wx").ptr();
    const float* mem_wh = w.get(base + ".mem.wh").ptr();
    const float* bmem = w.b(base + ".mem");

    // x-side contributions for the whole chunk, then the recurrence.
    {
      std::vector<const float*> xs(T);
      std::vector<float*> ys(T);
      for (int t = 0; t < T; ++t) {
        xs[t] = cur.ptr() + static_cast<std::size_t>(t) * Hh;
        ys[t] = gx.ptr() + static_cast<std::size_t>(t) * 4 * Hh;
      }
      kern::matvec_cols(seg_wx, Hh, 4 * Hh, Hh, xs.data(), ys.data(), T);
    }
    for (int t = 0; t < T; ++t) {
      const std::int64_t abs_t = st.frame + t;
      const int pos = static_cast<int>(abs_t % seg);
      if (pos == 0) {
        std::memcpy(bs.seg.h.data(), bs.carry_h.data(),
                    static_cast<std::size_t>(Hh) * sizeof(float));
        std::memcpy(bs.seg.c.data(), bs.carry_c.data(),
                    static_cast<std::size_t>(Hh) * sizeof(float));
      }
      float* y = cur.ptr() + static_cast<std::size_t>(t) * Hh;  // block output in place
      nn::lstm_step_pre(ls, gx.ptr() + static_cast<std::size_t>(t) * 4 * Hh, bs.seg, seg_wh,
                        bseg, y);
      if (pos == seg - 1) {
        // Memory LSTM ingests the boundary hidden state; its output becomes
        // the next segment's initial hidden state and its cell the initial
        // cell state.
        std::vector<float> ym(static_cast<std::size_t>(Hh));
        nn::lstm_step(ls, bs.seg.h.data(), bs.mem, mem_wx, mem_wh, bmem, ym.data());
        bs.carry_h = ym;
        bs.carry_c = bs.mem.c;
      }
    }
  }
  st.frame += T;

  // Output projection + ReLU mask.
  EmbeddingSeq mask;
  mask.frames = Tensor::zeros({T, Cenc});
  mask.frame_rate = fused.frame_rate;
  {
    std::vector<const float*> xs(T);
    std::vector<float*> ys(T);
    for (int t = 0; t < T; ++t) {
      xs[t] = cur.ptr() + static_cast<std::size_t>(t) * Hh;
      ys[t] = mask.frames.ptr() + static_cast<std::size_t>(t) * Cenc;
    }
    kern::matvec_cols(w.w("skim.outproj"), Hh, Cenc, Hh, xs.data(), ys.data(), T);
    for (int t = 0; t < T; ++t) {
      kern::add_bias(ys[t], w.b("skim.outproj"), Cenc);
      kern::relu(ys[t], Cenc);
      if (cfg.clamp_mask)
        for (int c = 0; c < Cenc; ++c) ys[t][c] = ys[t][c] < 1.0f ? ys[t][c] : 1.0f;
    }
  }
  return mask;
}

}  // namespace avse
