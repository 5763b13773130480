// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/macref.hpp"

#include <cmath>
#include <variant>
#include <vector>

#include "avse/rng.hpp"

namespace avse::macref {

namespace {

// One layer's synthetic weights/state plus an evaluator that performs the
// math in double and counts every scalar multiply as it happens.
class LayerEval {
 public:
  explicit LayerEval(const nn::LayerSpec& spec) : spec_(spec) {
    Rng rng = rng_for(7, "macref.fill");
    auto fill = [&rng](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& x : v) x = 2.0 * rng.next_unit() - 1.0;
    };
    if (const auto* s = std::get_if<nn::Conv1DSpec>(&spec_)) {
      fill(w_, static_cast<std::size_t>(s->out_channels) * (s->in_channels / s->groups) *
                   s->kernel);
      fill(in_, static_cast<std::size_t>(s->in_channels) * s->kernel);
    } else if (const auto* s = std::get_if<nn::Conv2DSpec>(&spec_)) {
      fill(w_, static_cast<std::size_t>(s->out_channels) * (s->in_channels / s->groups) *
                   s->kernel * s->kernel);
      fill(in_, static_cast<std::size_t>(s->in_channels) * s->in_h * s->in_w);
    } else if (const auto* s = std::get_if<nn::Conv3DSpec>(&spec_)) {
      fill(w_, static_cast<std::size_t>(s->out_channels) * s->in_channels * s->kernel_t *
                   s->kernel * s->kernel);
      fill(in_, static_cast<std::size_t>(s->in_channels) * s->kernel_t * s->in_h * s->in_w);
    } else if (const auto* s = std::get_if<nn::LstmSpec>(&spec_)) {
      fill(w_, 4ull * s->hidden_size * (s->input_size + s->hidden_size));
      fill(in_, static_cast<std::size_t>(s->input_size));
      h_.assign(static_cast<std::size_t>(s->hidden_size), 0.0);
      c_.assign(static_cast<std::size_t>(s->hidden_size), 0.0);
    } else if (const auto* s = std::get_if<nn::LinearSpec>(&spec_)) {
      fill(w_, static_cast<std::size_t>(s->in) * s->out);
      fill(in_, static_cast<std::size_t>(s->in));
    }
  }

  // Evaluate once (one time step / one video frame), counting multiplies.
  void fire(std::uint64_t& macs) {
    if (const auto* s = std::get_if<nn::Conv1DSpec>(&spec_)) {
      conv1d_step(*s, macs);
    } else if (const auto* s = std::get_if<nn::Conv2DSpec>(&spec_)) {
      conv2d_frame(*s, macs);
    } else if (const auto* s = std::get_if<nn::Conv3DSpec>(&spec_)) {
      conv3d_frame(*s, macs);
    } else if (const auto* s = std::get_if<nn::LstmSpec>(&spec_)) {
      lstm_step(*s, macs);
    } else if (const auto* s = std::get_if<nn::LinearSpec>(&spec_)) {
      linear_step(*s, macs);
    }
  }

 private:
  // input is one window [Cin, K]; one output time step across channels.
  void conv1d_step(const nn::Conv1DSpec& s, std::uint64_t& macs) {
    const int cpg = s.in_channels / s.groups;
    const int opg = s.out_channels / s.groups;
    sink_ = 0.0;
    for (int co = 0; co < s.out_channels; ++co) {
      const int g = co / opg;
      double acc = 0.0;
      const double* wr = w_.data() + static_cast<std::size_t>(co) * cpg * s.kernel;
      for (int ci = 0; ci < cpg; ++ci)
        for (int k = 0; k < s.kernel; ++k) {
          acc += wr[ci * s.kernel + k] * in_[static_cast<std::size_t>(g * cpg + ci) * s.kernel + k];
          ++macs;
        }
      sink_ += acc;
    }
  }

  // input [Cin, H, W], zero padding kernel/2; full output frame.
  void conv2d_frame(const nn::Conv2DSpec& s, std::uint64_t& macs) {
    const int pad = s.kernel / 2;
    const int ho = (s.in_h + 2 * pad - s.kernel) / s.stride + 1;
    const int wo = (s.in_w + 2 * pad - s.kernel) / s.stride + 1;
    const int cpg = s.in_channels / s.groups;
    const int opg = s.out_channels / s.groups;
    sink_ = 0.0;
    for (int co = 0; co < s.out_channels; ++co) {
      const int g = co / opg;
      const double* wr = w_.data() + static_cast<std::size_t>(co) * cpg * s.kernel * s.kernel;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < cpg; ++ci)
            for (int ky = 0; ky < s.kernel; ++ky)
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int iy = oy * s.stride + ky - pad;
                const int ix = ox * s.stride + kx - pad;
                const double v =
                    (iy < 0 || iy >= s.in_h || ix < 0 || ix >= s.in_w)
                        ? 0.0
                        : in_[(static_cast<std::size_t>(g * cpg + ci) * s.in_h + iy) * s.in_w +
                              ix];
                acc += wr[(ci * s.kernel + ky) * s.kernel + kx] * v;
                ++macs;
              }
          sink_ += acc;
        }
    }
  }

  // input is the temporal window [Cin, kt, H, W]; one output temporal
  // position, full spatial frame.
  void conv3d_frame(const nn::Conv3DSpec& s, std::uint64_t& macs) {
    const int pad = s.kernel / 2;
    const int ho = (s.in_h + 2 * pad - s.kernel) / s.stride + 1;
    const int wo = (s.in_w + 2 * pad - s.kernel) / s.stride + 1;
    sink_ = 0.0;
    for (int co = 0; co < s.out_channels; ++co) {
      const double* wr = w_.data() + static_cast<std::size_t>(co) * s.in_channels * s.kernel_t *
                                         s.kernel * s.kernel;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < s.in_channels; ++ci)
            for (int kt = 0; kt < s.kernel_t; ++kt)
              for (int ky = 0; ky < s.kernel; ++ky)
                for (int kx = 0; kx < s.kernel; ++kx) {
                  const int iy = oy * s.stride + ky - pad;
                  const int ix = ox * s.stride + kx - pad;
                  const double v =
                      (iy < 0 || iy >= s.in_h || ix < 0 || ix >= s.in_w)
                          ? 0.0
                          : in_[((static_cast<std::size_t>(ci) * s.kernel_t + kt) * s.in_h + iy) *
                                    s.in_w +
                                ix];
                  acc += wr[((ci * s.kernel_t + kt) * s.kernel + ky) * s.kernel + kx] * v;
                  ++macs;
                }
          sink_ += acc;
        }
    }
  }

  // Multiplies inside the gate matvecs only; the element-wise cell products
  // are performed but, per the MAC convention, not counted.
  void lstm_step(const nn::LstmSpec& s, std::uint64_t& macs) {
    const int d = s.input_size, h = s.hidden_size;
    std::vector<double> gates(4ull * h, 0.0);
    for (int r = 0; r < 4 * h; ++r) {
      const double* wr = w_.data() + static_cast<std::size_t>(r) * (d + h);
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        acc += wr[i] * in_[static_cast<std::size_t>(i)];
        ++macs;
      }
      for (int i = 0; i < h; ++i) {
        acc += wr[d + i] * h_[static_cast<std::size_t>(i)];
        ++macs;
      }
      gates[static_cast<std::size_t>(r)] = acc;
    }
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    for (int i = 0; i < h; ++i) {
      const double ig = sig(gates[i]), fg = sig(gates[h + i]);
      const double gg = std::tanh(gates[2 * h + i]), og = sig(gates[3 * h + i]);
      c_[i] = fg * c_[i] + ig * gg;
      h_[i] = og * std::tanh(c_[i]);
    }
  }

  void linear_step(const nn::LinearSpec& s, std::uint64_t& macs) {
    sink_ = 0.0;
    for (int o = 0; o < s.out; ++o) {
      double acc = 0.0;
      const double* wr = w_.data() + static_cast<std::size_t>(o) * s.in;
      for (int i = 0; i < s.in; ++i) {
        acc += wr[i] * in_[static_cast<std::size_t>(i)];
        ++macs;
      }
      sink_ += acc;
    }
  }

  nn::LayerSpec spec_;
  std::vector<double> w_, in_, h_, c_;
  double sink_ = 0.0;
};

}  // namespace

std::uint64_t count_layer(const nn::LayerSpec& spec, int firings) {
  require(firings >= 0, "count_layer: negative firing count");
  LayerEval eval(spec);
  std::uint64_t macs = 0;
  for (int i = 0; i < firings; ++i) eval.fire(macs);
  return macs;
}

std::map<std::string, std::uint64_t> count_one_second(const ModelConfig& cfg) {
  cfg.validate();
  std::map<std::string, LayerEval> evals;
  std::map<std::string, Rate> rates;
  for (const auto& decl : enumerate_layers(cfg)) {
    evals.emplace(decl.path, LayerEval(decl.spec));
    rates.emplace(decl.path, decl.rate);
  }

  std::map<std::string, std::uint64_t> counts;
  for (const auto& [path, rate] : rates) counts[path] = 0;
  auto fire = [&](const std::string& path) { evals.at(path).fire(counts.at(path)); };

  // Audio-frame schedule over exactly one second, mirroring the engine: the
  // per-frame stages fire every frame; each block's segment-memory LSTM
  // fires when a segment completes.
  const auto frames = static_cast<int>(frames_for_samples(cfg, cfg.sample_rate));
  for (int t = 0; t < frames; ++t) {
    fire("enc.conv");
    if (cfg.use_acoustic_encoder) {
      fire("acoustic.enc");
      fire("acoustic.conv1");
      fire("acoustic.conv2");
      fire("acoustic.lstm");
      fire("acoustic.proj");
    }
    fire("skim.inproj");
    for (int b = 1; b <= cfg.skim_layers; ++b) {
      const std::string base = "skim.block" + std::to_string(b);
      fire(base + ".seg");
      if (t % cfg.skim_segment == cfg.skim_segment - 1) fire(base + ".mem");
    }
    fire("skim.outproj");
    fire("dec.linear");
  }

  // Video-frame schedule: the full visual stack fires once per video frame.
  const auto vframes = static_cast<int>(std::llround(cfg.visual_fps));
  for (int v = 0; v < vframes; ++v) {
    fire("visual.front");
    for (int i = 1; i <= 5; ++i) {
      const std::string base = "visual.block" + std::to_string(i);
      fire(base + ".dw");
      fire(base + ".pw");
    }
  }
  return counts;
}

std::uint64_t count_oracle(const ModelConfig& cfg) {
  std::uint64_t total = 0;
  for (const auto& [path, macs] : count_one_second(cfg)) total += macs;
  return total;
}

}  // namespace avse::macref
