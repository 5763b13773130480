// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Microbenchmarks for the hot paths: the fixed-order inner product, one
// recurrent step at the extractor's width, one visual frame, and a live
// session pushing 10 ms chunks (the end-to-end number that has to stay
// under real time).
#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "avse/kernels.hpp"
#include "avse/model.hpp"
#include "avse/ops.hpp"
#include "avse/rng.hpp"
#include "avse/stream.hpp"

using namespace avse;

namespace {

std::vector<float> randv(std::size_t n, std::uint64_t seed) {
  std::vector<float> v(n);
  Rng r = rng_for(seed, "bench.fill");
  for (auto& x : v) x = r.next_symmetric(0.5f);
  return v;
}

void BM_dot(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto w = randv(static_cast<std::size_t>(n), 1);
  const auto x = randv(static_cast<std::size_t>(n), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kern::dot(w.data(), x.data(), n));
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_matvec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto W = randv(static_cast<std::size_t>(n) * n, 3);
  const auto x = randv(static_cast<std::size_t>(n), 4);
  std::vector<float> y(static_cast<std::size_t>(n));
  for (auto _ : state) {
    kern::matvec(W.data(), n, n, n, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_lstm_step(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::defaults();
  nn::LstmSpec spec;
  spec.input_size = cfg.skim_hidden;
  spec.hidden_size = cfg.skim_hidden;
  const auto Wx = randv(static_cast<std::size_t>(4 * spec.hidden_size) * spec.input_size, 5);
  const auto Wh = randv(static_cast<std::size_t>(4 * spec.hidden_size) * spec.hidden_size, 6);
  const auto b = randv(static_cast<std::size_t>(4 * spec.hidden_size), 7);
  const auto x = randv(static_cast<std::size_t>(spec.input_size), 8);
  nn::LstmState st(spec.hidden_size);
  std::vector<float> y(static_cast<std::size_t>(spec.hidden_size));
  for (auto _ : state) {
    nn::lstm_step(spec, x.data(), st, Wx.data(), Wh.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          (4 * spec.hidden_size * (spec.input_size + spec.hidden_size)));
}

void BM_visual_frame(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::defaults();
  const WeightStore w = init_weights(cfg, 9);
  const auto plane = static_cast<std::size_t>(cfg.lip_h) * cfg.lip_w;
  const auto clip = randv(3 * plane, 10);
  std::vector<float> emb(static_cast<std::size_t>(cfg.visual_dim));
  for (auto _ : state) {
    visual_encode_frame(clip.data(), clip.data() + plane, clip.data() + 2 * plane, cfg, w,
                        emb.data());
    benchmark::DoNotOptimize(emb.data());
  }
}

// End to end: 10 ms of audio (plus video frames as they come due) through a
// live session. items/s >= 100 means faster than real time.
void BM_session_push_10ms(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::defaults();
  const WeightStore w = init_weights(cfg, 11);
  const std::size_t chunk = static_cast<std::size_t>(cfg.sample_rate) / 100;
  const auto audio = randv(static_cast<std::size_t>(cfg.sample_rate) * 4, 12);
  const auto plane = static_cast<std::size_t>(cfg.lip_h) * cfg.lip_w;
  const auto video = randv(plane * 100, 13);

  StreamSession s(cfg, w, true);
  std::size_t pushed = 0;
  int fed = 0;
  for (auto _ : state) {
    if (pushed + chunk > audio.size()) {  // fresh session once the clip runs out
      state.PauseTiming();
      s.reset();
      pushed = 0;
      fed = 0;
      state.ResumeTiming();
    }
    const int due = std::min(
        100, static_cast<int>(static_cast<double>(pushed + chunk) * cfg.visual_fps /
                              cfg.sample_rate) +
                 1);
    const int vn = due - fed;
    benchmark::DoNotOptimize(
        s.push(audio.data() + pushed, chunk,
               vn > 0 ? video.data() + static_cast<std::size_t>(fed) * plane : nullptr,
               std::max(0, vn)));
    pushed += chunk;
    fed = due;
  }
  state.SetItemsProcessed(state.iterations());  // chunks of 10 ms
}

}  // namespace

BENCHMARK(BM_dot)->Arg(128)->Arg(384)->Arg(1024);
BENCHMARK(BM_matvec)->Arg(384);
BENCHMARK(BM_lstm_step);
BENCHMARK(BM_visual_frame);
BENCHMARK(BM_session_push_10ms);

BENCHMARK_MAIN();
