// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "doctest.h"

#include <cmath>
#include <vector>

#include "avse/model.hpp"
#include "avse/rng.hpp"

using namespace avse;

namespace {

Tensor random_video(const ModelConfig& cfg, int frames, std::uint64_t seed) {
  Tensor v = Tensor::zeros({frames, cfg.lip_h, cfg.lip_w});
  Rng rng = rng_for(seed, "test.video");
  for (auto& x : v.data) x = rng.next_unit();
  return v;
}

std::vector<float> random_audio(int n, std::uint64_t seed) {
  Rng rng = rng_for(seed, "test.audio");
  std::vector<float> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.next_symmetric(0.5f);
  return x;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig bad = ModelConfig::tiny();
  bad.enc_stride = 3;  // frame rate 1600/3 not integral
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ModelConfig::tiny();
  bad.visual_fps = 30.0;  // repeat factor 400/30 not integral
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(ModelConfig::defaults().validate());
  CHECK_NOTHROW(ModelConfig::tiny().validate());
}

TEST_CASE("frames_for_samples matches the streaming framing") {
  const ModelConfig cfg = ModelConfig::defaults();
  CHECK(frames_for_samples(cfg, 16000) == 2000);
  CHECK(frames_for_samples(cfg, 15) == 1);
  CHECK(frames_for_samples(cfg, 7) == 0);
}

TEST_CASE("init_weights: deterministic and per-tensor independent") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore a = init_weights(cfg, 42);
  const WeightStore b = init_weights(cfg, 42);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (const auto& [name, t] : a.tensors) {
    CHECK(b.get(name).shape == t.shape);
    CHECK(b.get(name).data == t.data);
  }
  // A different seed changes the draws.
  const WeightStore c = init_weights(cfg, 43);
  CHECK(c.get("enc.conv.w").data != a.get("enc.conv.w").data);

  // Dropping the acoustic branch must not shift any other tensor's stream.
  ModelConfig no_ar = cfg;
  no_ar.use_acoustic_encoder = false;
  const WeightStore d = init_weights(no_ar, 42);
  for (const auto& [name, t] : d.tensors) CHECK(a.get(name).data == t.data);
  CHECK(d.tensors.count("acoustic.lstm.wx") == 0);
}

TEST_CASE("weight audit") {
  const ModelConfig cfg = ModelConfig::tiny();
  WeightStore w = init_weights(cfg, 1);
  CHECK_NOTHROW(audit_weights(cfg, w));

  WeightStore missing = w;
  missing.tensors.erase("dec.linear.w");
  CHECK_THROWS_AS(audit_weights(cfg, missing), std::invalid_argument);

  WeightStore wrong = w;
  wrong.tensors["dec.linear.w"] = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(audit_weights(cfg, wrong), std::invalid_argument);

  WeightStore extra = w;
  extra.tensors["orphan.w"] = Tensor::zeros({1});
  CHECK_THROWS_AS(audit_weights(cfg, extra, false), std::invalid_argument);
  CHECK_NOTHROW(audit_weights(cfg, extra, true));
}

TEST_CASE("speech encoder/decoder shapes and linearity of the decoder") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore w = init_weights(cfg, 2);
  const auto x = random_audio(cfg.sample_rate / 2, 3);
  const EmbeddingSeq e = speech_encode(x, cfg, w);
  CHECK(e.frames.shape ==
        std::vector<int>{static_cast<int>(frames_for_samples(cfg, (int)x.size())),
                         cfg.enc_channels});
  CHECK(e.frame_rate == cfg.frame_rate());
  for (float v : e.frames.data) CHECK(v >= 0.0f);  // relu output

  const std::vector<float> y = speech_decode(e, cfg, w);
  CHECK(static_cast<int>(y.size()) == e.frames.shape[0] * cfg.enc_stride);
}

TEST_CASE("visual encoder: per-frame streaming call equals the batch call") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore w = init_weights(cfg, 4);
  const Tensor v = random_video(cfg, 6, 9);
  const EmbeddingSeq batch = visual_encode(v, cfg, w);
  CHECK(batch.frames.shape == std::vector<int>{6, cfg.visual_dim});
  CHECK(batch.frame_rate == cfg.visual_fps);

  const auto plane = static_cast<std::size_t>(cfg.lip_h) * cfg.lip_w;
  std::vector<float> emb(static_cast<std::size_t>(cfg.visual_dim));
  for (int t = 0; t < 6; ++t) {
    const float* cur = v.ptr() + static_cast<std::size_t>(t) * plane;
    const float* p1 = t >= 1 ? cur - plane : nullptr;
    const float* p2 = t >= 2 ? cur - 2 * plane : nullptr;
    visual_encode_frame(p2, p1, cur, cfg, w, emb.data());
    for (int c = 0; c < cfg.visual_dim; ++c)
      CHECK(emb[static_cast<std::size_t>(c)] ==
            batch.frames.data[static_cast<std::size_t>(t) * cfg.visual_dim + c]);
  }
}

TEST_CASE("visual encoder is causal in video frames") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore w = init_weights(cfg, 5);
  Tensor v = random_video(cfg, 5, 10);
  const EmbeddingSeq e0 = visual_encode(v, cfg, w);
  const auto plane = static_cast<std::size_t>(cfg.lip_h) * cfg.lip_w;
  v.data[3 * plane + 11] = 1.0f - v.data[3 * plane + 11];  // perturb frame 3
  const EmbeddingSeq e1 = visual_encode(v, cfg, w);
  for (int t = 0; t < 3; ++t)
    for (int c = 0; c < cfg.visual_dim; ++c)
      CHECK(e0.frames.data[static_cast<std::size_t>(t) * cfg.visual_dim + c] ==
            e1.frames.data[static_cast<std::size_t>(t) * cfg.visual_dim + c]);
}

TEST_CASE("repeat_upsample") {
  EmbeddingSeq e;
  e.frames = Tensor::zeros({2, 3});
  e.frames.data = {1, 2, 3, 4, 5, 6};
  e.frame_rate = 25.0;

  const EmbeddingSeq u = repeat_upsample(e, 100.0);  // factor 4
  CHECK(u.frames.shape == std::vector<int>{8, 3});
  CHECK(u.frame_rate == 100.0);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 3; ++c) CHECK(u.frames.data[t * 3 + c] == e.frames.data[c]);
  for (int t = 4; t < 8; ++t)
    for (int c = 0; c < 3; ++c) CHECK(u.frames.data[t * 3 + c] == e.frames.data[3 + c]);

  // target_len extends by holding the last frame.
  const EmbeddingSeq ext = repeat_upsample(e, 100.0, 11);
  CHECK(ext.frames.shape == std::vector<int>{11, 3});
  for (int t = 8; t < 11; ++t)
    for (int c = 0; c < 3; ++c) CHECK(ext.frames.data[t * 3 + c] == e.frames.data[3 + c]);

  // non-integral factor is a contract violation
  CHECK_THROWS_AS(repeat_upsample(e, 90.0), std::invalid_argument);
}

TEST_CASE("acoustic encoder: chunking invariance and zero identity") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore w = init_weights(cfg, 6);
  const auto past = random_audio(cfg.enc_stride * 37 + 5, 11);

  AcousticState whole;
  const EmbeddingSeq all = acoustic_encode(past, whole, cfg, w);
  // One embedding per full stride of input, same framing as the encoder.
  CHECK(all.frames.shape[0] == frames_for_samples(cfg, static_cast<int>(past.size())));
  CHECK(all.frames.shape[1] == cfg.acoustic_dim);

  AcousticState chunked;
  Tensor got = Tensor::zeros({1, cfg.acoustic_dim});
  got.data.clear();
  got.shape = {0, cfg.acoustic_dim};
  std::size_t off = 0;
  const std::size_t steps[] = {1, 7, 16, 3, 64, 9999};
  for (std::size_t s : steps) {
    const std::size_t n = std::min(s, past.size() - off);
    const std::vector<float> piece(past.begin() + off, past.begin() + off + n);
    const EmbeddingSeq part = acoustic_encode(piece, chunked, cfg, w);
    got.data.insert(got.data.end(), part.frames.data.begin(), part.frames.data.end());
    got.shape[0] += part.frames.shape[0];
    off += n;
    if (off >= past.size()) break;
  }
  CHECK(got.shape == all.frames.shape);
  CHECK(got.data == all.frames.data);

  // All-zero past (the pass-1 placeholder) gives exactly zero embeddings:
  // the branch is bias-free end to end.
  AcousticState zst;
  const EmbeddingSeq z = acoustic_encode(std::vector<float>(320, 0.0f), zst, cfg, w);
  for (float v : z.frames.data) CHECK(v == 0.0f);
}

TEST_CASE("skim extractor: chunking invariance across segment boundaries") {
  const ModelConfig cfg = ModelConfig::tiny();  // segment 4
  const WeightStore w = init_weights(cfg, 7);
  const int T = 3 * cfg.skim_segment + 2;
  Tensor fused = Tensor::zeros({T, cfg.fused_dim()});
  Rng rng = rng_for(12, "test.fused");
  for (auto& v : fused.data) v = rng.next_symmetric(1.0f);

  SkimState whole = make_skim_state(cfg);
  EmbeddingSeq in;
  in.frames = fused;
  in.frame_rate = cfg.frame_rate();
  const EmbeddingSeq all = skim_extract(in, whole, cfg, w);
  CHECK(all.frames.shape == std::vector<int>{T, cfg.enc_channels});
  for (float v : all.frames.data) CHECK(v >= 0.0f);  // nonnegative mask

  SkimState st = make_skim_state(cfg);
  std::vector<float> got;
  int off = 0;
  for (int step : {1, 3, 4, 5, 1, 100}) {
    const int n = std::min(step, T - off);
    EmbeddingSeq piece;
    piece.frames = Tensor::zeros({n, cfg.fused_dim()});
    std::copy(fused.data.begin() + static_cast<std::ptrdiff_t>(off) * cfg.fused_dim(),
              fused.data.begin() + static_cast<std::ptrdiff_t>(off + n) * cfg.fused_dim(),
              piece.frames.data.begin());
    piece.frame_rate = cfg.frame_rate();
    const EmbeddingSeq part = skim_extract(piece, st, cfg, w);
    got.insert(got.end(), part.frames.data.begin(), part.frames.data.end());
    off += n;
    if (off >= T) break;
  }
  CHECK(got == all.frames.data);
}

TEST_CASE("mask clamp flag caps the mask at one") {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.clamp_mask = true;
  const WeightStore w = init_weights(cfg, 8);
  Tensor fused = Tensor::zeros({cfg.skim_segment * 2, cfg.fused_dim()});
  Rng rng = rng_for(13, "test.fused2");
  for (auto& v : fused.data) v = rng.next_symmetric(3.0f);
  SkimState st = make_skim_state(cfg);
  EmbeddingSeq in;
  in.frames = fused;
  in.frame_rate = cfg.frame_rate();
  const EmbeddingSeq m = skim_extract(in, st, cfg, w);
  for (float v : m.frames.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("forward_offline output length is the frame-aligned input length") {
  const ModelConfig cfg = ModelConfig::tiny();
  const WeightStore w = init_weights(cfg, 9);
  const int n = cfg.enc_stride * 50 + 3;
  const auto x = random_audio(n, 14);
  const Tensor v = random_video(cfg, 8, 15);
  const std::vector<float> y = forward_offline(cfg, w, x, v, true);
  CHECK(y.size() == static_cast<std::size_t>(cfg.enc_stride * (n / cfg.enc_stride)));
}
