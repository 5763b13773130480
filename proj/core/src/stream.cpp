// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/stream.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "avse/kernels.hpp"
#include "avse/rng.hpp"

namespace avse {

namespace {
using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace

StreamSession::StreamSession(const ModelConfig& cfg, const WeightStore& w, bool use_ar,
                             const std::vector<float>* teacher)
    : cfg_(cfg),
      w_(w),
      use_ar_(use_ar),
      teacher_(teacher),
      vraw_(cfg.lip_h * cfg.lip_w),
      vemb_(cfg.visual_dim) {
  cfg_.validate();
  require(cfg_.enc_kernel == 2 * cfg_.enc_stride,
          "stream: the session's emission schedule requires kernel == 2 * stride");
  static_assert(kBatchFrames <= kFeedbackDelayFrames - 1,
                "batch width must stay behind the feedback delay");
  audit_weights(cfg_, w_, /*allow_extra=*/true);
  skim_ = make_skim_state(cfg_);
  ola_tail_.assign(static_cast<std::size_t>(cfg_.enc_stride), 0.0f);
}

void StreamSession::reset() {
  in_.clear();
  fb_.clear();
  vraw_.clear();
  vemb_.clear();
  ast_.reset();
  skim_.reset();
  frames_done_ = 0;
  g_fed_ = 0;
  std::fill(ola_tail_.begin(), ola_tail_.end(), 0.0f);
  finished_ = false;
  stats_ = SessionStats{};
}

void StreamSession::encode_video_frame(const float* plane) {
  const auto t0 = Clock::now();
  const int np = cfg_.lip_h * cfg_.lip_w;
  const std::int64_t v = vraw_.end();
  // Frame v is timestamped v/fps; accepting it more than one frame period
  // before its audio has arrived would mean clocking the streams apart.
  require(static_cast<double>(v) / cfg_.visual_fps <=
              static_cast<double>(stats_.samples_in) / cfg_.sample_rate +
                  1.0 / cfg_.visual_fps + 1e-9,
          "stream: video ahead of audio by more than one frame period");
  vraw_.append(plane, 1);

  std::vector<float> clip(static_cast<std::size_t>(3) * np);
  vraw_.read(v - 2, 3, clip.data());  // leading virtual zeros near the start
  std::vector<float> emb(static_cast<std::size_t>(cfg_.visual_dim));
  visual_encode_frame(clip.data(), clip.data() + np, clip.data() + 2 * np, cfg_, w_, emb.data());
  vemb_.append(emb.data(), 1);

  vraw_.drop_before(v - 1);
  ++stats_.video_frames_in;
  stats_.seconds_visual += since(t0);
}

void StreamSession::process_ready(std::vector<float>& out) {
  const int S = cfg_.enc_stride, K = cfg_.enc_kernel;
  const int Ce = cfg_.enc_channels, Vd = cfg_.visual_dim, Fd = cfg_.fused_dim();
  const int rep = cfg_.repeat_factor();
  const std::int64_t delay = static_cast<std::int64_t>(kFeedbackDelayFrames) * S;
  const std::int64_t avail = in_.end() / S;

  std::vector<float> wins, E, gbuf, masked(static_cast<std::size_t>(Ce)),
      frame(static_cast<std::size_t>(K));
  std::vector<const float*> xs;
  std::vector<float*> ys;

  while (frames_done_ < avail) {
    const int G = static_cast<int>(std::min<std::int64_t>(kBatchFrames, avail - frames_done_));
    const std::int64_t t0 = frames_done_;

    // Speech encoder over the G analysis windows.
    auto tp = Clock::now();
    wins.resize(static_cast<std::size_t>(G) * K);
    E.resize(static_cast<std::size_t>(G) * Ce);
    xs.resize(static_cast<std::size_t>(G));
    ys.resize(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) {
      float* wp = wins.data() + static_cast<std::size_t>(i) * K;
      in_.read((t0 + i) * S - (K - S), K, wp);
      xs[i] = wp;
      ys[i] = E.data() + static_cast<std::size_t>(i) * Ce;
    }
    kern::matvec_cols(w_.w("enc.conv"), K, Ce, K, xs.data(), ys.data(), G);
    for (int i = 0; i < G; ++i) {
      kern::add_bias(ys[i], w_.b("enc.conv"), Ce);
      kern::relu(ys[i], Ce);
    }
    stats_.seconds_encode += since(tp);

    // Fused conditioning rows [speech | visual | acoustic]; zeros stand in
    // for whatever is absent (no video yet / acoustic branch off).
    Tensor fused = Tensor::zeros({G, Fd});
    for (int i = 0; i < G; ++i) {
      float* row = fused.ptr() + static_cast<std::size_t>(i) * Fd;
      std::memcpy(row, E.data() + static_cast<std::size_t>(i) * Ce,
                  static_cast<std::size_t>(Ce) * sizeof(float));
      if (vemb_.end() > 0) {
        const std::int64_t vt = std::min((t0 + i) / rep, vemb_.end() - 1);  // extend-last
        std::memcpy(row + Ce, vemb_.item(vt), static_cast<std::size_t>(Vd) * sizeof(float));
      }
    }

    if (use_ar_) {
      tp = Clock::now();
      const std::int64_t need = (t0 + G) * S;  // delayed-stream samples required so far
      const std::int64_t m = need - g_fed_;
      gbuf.resize(static_cast<std::size_t>(m));
      if (teacher_) {
        for (std::int64_t j = 0; j < m; ++j) {
          const std::int64_t idx = g_fed_ + j - delay;
          if (idx < 0) {
            gbuf[static_cast<std::size_t>(j)] = 0.0f;
          } else {
            require(idx < static_cast<std::int64_t>(teacher_->size()),
                    "stream: teacher feedback shorter than required");
            gbuf[static_cast<std::size_t>(j)] = (*teacher_)[static_cast<std::size_t>(idx)];
          }
        }
      } else {
        fb_.read(g_fed_ - delay, m, gbuf.data());
      }
      g_fed_ = need;
      stats_.max_feedback_read = std::max(stats_.max_feedback_read, need - 1 - delay);
      EmbeddingSeq a = acoustic_encode(gbuf, ast_, cfg_, w_);
      require(a.frames.dim(0) == G, "stream: acoustic frame accounting out of step");
      for (int i = 0; i < G; ++i)
        std::memcpy(fused.ptr() + static_cast<std::size_t>(i) * Fd + Ce + Vd,
                    a.frames.ptr() + static_cast<std::size_t>(i) * cfg_.acoustic_dim,
                    static_cast<std::size_t>(cfg_.acoustic_dim) * sizeof(float));
      stats_.seconds_acoustic += since(tp);
    }

    tp = Clock::now();
    EmbeddingSeq fsq;
    fsq.frames = std::move(fused);
    fsq.frame_rate = cfg_.frame_rate();
    EmbeddingSeq mask = skim_extract(fsq, skim_, cfg_, w_);
    stats_.seconds_extract += since(tp);

    // Mask, decode, overlap-add. Applying frame t finalizes samples
    // [t*S - S, t*S); frame 0's first half is the synthetic pad (dropped).
    tp = Clock::now();
    const std::size_t batch_start = out.size();
    for (int i = 0; i < G; ++i) {
      kern::mul(masked.data(), E.data() + static_cast<std::size_t>(i) * Ce,
                mask.frames.ptr() + static_cast<std::size_t>(i) * Ce, Ce);
      kern::matvec(w_.w("dec.linear"), Ce, K, Ce, masked.data(), frame.data());
      kern::add_bias(frame.data(), w_.b("dec.linear"), K);
      if (t0 + i == 0) {
        std::copy(frame.begin() + S, frame.end(), ola_tail_.begin());
      } else {
        const std::size_t base = out.size();
        out.resize(base + static_cast<std::size_t>(S));
        for (int j = 0; j < S; ++j) out[base + j] = ola_tail_[j] + frame[j];
        std::copy(frame.begin() + S, frame.end(), ola_tail_.begin());
      }
    }
    if (out.size() > batch_start)
      fb_.append(out.data() + batch_start, static_cast<std::int64_t>(out.size() - batch_start));
    stats_.seconds_decode += since(tp);

    // Forget what can no longer be read.
    in_.drop_before((t0 + G) * S - (K - S));
    if (use_ar_ && !teacher_) fb_.drop_before(g_fed_ - delay);
    if (vemb_.end() > 0) vemb_.drop_before(std::min((t0 + G) / rep, vemb_.end() - 1));

    frames_done_ += G;
    stats_.frames = frames_done_;
    ++stats_.batches;
  }
}

std::vector<float> StreamSession::push(const float* x, std::size_t n, const float* video,
                                       int video_frames) {
  require(!finished_, "stream: push after finish");
  require(video_frames == 0 || video != nullptr, "stream: null video pointer");
  const auto t0 = Clock::now();
  if (n > 0) {
    in_.append(x, static_cast<std::int64_t>(n));
    stats_.samples_in += static_cast<std::int64_t>(n);
  }
  const int np = cfg_.lip_h * cfg_.lip_w;
  for (int f = 0; f < video_frames; ++f)
    encode_video_frame(video + static_cast<std::size_t>(f) * np);
  std::vector<float> out;
  process_ready(out);
  stats_.samples_out += static_cast<std::int64_t>(out.size());
  stats_.seconds_total += since(t0);
  return out;
}

std::vector<float> StreamSession::finish() {
  require(!finished_, "stream: finish called twice");
  finished_ = true;
  const auto t0 = Clock::now();
  std::vector<float> out;
  if (frames_done_ >= 1) out = ola_tail_;  // [T*S - S, T*S): no later frame touches it
  stats_.samples_out += static_cast<std::int64_t>(out.size());
  stats_.seconds_total += since(t0);
  return out;
}

std::vector<float> forward_offline(const ModelConfig& cfg, const WeightStore& w,
                                   const std::vector<float>& x, const Tensor& v, bool use_ar,
                                   const std::vector<float>* feedback) {
  const float* video = nullptr;
  int nv = 0;
  if (v.numel() > 0) {
    require(v.shape.size() == 3 && v.dim(1) == cfg.lip_h && v.dim(2) == cfg.lip_w,
            "forward_offline: video must be [T, lip_h, lip_w]");
    video = v.ptr();
    nv = v.dim(0);
  }
  StreamSession s(cfg, w, use_ar, feedback);
  std::vector<float> out = s.push(x.data(), x.size(), video, nv);
  std::vector<float> tail = s.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

RtfReport measure_rtf(const ModelConfig& cfg, const WeightStore& w, double seconds,
                      double chunk_ms, bool use_ar, std::uint64_t seed) {
  require(seconds > 0 && chunk_ms > 0, "measure_rtf: durations must be positive");
  const int sr = cfg.sample_rate;
  const int np = cfg.lip_h * cfg.lip_w;
  const std::int64_t total = std::llround(sr * seconds);
  const std::int64_t spc =
      std::max<std::int64_t>(1, std::llround(sr * chunk_ms / 1000.0));

  // Generate everything up front; only session work is timed.
  std::vector<float> audio(static_cast<std::size_t>(total));
  {
    Rng rng = rng_for(seed, "rtf.audio");
    for (auto& s : audio) s = rng.next_symmetric(0.5f);
  }
  const std::int64_t vtotal =
      static_cast<std::int64_t>(static_cast<double>(total) * cfg.visual_fps / sr) + 1;
  std::vector<float> video(static_cast<std::size_t>(vtotal) * np);
  {
    Rng rng = rng_for(seed, "rtf.video");
    for (auto& s : video) s = rng.next_unit();
  }

  auto run = [&](std::int64_t limit, StreamSession& s) {
    std::int64_t pushed = 0, vpushed = 0;
    while (pushed < limit) {
      const std::int64_t n = std::min(spc, limit - pushed);
      const std::int64_t due = std::min<std::int64_t>(
          vtotal,
          static_cast<std::int64_t>(static_cast<double>(pushed + n) * cfg.visual_fps / sr) + 1);
      const int nv = static_cast<int>(due - vpushed);
      s.push(audio.data() + pushed, static_cast<std::size_t>(n),
             video.data() + vpushed * np, nv);
      pushed += n;
      vpushed = due;
    }
    s.finish();
  };

  {  // untimed warmup
    StreamSession warm(cfg, w, use_ar);
    run(std::min<std::int64_t>(total, sr / 4), warm);
  }

  StreamSession s(cfg, w, use_ar);
  const auto t0 = Clock::now();
  run(total, s);
  RtfReport r;
  r.wall_seconds = since(t0);
  r.audio_seconds = static_cast<double>(total) / sr;
  r.rtf = r.wall_seconds / r.audio_seconds;
  r.stats = s.stats();
  return r;
}

}  // namespace avse
