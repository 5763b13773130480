// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Chunked real-time evaluation. A StreamSession accepts arbitrarily sized
// audio pushes (with video frames whenever they arrive) and emits extracted
// samples as soon as they are final; the sample stream it produces is
// bit-identical for every chunking, including all-at-once, because every
// inner product goes through the fixed-order kernels and all state is
// indexed by absolute frame position.
#pragma once

#include <cstdint>
#include <vector>

#include "avse/history.hpp"
#include "avse/model.hpp"

namespace avse {

// The acoustic branch reads the engine's own past output delayed by this
// many encoder frames. The delay makes self-feedback feasible in real time:
// processing frames [t0, t0 + C) needs feedback through sample
// (t0 + C) * stride - delay * stride - 1, and everything at or below
// t0 * stride - stride - 1 is already emitted, so any batch width
// C <= delay - 1 never waits on itself.
inline constexpr int kFeedbackDelayFrames = 8;
// Frames evaluated per inner batch (bounded by the feedback delay).
inline constexpr int kBatchFrames = 7;

// Worst-case number of future input samples an emitted sample can depend
// on. Sample m is final once frame floor(m/stride)+1 is computed, and that
// frame's analysis window ends at input sample m - (m % stride) + kernel - 1.
inline int algorithmic_latency_samples(const ModelConfig& cfg) { return cfg.enc_kernel - 1; }

struct SessionStats {
  std::int64_t samples_in = 0;
  std::int64_t video_frames_in = 0;
  std::int64_t frames = 0;       // encoder frames fully evaluated
  std::int64_t samples_out = 0;
  std::int64_t batches = 0;
  // Largest index into the engine's own emitted output that the acoustic
  // branch has read (-1: none). Always <= samples_out - 1 by construction;
  // the causality suite asserts the stronger per-frame bound.
  std::int64_t max_feedback_read = -1;
  double seconds_total = 0.0;
  double seconds_encode = 0.0;    // speech encoder windows
  double seconds_visual = 0.0;    // per-video-frame embedding
  double seconds_acoustic = 0.0;  // feedback branch
  double seconds_extract = 0.0;   // extractor blocks + projections
  double seconds_decode = 0.0;    // masking, decoder, overlap-add
};

class StreamSession {
 public:
  // `w` is held by reference and must outlive the session. With
  // use_ar=false the acoustic embedding is the all-zero placeholder. With
  // `teacher` set, the acoustic branch reads that signal (under the same
  // delay) instead of the session's own output — the second pass of the
  // two-pass training objective.
  StreamSession(const ModelConfig& cfg, const WeightStore& w, bool use_ar = true,
                const std::vector<float>* teacher = nullptr);

  // Feed n samples and (optionally) video_frames lip frames of lip_h x lip_w
  // floats each; returns every newly finalized output sample.
  std::vector<float> push(const float* x, std::size_t n, const float* video = nullptr,
                          int video_frames = 0);
  std::vector<float> push(const std::vector<float>& x) { return push(x.data(), x.size()); }

  // Flush: emits the final stride's worth of samples. After finish() the
  // total output length is stride * floor(samples_in / stride).
  std::vector<float> finish();

  void reset();
  bool finished() const { return finished_; }
  const SessionStats& stats() const { return stats_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  void encode_video_frame(const float* plane);
  void process_ready(std::vector<float>& out);

  ModelConfig cfg_;
  const WeightStore& w_;
  bool use_ar_;
  const std::vector<float>* teacher_;

  History in_{1};      // raw input samples
  History fb_{1};      // emitted samples (feedback source)
  History vraw_;       // last few raw lip planes
  History vemb_;       // visual embeddings, one per video frame
  AcousticState ast_;
  SkimState skim_;
  std::int64_t frames_done_ = 0;
  std::int64_t g_fed_ = 0;  // samples of the delayed feedback stream consumed
  std::vector<float> ola_tail_;
  bool finished_ = false;
  SessionStats stats_;
};

struct RtfReport {
  double audio_seconds = 0.0;
  double wall_seconds = 0.0;
  double rtf = 0.0;  // wall / audio; < 1 means faster than real time
  SessionStats stats;
};

// Streams `seconds` of synthetic audio+video through a session in chunks of
// chunk_ms and reports wall time over audio time. Input generation happens
// before the clock starts; a short untimed warmup run precedes measurement.
RtfReport measure_rtf(const ModelConfig& cfg, const WeightStore& w, double seconds,
                      double chunk_ms, bool use_ar, std::uint64_t seed);

}  // namespace avse
