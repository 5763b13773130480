// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// The assembled extraction network: a masking speech encoder/decoder around a
// segmented-LSTM extractor, conditioned on a lightweight visual encoder and an
// optional acoustic encoder that re-reads the engine's own past output.
//
// enumerate_layers() is the single source of truth for what exists: weight
// initialization, file audits, the analytic profiler, and the instrumented
// reference all walk the same declarations.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avse/common.hpp"
#include "avse/ops.hpp"

namespace avse {

// ===== configuration =====

struct ModelConfig {
  int sample_rate = 16000;
  int enc_channels = 128;
  int enc_kernel = 16;
  int enc_stride = 8;
  int skim_hidden = 384;
  int skim_layers = 3;
  int skim_segment = 50;
  double visual_fps = 25.0;
  int visual_dim = 64;     // embedding width == channels of the last block
  int visual_base = 24;    // channels of the front 3-D conv / early blocks
  int lip_h = 64;
  int lip_w = 64;
  int acoustic_dim = 64;
  int acoustic_hidden = 192;
  bool use_acoustic_encoder = true;
  bool clamp_mask = false;  // additionally clamp the mask to <= 1

  int frame_rate() const { return sample_rate / enc_stride; }
  // Audio frames per video frame; validate() guarantees integrality.
  int repeat_factor() const {
    return static_cast<int>(static_cast<double>(frame_rate()) / visual_fps + 0.5);
  }
  int fused_dim() const { return enc_channels + visual_dim + acoustic_dim; }
  // Channel plan of the visual stack: front conv then five blocks.
  std::vector<int> visual_channels() const {
    return {visual_base, visual_base, 2 * visual_base, 2 * visual_base, visual_dim, visual_dim};
  }

  void validate() const;

  static ModelConfig defaults() { return {}; }
  // Every width scaled down to <= 8 so an instrumented reference evaluation
  // of a full second finishes instantly; the topology is unchanged.
  static ModelConfig tiny();
};

// Number of encoder frames produced by n samples (causal left pad of
// kernel - stride): floor((n + pad - kernel) / stride) + 1.
std::int64_t frames_for_samples(const ModelConfig& cfg, std::int64_t n);

// ===== layer declarations =====

enum class Subsystem { speech_encoder, speech_decoder, visual, acoustic, extractor };

// Frames-per-second at which a layer runs: audio layers at
// sample_rate/stride, visual layers at visual_fps, the segment-memory LSTM
// once per segment.
enum class Rate { audio, video, segment };

struct LayerDecl {
  std::string path;  // canonical name, e.g. "visual.block3.dw"
  nn::LayerSpec spec;
  Subsystem subsystem;
  Rate rate;
};

std::vector<LayerDecl> enumerate_layers(const ModelConfig& cfg);

// ===== weights =====

struct WeightStore {
  std::map<std::string, Tensor> tensors;

  bool has(const std::string& name) const { return tensors.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  const float* w(const std::string& path) const { return get(path + ".w").ptr(); }
  const float* b(const std::string& path) const { return get(path + ".b").ptr(); }
};

// Deterministic: every tensor is drawn from its own (seed, name) stream with
// k = 1/sqrt(fan_in) — weights uniform in [-k, k], biases uniform in [0, k]
// (so no ReLU channel is dead at init) — and the same layer gets the same
// values regardless of which other layers the config declares.
WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Every declared tensor present with the declared shape; with
// allow_extra=false also: no undeclared tensors.
void audit_weights(const ModelConfig& cfg, const WeightStore& store, bool allow_extra = false);

// ===== embeddings =====

struct EmbeddingSeq {
  Tensor frames;      // [T, channels]
  double frame_rate;  // Hz
};

// ===== stateless / stateful forward pieces =====

// x -> [T, enc_channels] at sample_rate/stride Hz; ReLU outputs.
EmbeddingSeq speech_encode(const std::vector<float>& x, const ModelConfig& cfg,
                           const WeightStore& w);

// [T, enc_channels] -> T*stride samples (the leading synthetic-pad samples
// of the overlap-add are dropped). Linear in its input.
std::vector<float> speech_decode(const EmbeddingSeq& e, const ModelConfig& cfg,
                                 const WeightStore& w);

// v: [T_v, H, W] grayscale in [0,1] -> [T_v, visual_dim] at visual_fps.
// Causal: embedding t depends only on frames <= t.
EmbeddingSeq visual_encode(const Tensor& v, const ModelConfig& cfg, const WeightStore& w);

// One video frame of the same path (the streaming entry point): prev2/prev1
// are the two preceding [H, W] planes or null near the stream start; emb
// receives visual_dim floats. visual_encode() is a loop over this.
void visual_encode_frame(const float* prev2, const float* prev1, const float* cur,
                         const ModelConfig& cfg, const WeightStore& w, float* emb);

// Each frame repeated target_rate/e.frame_rate times (must be integral).
// target_len >= 0 truncates or extends-last to exactly that many frames.
EmbeddingSeq repeat_upsample(const EmbeddingSeq& e, double target_rate, int target_len = -1);

// Streaming state of the acoustic branch (conv stack + LSTM).
struct AcousticState {
  std::int64_t consumed = 0;   // input samples seen
  std::int64_t frames = 0;     // embeddings produced
  std::vector<float> sig_tail; // unconsumed input suffix (incl. window overlap)
  std::vector<float> c1_tail;  // last 2 encoder frames [2 * enc_channels]
  std::vector<float> c2_tail;  // last 2 conv1 frames   [2 * acoustic_hidden]
  nn::LstmState lstm;
  void reset();
};

// Feeds `past` (samples of previously extracted speech, any chunk size)
// through encoder conv -> two causal convs -> LSTM -> projection; one
// embedding per enc_stride samples. The assembled model applies the
// feedback delay before calling this, which is how A(t) comes to depend
// only on samples strictly before frame t.
EmbeddingSeq acoustic_encode(const std::vector<float>& past, AcousticState& st,
                             const ModelConfig& cfg, const WeightStore& w);

// Streaming state of the extractor.
struct SkimBlockState {
  nn::LstmState seg;            // within-segment LSTM
  nn::LstmState mem;            // memory LSTM (persists across segments)
  std::vector<float> carry_h;   // segment-initial state handed over by mem
  std::vector<float> carry_c;
};
struct SkimState {
  std::vector<SkimBlockState> blocks;
  std::int64_t frame = 0;  // absolute frame index (segment bookkeeping)
  void reset();
};
SkimState make_skim_state(const ModelConfig& cfg);

// fused: [T, enc+visual+acoustic] -> nonnegative mask [T, enc_channels].
// Per block: a within-segment LSTM; at each segment end the memory LSTM
// ingests the boundary hidden state and hands (output, cell) to the next
// segment as its initial state.
EmbeddingSeq skim_extract(const EmbeddingSeq& fused, SkimState& st, const ModelConfig& cfg,
                          const WeightStore& w);

// Whole-utterance evaluation. Defined as: open a streaming session, push
// everything, finish — so offline and online paths cannot diverge.
// use_ar=false runs with the zero acoustic placeholder. With use_ar=true,
// `feedback` (when given) is read in place of self-feedback, under the same
// delayed windowing; otherwise the session feeds back its own output.
std::vector<float> forward_offline(const ModelConfig& cfg, const WeightStore& w,
                                   const std::vector<float>& x, const Tensor& v, bool use_ar,
                                   const std::vector<float>* feedback = nullptr);

}  // namespace avse
