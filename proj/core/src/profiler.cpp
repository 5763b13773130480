// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "avse/profiler.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

namespace avse {

const char* subsystem_name(Subsystem s) {
  switch (s) {
    case Subsystem::speech_encoder: return "speech_encoder";
    case Subsystem::speech_decoder: return "speech_decoder";
    case Subsystem::visual: return "visual";
    case Subsystem::acoustic: return "acoustic";
    case Subsystem::extractor: return "extractor";
  }
  return "?";
}

std::uint64_t CostReport::subsystem_params(Subsystem s) const {
  for (const auto& t : subsystems)
    if (t.subsystem == s) return t.params;
  return 0;
}

double CostReport::subsystem_macs_per_s(Subsystem s) const {
  for (const auto& t : subsystems)
    if (t.subsystem == s) return t.macs_per_s;
  return 0.0;
}

CostReport profile(const ModelConfig& cfg, const WeightStore& w) {
  audit_weights(cfg, w, /*allow_extra=*/false);

  CostReport rep;
  for (const auto& decl : enumerate_layers(cfg)) {
    const nn::LayerCost cost = nn::layer_cost(decl.spec);
    CostRow row;
    row.path = decl.path;
    row.subsystem = decl.subsystem;
    row.params = cost.params;
    row.macs_per_frame = cost.macs_per_frame;
    switch (decl.rate) {
      case Rate::audio: row.rate_hz = cfg.frame_rate(); break;
      case Rate::video: row.rate_hz = cfg.visual_fps; break;
      case Rate::segment:
        row.rate_hz = static_cast<double>(cfg.frame_rate()) / cfg.skim_segment;
        break;
    }
    row.macs_per_s = static_cast<double>(cost.macs_per_frame) * row.rate_hz;
    rep.rows.push_back(std::move(row));
  }

  for (const auto& row : rep.rows) {
    SubsystemTotal* t = nullptr;
    for (auto& s : rep.subsystems)
      if (s.subsystem == row.subsystem) t = &s;
    if (t == nullptr) {
      rep.subsystems.push_back({row.subsystem, 0, 0.0});
      t = &rep.subsystems.back();
    }
    t->params += row.params;
    t->macs_per_s += row.macs_per_s;
  }
  for (const auto& t : rep.subsystems) {
    rep.total_params += t.params;
    rep.total_macs_per_s += t.macs_per_s;
  }
  return rep;
}

namespace {

std::string fmt_rate(double v) {
  char buf[64];
  if (v == std::floor(v) && std::fabs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string to_text(const CostReport& r) {
  std::string out;
  out +=
      "cost accounting (1 MAC = 1 scalar multiply in conv/linear/recurrent kernels;\n"
      "biases are params, not MACs; activations, pooling, upsampling, masking are free)\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-16s %12s %16s\n", "layer", "subsystem", "params",
                "MACs/s");
  out += line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-22s %-16s %12" PRIu64 " %16s\n", row.path.c_str(),
                  subsystem_name(row.subsystem), row.params, fmt_rate(row.macs_per_s).c_str());
    out += line;
  }
  out += "\n";
  for (const auto& t : r.subsystems) {
    std::snprintf(line, sizeof line, "%-39s %12" PRIu64 " %16s\n",
                  (std::string("subtotal ") + subsystem_name(t.subsystem)).c_str(), t.params,
                  fmt_rate(t.macs_per_s).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "%-39s %12" PRIu64 " %16s\n", "TOTAL", r.total_params,
                fmt_rate(r.total_macs_per_s).c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-39s %11.3fM %15.3fG\n", "",
                static_cast<double>(r.total_params) * 1e-6, r.total_macs_per_s * 1e-9);
  out += line;
  return out;
}

std::string to_csv(const CostReport& r) {
  std::string out = "path,subsystem,params,macs_per_frame,rate_hz,macs_per_s\n";
  char line[256];
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%s,%s,%" PRIu64 ",%" PRIu64 ",%s,%s\n", row.path.c_str(),
                  subsystem_name(row.subsystem), row.params, row.macs_per_frame,
                  fmt_rate(row.rate_hz).c_str(), fmt_rate(row.macs_per_s).c_str());
    out += line;
  }
  for (const auto& t : r.subsystems) {
    std::snprintf(line, sizeof line, "subtotal:%s,,%" PRIu64 ",,,%s\n",
                  subsystem_name(t.subsystem), t.params, fmt_rate(t.macs_per_s).c_str());
    out += line;
  }
  std::snprintf(line, sizeof line, "total,,%" PRIu64 ",,,%s\n", r.total_params,
                fmt_rate(r.total_macs_per_s).c_str());
  out += line;
  return out;
}

}  // namespace avse
