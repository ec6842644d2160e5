#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "lumiere/config.hpp"
#include "lumiere/protocol.hpp"
#include "lumiere/types.hpp"

namespace lumiere {

// Bounds a delivery time must respect for a message sent at `now`.
struct DelayWindow {
  Tick earliest = 0;
  Tick latest = 0;
};

inline DelayWindow delay_window(Tick now, Tick gst, Tick delta, Tick delta_actual) {
  if (now >= gst) return {now, now + delta_actual};
  return {now, gst + delta};
}

// A message the adversary makes a corrupted processor send on its own.
struct Injection {
  ProcessorId from = 0;
  MsgKind kind = MsgKind::EpochView;
  View view = 0;
};

// Strategy family. Corrupted processors either stay silent or run the honest
// code with deviations; the strategy also picks every delivery time.
//
//   none            uniform delays, no deviations
//   silent_leaders  corrupted processors never send; every delay maximal
//   fast_colluders  corrupted processors vote on everything, ignore the QC
//                   deadline, send QCs only to a favored subset and echo
//                   every honest epoch-view message; honest traffic slow,
//                   corrupted traffic instant
//   max_delay       every delay maximal
//   qc_reorder      post-GST, QCs for the last 2(f+1) views of an epoch
//                   (except its final view) reach one victim late; every
//                   other message is instant
class Adversary {
 public:
  Adversary(const ScenarioConfig& cfg, EpochLayout layout)
      : cfg_(cfg), layout_(layout), rng_(cfg.seed * 0x2545f4914f6cdd1dULL + 17) {
    for (ProcessorId p = 0; p < static_cast<ProcessorId>(cfg.n); ++p) {
      if (!cfg.is_corrupted(p)) honest_.push_back(p);
    }
    victim_ = static_cast<ProcessorId>(
        cfg.adversary.param("victim", honest_.empty() ? 0 : honest_.back()));
  }

  const std::string& name() const { return cfg_.adversary.name; }

  bool silent(ProcessorId p) const { return cfg_.is_corrupted(p) && name() == "silent_leaders"; }

  Deviation deviation(ProcessorId p) const {
    if (cfg_.is_corrupted(p) && name() == "fast_colluders") return {true, true};
    return {};
  }

  // Recipients of a corrupted processor's broadcast.
  bool delivers_to(ProcessorId from, const Message& m, ProcessorId to) const {
    if (!cfg_.is_corrupted(from) || name() != "fast_colluders") return true;
    if (m.kind != MsgKind::QC) return true;
    return cfg_.is_corrupted(to) || favored(to);
  }

  // Messages corrupted processors send in reaction to an honest send.
  std::vector<Injection> react(ProcessorId from, const Message& m) {
    std::vector<Injection> out;
    if (name() != "fast_colluders" || cfg_.is_corrupted(from)) return out;
    if (m.kind != MsgKind::EpochView) return out;
    if (!echoed_.insert(m.view).second) return out;
    for (auto c : cfg_.corrupted) out.push_back({c, MsgKind::EpochView, m.view});
    return out;
  }

  Tick delivery_time(const Message& m, ProcessorId from, ProcessorId to, Tick now) {
    const auto w = delay_window(now, cfg_.gst, cfg_.delta, cfg_.delta_actual);
    const auto& s = name();
    if (s == "silent_leaders" || s == "max_delay") return w.latest;
    if (s == "fast_colluders") {
      if (cfg_.is_corrupted(from) || cfg_.is_corrupted(to)) return w.earliest;
      if (now >= cfg_.gst) return w.latest;
      return uniform(w);
    }
    if (s == "qc_reorder") {
      if (now >= cfg_.gst && to == victim_ && m.kind == MsgKind::QC && late_qc_view(m.view)) {
        return w.latest;
      }
      return std::min(w.earliest + 1, w.latest);
    }
    return uniform(w);
  }

 private:
  // Favored honest processors: the first f+1 honest ids.
  bool favored(ProcessorId p) const {
    const auto k = std::min<std::size_t>(honest_.size(), static_cast<std::size_t>(cfg_.f + 1));
    return std::find(honest_.begin(), honest_.begin() + static_cast<std::ptrdiff_t>(k), p) !=
           honest_.begin() + static_cast<std::ptrdiff_t>(k);
  }

  bool late_qc_view(View v) const {
    const View pos = v % layout_.views_per_epoch;
    const View from = layout_.views_per_epoch - 2 * (cfg_.f + 1);
    return pos >= from && pos < layout_.views_per_epoch - 1;
  }

  Tick uniform(const DelayWindow& w) {
    std::uniform_int_distribution<Tick> d(std::min(w.earliest + 1, w.latest), w.latest);
    return d(rng_);
  }

  ScenarioConfig cfg_;
  EpochLayout layout_;
  std::mt19937_64 rng_;
  std::vector<ProcessorId> honest_;
  ProcessorId victim_ = 0;
  std::set<View> echoed_;
};

}  // namespace lumiere
