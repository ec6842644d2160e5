#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lumiere/config.hpp"
#include "lumiere/schedule.hpp"
#include "lumiere/types.hpp"

namespace lumiere {

// One point-to-point message. A broadcast appears once per recipient,
// including the sender's own copy, which is delivered at the send time.
struct SendRec {
  Tick t = 0;
  Tick deliver_at = 0;
  ProcessorId from = 0;
  ProcessorId to = 0;
  MsgKind kind = MsgKind::View;
  View view = 0;
  bool honest = true;
};

// Processor state right after a step. lc_before is the clock reading the
// step started from; rate is in 1/1000 per tick (0 while paused).
struct StateRec {
  Tick t = 0;
  ProcessorId proc = 0;
  Tick lc_before = 0;
  Tick lc = 0;
  int rate = 1000;
  bool paused = false;
  View view = kNoView;
  Epoch epoch = kNoEpoch;
};

struct EnterRec {
  Tick t = 0;
  ProcessorId proc = 0;
  View view = 0;
  Epoch epoch = 0;
};

struct BumpRec {
  Tick t = 0;
  ProcessorId proc = 0;
  Tick from = 0;
  Tick to = 0;
};

struct QcRec {
  Tick t = 0;
  ProcessorId leader = 0;
  View view = 0;
  Tick anchor = 0;
  Tick deadline = 0;
  bool honest_leader = true;
};

struct RunTrace {
  ScenarioConfig config;
  Tick gamma = 0;
  EpochLayout layout;
  std::optional<Schedule> schedule;
  std::vector<bool> honest;

  std::vector<SendRec> sends;
  std::vector<StateRec> states;
  std::vector<EnterRec> entries;
  std::vector<BumpRec> bumps;
  std::vector<QcRec> qcs;

  Tick end_time = 0;
  bool stopped_early = false;
  bool ledger_consistent = true;
  std::uint64_t events = 0;

  int n() const { return config.n; }
  int f() const { return config.f; }
  int f_actual() const { return static_cast<int>(config.corrupted.size()); }
  Tick c(View v) const { return clock_time_of(v, gamma); }

  ProcessorId leader_of(View v) const {
    if (schedule) return schedule->leader_of(v);
    const auto variant = config.synchronizer == SynchronizerKind::Lp22 ? BaselineVariant::Lp22
                                                                       : BaselineVariant::Basic;
    return baseline_leader_of(variant, v, config.n);
  }
  bool honest_leader(View v) const { return honest[leader_of(v)]; }
};

// ---------------------------------------------------------------------------
// Line-delimited JSON: one header line, then one record per event in time
// order. Record kinds: send, deliver, state, enter, bump, qc.

inline void write_jsonl(const RunTrace& tr, std::ostream& os) {
  nlohmann::json header{{"record", "header"},
                        {"config", to_json(tr.config)},
                        {"gamma", tr.gamma},
                        {"views_per_epoch", tr.layout.views_per_epoch},
                        {"end_time", tr.end_time},
                        {"stopped_early", tr.stopped_early}};
  os << header.dump() << '\n';

  struct Line {
    Tick t;
    int order;
    std::size_t idx;
  };
  std::vector<Line> lines;
  lines.reserve(2 * tr.sends.size() + tr.states.size() + tr.entries.size() + tr.bumps.size() +
                tr.qcs.size());
  for (std::size_t i = 0; i < tr.sends.size(); ++i) {
    lines.push_back({tr.sends[i].t, 0, i});
    lines.push_back({tr.sends[i].deliver_at, 1, i});
  }
  for (std::size_t i = 0; i < tr.states.size(); ++i) lines.push_back({tr.states[i].t, 2, i});
  for (std::size_t i = 0; i < tr.entries.size(); ++i) lines.push_back({tr.entries[i].t, 3, i});
  for (std::size_t i = 0; i < tr.bumps.size(); ++i) lines.push_back({tr.bumps[i].t, 4, i});
  for (std::size_t i = 0; i < tr.qcs.size(); ++i) lines.push_back({tr.qcs[i].t, 5, i});
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return a.t < b.t; });

  for (const auto& l : lines) {
    nlohmann::json j;
    j["t"] = l.t;
    switch (l.order) {
      case 0:
      case 1: {
        const auto& s = tr.sends[l.idx];
        j["record"] = l.order == 0 ? "send" : "deliver";
        j["actor"] = l.order == 0 ? s.from : s.to;
        j["peer"] = l.order == 0 ? s.to : s.from;
        j["msg"] = std::string(to_string(s.kind));
        j["view"] = s.view;
        break;
      }
      case 2: {
        const auto& s = tr.states[l.idx];
        j["record"] = "state";
        j["actor"] = s.proc;
        j["lc"] = s.lc;
        j["rate"] = s.rate;
        j["paused"] = s.paused;
        j["view"] = s.view;
        j["epoch"] = s.epoch;
        break;
      }
      case 3: {
        const auto& e = tr.entries[l.idx];
        j["record"] = "enter";
        j["actor"] = e.proc;
        j["view"] = e.view;
        j["epoch"] = e.epoch;
        break;
      }
      case 4: {
        const auto& b = tr.bumps[l.idx];
        j["record"] = "bump";
        j["actor"] = b.proc;
        j["from"] = b.from;
        j["to"] = b.to;
        break;
      }
      default: {
        const auto& q = tr.qcs[l.idx];
        j["record"] = "qc";
        j["actor"] = q.leader;
        j["view"] = q.view;
        j["anchor"] = q.anchor;
        j["deadline"] = q.deadline;
        break;
      }
    }
    os << j.dump() << '\n';
  }
}

// FNV-1a over every trace record, in recording order.
class Fnv1a {
 public:
  void add(std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
      h_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t content_hash(const RunTrace& tr) {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(tr.sends.size()));
  for (const auto& s : tr.sends) {
    h.add(s.t);
    h.add(s.deliver_at);
    h.add(s.from);
    h.add(s.to);
    h.add(static_cast<int>(s.kind));
    h.add(s.view);
  }
  h.add(static_cast<std::int64_t>(tr.states.size()));
  for (const auto& s : tr.states) {
    h.add(s.t);
    h.add(s.proc);
    h.add(s.lc_before);
    h.add(s.lc);
    h.add(s.rate);
    h.add(s.paused);
    h.add(s.view);
    h.add(s.epoch);
  }
  for (const auto& e : tr.entries) {
    h.add(e.t);
    h.add(e.proc);
    h.add(e.view);
  }
  for (const auto& b : tr.bumps) {
    h.add(b.t);
    h.add(b.proc);
    h.add(b.to);
  }
  for (const auto& q : tr.qcs) {
    h.add(q.t);
    h.add(q.leader);
    h.add(q.view);
  }
  h.add(tr.end_time);
  return h.value();
}

}  // namespace lumiere
