#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lumiere/adversary.hpp"
#include "lumiere/trace.hpp"

namespace lumiere {

// Random-access view of a trace: clock readings, view entry times and the
// global epoch timeline.
class TraceIndex {
 public:
  explicit TraceIndex(const RunTrace& tr) : tr_(tr) {
    const int n = tr.n();
    recs_.resize(n);
    entries_.resize(n);
    for (const auto& r : tr.states) recs_[r.proc].push_back(r);
    for (const auto& e : tr.entries) entries_[e.proc].push_back(e);
    for (ProcessorId p = 0; p < static_cast<ProcessorId>(n); ++p) {
      if (tr.honest[p]) honest_.push_back(p);
    }
  }

  const RunTrace& trace() const { return tr_; }
  const std::vector<ProcessorId>& honest() const { return honest_; }
  const std::vector<StateRec>& records(ProcessorId p) const { return recs_[p]; }

  // Clock of p at t. With inclusive=false, steps taken exactly at t are
  // ignored, giving the value just before t.
  Tick lc_at(ProcessorId p, Tick t, bool inclusive = true) const {
    const auto& rs = recs_[p];
    auto it = inclusive ? std::upper_bound(rs.begin(), rs.end(), t,
                                           [](Tick x, const StateRec& r) { return x < r.t; })
                        : std::lower_bound(rs.begin(), rs.end(), t,
                                           [](const StateRec& r, Tick x) { return r.t < x; });
    if (it == rs.begin()) return 0;
    const auto& r = *std::prev(it);
    return r.lc + (t - r.t) * r.rate / 1000;
  }

  std::vector<Tick> honest_clocks(Tick t, bool inclusive = true) const {
    std::vector<Tick> out;
    out.reserve(honest_.size());
    for (auto p : honest_) out.push_back(lc_at(p, t, inclusive));
    return out;
  }

  // hg_{i,t}: most advanced honest clock minus the i-th most advanced.
  Tick hg(int i, Tick t, bool inclusive = true) const {
    auto c = honest_clocks(t, inclusive);
    if (c.empty()) return 0;
    const auto k = static_cast<std::size_t>(std::clamp<int>(i, 1, static_cast<int>(c.size())));
    std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k - 1), c.end(),
                     std::greater<>());
    const Tick ith = c[k - 1];
    return *std::max_element(c.begin(), c.end()) - ith;
  }

  // First time p is in a view >= v.
  std::optional<Tick> view_reached(ProcessorId p, View v) const {
    const auto& es = entries_[p];
    auto it = std::lower_bound(es.begin(), es.end(), v,
                               [](const EnterRec& e, View x) { return e.view < x; });
    if (it == es.end()) return std::nullopt;
    return it->t;
  }

  // First time p is in epoch exactly e.
  std::optional<Tick> epoch_entered(ProcessorId p, Epoch e) const {
    for (const auto& en : entries_[p]) {
      if (en.epoch == e) return en.t;
      if (en.epoch > e) break;
    }
    return std::nullopt;
  }

  // vt_v: least time at which f+1 honest processors are in views >= v.
  std::optional<Tick> vt(View v) const { return kth_time(tr_.f() + 1, [&](ProcessorId p) {
    return view_reached(p, v);
  }); }

  // First time p's clock reaches x.
  std::optional<Tick> clock_reaches(ProcessorId p, Tick x) const {
    const auto& rs = recs_[p];
    Tick best = std::numeric_limits<Tick>::max();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& r = rs[i];
      if (r.lc_before >= x || r.lc >= x) {
        best = r.t;
        if (i > 0 && rs[i - 1].rate > 0) {
          const auto& q = rs[i - 1];
          const Tick at = q.t + ((x - q.lc) * 1000 + q.rate - 1) / q.rate;
          best = std::min(best, std::max(at, q.t));
        }
        return best;
      }
    }
    if (!rs.empty() && rs.back().rate > 0) {
      const auto& q = rs.back();
      const Tick at = q.t + ((x - q.lc) * 1000 + q.rate - 1) / q.rate;
      if (at <= tr_.end_time) return at;
    }
    return std::nullopt;
  }

  std::optional<Tick> epoch_start(Epoch e) const { return vt(tr_.layout.first_view_of(e)); }

  // end_e: first time the (f+1)-th most advanced honest clock reaches c_{V(e+1)}.
  std::optional<Tick> epoch_end(Epoch e) const {
    const Tick x = tr_.c(tr_.layout.first_view_of(e + 1));
    return kth_time(tr_.f() + 1, [&](ProcessorId p) { return clock_reaches(p, x); });
  }

  // Earliest time any honest processor is in a view >= v.
  std::optional<Tick> first_reach(View v) const {
    return kth_time(1, [&](ProcessorId p) { return view_reached(p, v); });
  }

  Epoch max_epoch_entered() const {
    Epoch m = kNoEpoch;
    for (auto p : honest_) {
      if (!entries_[p].empty()) m = std::max(m, entries_[p].back().epoch);
    }
    return m;
  }

  // Timely start of initial view v: first honest entrant after GST and
  // hg_{f+1} <= Γ + 2Δ at vt_v.
  bool timely_start(View v) const {
    const auto first = first_reach(v);
    const auto t = vt(v);
    if (!first || !t || *first < tr_.config.gst) return false;
    return hg(tr_.f() + 1, *t) <= tr_.gamma + 2 * tr_.config.delta;
  }

 private:
  template <typename F>
  std::optional<Tick> kth_time(int k, F&& time_of) const {
    std::vector<Tick> ts;
    for (auto p : honest_) {
      if (auto t = time_of(p)) ts.push_back(*t);
    }
    if (static_cast<int>(ts.size()) < k) return std::nullopt;
    std::nth_element(ts.begin(), ts.begin() + (k - 1), ts.end());
    return ts[static_cast<std::size_t>(k - 1)];
  }

  const RunTrace& tr_;
  std::vector<std::vector<StateRec>> recs_;
  std::vector<std::vector<EnterRec>> entries_;
  std::vector<ProcessorId> honest_;
};

inline Tick honest_gap(const RunTrace& tr, int i, Tick t) { return TraceIndex(tr).hg(i, t); }

// Definition-level helper used by tests: gap between the largest and the
// i-th largest value, ties broken by index.
inline Tick honest_gap_of(std::vector<Tick> clocks, int i) {
  if (clocks.empty()) return 0;
  std::stable_sort(clocks.begin(), clocks.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::clamp<int>(i, 1, static_cast<int>(clocks.size())));
  return clocks.front() - clocks[k - 1];
}

// ---------------------------------------------------------------------------
// Complexity measures

struct Window {
  Tick T = 0;
  Tick t_star = 0;
  bool truncated = false;  // no honest-leader QC after T before the run ended
  std::uint64_t sends = 0;

  Tick latency() const { return t_star - T; }
};

class Measures {
 public:
  explicit Measures(const RunTrace& tr) : tr_(tr) {
    for (const auto& s : tr.sends) {
      if (s.honest) send_times_.push_back(s.t);
    }
    std::sort(send_times_.begin(), send_times_.end());
    for (const auto& q : tr.qcs) {
      if (q.honest_leader) qc_times_.push_back(q.t);
    }
    std::sort(qc_times_.begin(), qc_times_.end());
  }

  std::uint64_t sends_between(Tick a, Tick b) const {
    auto lo = std::lower_bound(send_times_.begin(), send_times_.end(), a);
    auto hi = std::lower_bound(send_times_.begin(), send_times_.end(), b);
    return static_cast<std::uint64_t>(hi - lo);
  }

  // W_T and t*_T: honest sends in [T, t*_T), where t*_T is the first time
  // after T that an honest leader forms a QC.
  Window after(Tick T) const {
    Window w;
    w.T = T;
    auto it = std::upper_bound(qc_times_.begin(), qc_times_.end(), T);
    if (it == qc_times_.end()) {
      w.truncated = true;
      w.t_star = tr_.end_time;
    } else {
      w.t_star = *it;
    }
    w.sends = sends_between(T, w.t_star);
    return w;
  }

  // Maximum over a grid of T values with step Δ in [from, to).
  std::pair<std::uint64_t, Tick> max_over(Tick from, Tick to) const {
    std::uint64_t wmax = 0;
    Tick lmax = 0;
    for (Tick T = from; T < to; T += tr_.config.delta) {
      const auto w = after(T);
      if (w.truncated) break;
      wmax = std::max(wmax, w.sends);
      lmax = std::max(lmax, w.latency());
    }
    return {wmax, lmax};
  }

  const std::vector<Tick>& honest_qc_times() const { return qc_times_; }

 private:
  const RunTrace& tr_;
  std::vector<Tick> send_times_;
  std::vector<Tick> qc_times_;
};

inline Window w_after(const RunTrace& tr, Tick T) { return Measures(tr).after(T); }
inline Tick latency_after(const RunTrace& tr, Tick T) { return Measures(tr).after(T).latency(); }

// First honest-leader view that every honest processor occupies together
// from some time t >= GST until it gets the view's QC or x*Delta passes.
// Empty if the run has no such view.
inline std::optional<View> sync_witness(const RunTrace& tr) {
  const auto n = static_cast<std::size_t>(tr.n());
  constexpr Tick kNever = std::numeric_limits<Tick>::max();
  // Per view: honest entry time and the next entry after it, per processor.
  std::map<View, std::vector<Tick>> enter, leave;
  std::vector<std::optional<View>> current(n);
  for (const auto& e : tr.entries) {
    if (!tr.honest[e.proc]) continue;
    if (const auto cur = current[e.proc]) leave[*cur][e.proc] = e.t;
    auto& in = enter.try_emplace(e.view, n, kNever).first->second;
    leave.try_emplace(e.view, n, kNever);
    in[e.proc] = std::min(in[e.proc], e.t);
    current[e.proc] = e.view;
  }
  std::map<View, std::vector<Tick>> qc_at;
  for (const auto& s : tr.sends) {
    if (s.kind != MsgKind::QC) continue;
    auto& q = qc_at.try_emplace(s.view, n, kNever).first->second;
    q[s.to] = std::min(q[s.to], s.deliver_at);
  }
  for (const auto& q : tr.qcs) {
    auto& r = qc_at.try_emplace(q.view, n, kNever).first->second;
    r[q.leader] = std::min(r[q.leader], q.t);
  }
  const Tick span = static_cast<Tick>(tr.config.x) * tr.config.delta;
  for (const auto& [v, in] : enter) {
    if (!tr.honest_leader(v)) continue;
    Tick t = 0;
    bool all = true;
    for (std::size_t p = 0; p < n; ++p) {
      if (!tr.honest[p]) continue;
      if (in[p] == kNever) all = false;
      t = std::max(t, in[p]);
    }
    if (!all || t < tr.config.gst) continue;
    const auto qit = qc_at.find(v);
    bool held = true;
    for (std::size_t p = 0; p < n && held; ++p) {
      if (!tr.honest[p]) continue;
      const Tick qc = qit == qc_at.end() ? kNever : qit->second[p];
      const Tick until = std::min(qc, t + span);
      held = until <= tr.end_time && leave.at(v)[p] >= until;
    }
    if (held) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lemma suite

struct Violation {
  std::string check;
  Tick t = 0;
  ProcessorId proc = 0;
  std::string detail;
};

struct LemmaReport {
  std::vector<Violation> violations;
  std::map<std::string, std::uint64_t> checked;  // instances examined per check

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& check) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [&](const Violation& v) { return v.check == check; }));
  }
  // Earliest counterexample for each failing check.
  std::string summary() const {
    std::map<std::string, const Violation*> first;
    for (const auto& v : violations) {
      auto& slot = first[v.check];
      if (!slot || v.t < slot->t) slot = &v;
    }
    std::ostringstream os;
    for (const auto& [name, v] : first) {
      os << name << " x" << count(name) << " first at t=" << v->t << " p" << v->proc << ": "
         << v->detail << "\n";
    }
    return os.str();
  }
};

namespace lemma {

inline constexpr std::size_t kMaxPerCheck = 20;

class Checker {
 public:
  Checker(const RunTrace& tr, LemmaReport& rep) : tr_(tr), idx_(tr), rep_(rep) {}

  void run() {
    const bool lumiere = tr_.config.synchronizer == SynchronizerKind::Lumiere;
    monotonicity();
    epoch_coherence();
    entry_causality();
    dedup();
    delivery_contract();
    ledger();
    if (tr_.config.synchronizer != SynchronizerKind::Lp22) qc_deadline();
    if (lumiere) {
      clock_window();
      primary_bump_bound();
      epoch_start_bound();
      gap_non_increase();
      timely_start_consequences();
    }
  }

 private:
  void fail(const std::string& check, Tick t, ProcessorId p, std::string detail) {
    if (rep_.count(check) >= kMaxPerCheck) return;
    rep_.violations.push_back({check, t, p, std::move(detail)});
  }
  void tick(const std::string& check, std::uint64_t k = 1) { rep_.checked[check] += k; }

  void monotonicity() {
    for (auto p : idx_.honest()) {
      const StateRec* prev = nullptr;
      for (const auto& r : idx_.records(p)) {
        tick("monotonicity");
        if (r.lc < r.lc_before) fail("monotonicity", r.t, p, "clock moved backwards in a step");
        if (prev) {
          if (r.lc_before < prev->lc) fail("monotonicity", r.t, p, "clock moved backwards");
          if (r.view < prev->view) {
            fail("monotonicity", r.t, p,
                 "view " + std::to_string(prev->view) + " -> " + std::to_string(r.view));
          }
          if (r.epoch < prev->epoch) fail("monotonicity", r.t, p, "epoch decreased");
        }
        prev = &r;
      }
    }
  }

  void epoch_coherence() {
    for (const auto& r : tr_.states) {
      if (r.view < 0) continue;
      tick("epoch_coherence");
      if (r.epoch != tr_.layout.epoch_of(r.view)) {
        fail("epoch_coherence", r.t, r.proc,
             "view " + std::to_string(r.view) + " in epoch " + std::to_string(r.epoch));
      }
    }
  }

  // Initial view v0: lc in [c_v0, c_v0+2]; view v0+1: lc in [c_v0+1, c_v0+2].
  bool in_window(View v, Tick lc) const {
    if (v < 0) return true;
    const View hi = is_initial(v) ? v + 2 : v + 1;
    return lc >= tr_.c(v) && lc <= tr_.c(hi);
  }

  void clock_window() {
    for (auto p : idx_.honest()) {
      const StateRec* prev = nullptr;
      for (const auto& r : idx_.records(p)) {
        tick("clock_window");
        if (!in_window(r.view, r.lc)) {
          fail("clock_window", r.t, p,
               "view " + std::to_string(r.view) + " with lc " + std::to_string(r.lc));
        }
        if (prev && !in_window(prev->view, r.lc_before)) {
          fail("clock_window", r.t, p,
               "view " + std::to_string(prev->view) + " reached lc " +
                   std::to_string(r.lc_before));
        }
        prev = &r;
      }
    }
  }

  void entry_causality() {
    const Epoch top = idx_.max_epoch_entered();
    // Being in epoch -1 means having started.
    auto entered = [this](ProcessorId q, Epoch e) -> std::optional<Tick> {
      if (e >= 0) return idx_.epoch_entered(q, e);
      const auto& rs = idx_.records(q);
      if (rs.empty()) return std::nullopt;
      return rs.front().t;
    };
    for (Epoch e = 0; e <= top; ++e) {
      for (auto p : idx_.honest()) {
        const auto t = idx_.epoch_entered(p, e);
        if (!t) continue;
        tick("entry_causality");
        int before = 0;
        for (auto q : idx_.honest()) {
          const auto tq = entered(q, e - 1);
          if (tq && *tq <= *t) ++before;
        }
        if (before < tr_.f() + 1) {
          fail("entry_causality", *t, p,
               "entered epoch " + std::to_string(e) + " with only " + std::to_string(before) +
                   " honest processors previously in epoch " + std::to_string(e - 1));
        }
      }
    }
  }

  void primary_bump_bound() {
    const Tick gamma = tr_.gamma;
    for (const auto& b : tr_.bumps) {
      Tick prior = 0;
      for (auto q : idx_.honest()) prior = std::max(prior, idx_.lc_at(q, b.t, false));
      if (b.to <= prior) continue;
      tick("primary_bump_bound");
      const Tick g = idx_.hg(tr_.f() + 1, b.t);
      if (g > gamma) {
        fail("primary_bump_bound", b.t, b.proc,
             "hg_{f+1} = " + std::to_string(g) + " > Γ after primary bump to " +
                 std::to_string(b.to));
      }
    }
  }

  // Epochs whose first honest entrant arrives at or after GST.
  std::vector<Epoch> post_gst_epochs() const {
    std::vector<Epoch> out;
    for (Epoch e = 0; e <= idx_.max_epoch_entered(); ++e) {
      const auto first = idx_.first_reach(tr_.layout.first_view_of(e));
      if (first && *first >= tr_.config.gst) out.push_back(e);
    }
    return out;
  }

  void epoch_start_bound() {
    const Tick bound = (4 * tr_.f() + 2) * tr_.gamma;
    for (Epoch e : post_gst_epochs()) {
      const auto start = idx_.epoch_start(e);
      if (!start) continue;
      tick("epoch_start_bound");
      const Tick g = idx_.hg(tr_.f() + 1, *start);
      if (g >= bound) {
        fail("epoch_start_bound", *start, 0,
             "epoch " + std::to_string(e) + " starts with hg_{f+1} = " + std::to_string(g));
      }
    }
  }

  void gap_non_increase() {
    const Tick gamma = tr_.gamma;
    const int i = tr_.f() + 1;
    for (Epoch e : post_gst_epochs()) {
      const auto start = idx_.epoch_start(e);
      const auto end = idx_.epoch_end(e);
      if (!start || !end || *end < *start) continue;
      std::vector<Tick> times{*start, *end};
      for (const auto& r : tr_.states) {
        if (r.t > *start && r.t < *end) times.push_back(r.t);
      }
      std::sort(times.begin(), times.end());
      times.erase(std::unique(times.begin(), times.end()), times.end());
      Tick running_min = std::numeric_limits<Tick>::max();
      for (Tick t : times) {
        for (bool inclusive : {false, true}) {
          if (t == *start && !inclusive) continue;
          const Tick g = idx_.hg(i, t, inclusive);
          tick("gap_non_increase");
          if (g > running_min && g > gamma) {
            fail("gap_non_increase", t, 0,
                 "epoch " + std::to_string(e) + ": hg_{f+1} rose to " + std::to_string(g) +
                     " from " + std::to_string(running_min));
          }
          running_min = std::min(running_min, g);
        }
      }
    }
  }

  // For a timely epoch e that the run has fully passed: every honest-leader
  // view produced a QC, and nobody honest sent an epoch-view message for the
  // next epoch view.
  void timely_start_consequences() {
    const Epoch top = idx_.max_epoch_entered();
    std::map<View, bool> has_qc;
    for (const auto& q : tr_.qcs) has_qc[q.view] = true;
    for (Epoch e = 0; e + 2 <= top; ++e) {
      const View v0 = tr_.layout.first_view_of(e);
      if (!idx_.timely_start(v0)) continue;
      tick("timely_qc");
      for (View v = v0; v < v0 + tr_.layout.views_per_epoch; ++v) {
        if (tr_.honest_leader(v) && !has_qc.contains(v)) {
          fail("timely_qc", idx_.epoch_start(e).value_or(0), tr_.leader_of(v),
               "timely epoch " + std::to_string(e) + ": honest-leader view " +
                   std::to_string(v) + " produced no QC");
        }
      }
      tick("timely_no_epoch_msgs");
      const View next = tr_.layout.first_view_of(e + 1);
      for (const auto& s : tr_.sends) {
        if (s.honest && s.kind == MsgKind::EpochView && s.view == next) {
          fail("timely_no_epoch_msgs", s.t, s.from,
               "honest epoch-view message for view " + std::to_string(next) +
                   " after timely epoch " + std::to_string(e));
          break;
        }
      }
    }
  }

  void qc_deadline() {
    for (const auto& q : tr_.qcs) {
      if (!q.honest_leader) continue;
      tick("qc_deadline");
      if (q.t > q.deadline) {
        fail("qc_deadline", q.t, q.leader,
             "QC for view " + std::to_string(q.view) + " formed " +
                 std::to_string(q.t - q.deadline) + " after its deadline");
      }
    }
  }

  void dedup() {
    std::map<std::tuple<ProcessorId, View>, int> view_msgs, epoch_msgs;
    for (const auto& s : tr_.sends) {
      if (!s.honest) continue;
      if (s.kind == MsgKind::View) ++view_msgs[{s.from, s.view}];
      if (s.kind == MsgKind::EpochView) ++epoch_msgs[{s.from, s.view}];
    }
    for (const auto& [k, c] : view_msgs) {
      tick("dedup");
      if (c > 1) fail("dedup", 0, std::get<0>(k), "view message sent twice");
    }
    for (const auto& [k, c] : epoch_msgs) {
      tick("dedup");
      if (c > tr_.n()) fail("dedup", 0, std::get<0>(k), "epoch-view message sent twice");
    }
  }

  void delivery_contract() {
    const auto& c = tr_.config;
    for (const auto& s : tr_.sends) {
      tick("delivery_contract");
      if (s.from == s.to) {
        if (s.deliver_at != s.t) fail("delivery_contract", s.t, s.from, "delayed self-delivery");
        continue;
      }
      const auto w = delay_window(s.t, c.gst, c.delta, c.delta_actual);
      if (s.deliver_at < w.earliest || s.deliver_at > w.latest) {
        fail("delivery_contract", s.t, s.from, "delivery outside the partial-synchrony bound");
      }
    }
  }

  void ledger() {
    tick("ledger");
    if (!tr_.ledger_consistent) fail("ledger", 0, 0, "aggregate without matching partials");
  }

  const RunTrace& tr_;
  TraceIndex idx_;
  LemmaReport& rep_;
};

}  // namespace lemma

inline LemmaReport check_lemma_suite(const RunTrace& tr) {
  LemmaReport rep;
  lemma::Checker(tr, rep).run();
  return rep;
}

}  // namespace lumiere
