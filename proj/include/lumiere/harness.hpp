#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lumiere/config.hpp"
#include "lumiere/metrics.hpp"
#include "lumiere/sim.hpp"
#include "lumiere/trace.hpp"

namespace lumiere {

// ---------------------------------------------------------------------------
// Per-run summary, one CSV row each.

struct RunSummary {
  std::string scenario;
  ScenarioConfig config;

  std::uint64_t w_max = 0;       // max W_T over the stable window
  Tick latency_max = 0;          // max t*_T - T over the stable window
  Tick latency_gst = 0;          // t*_GST - GST
  Tick stable_from = 0;          // start of the first timely epoch after GST, else GST
  bool truncated = false;        // no honest-leader QC after GST
  int heavy_epochs_after_gst = 0;
  Epoch epochs_entered = kNoEpoch;
  std::uint64_t honest_sends = 0;
  std::uint64_t trace_hash = 0;

  bool lemma_ok = true;
  std::string first_violation;   // "check@t: detail"
  std::string contract_error;    // non-empty if the adversary broke the delivery contract

  bool ok() const { return lemma_ok && contract_error.empty(); }
};

// Distinct epoch views for which an honest processor sent an epoch-view
// message at or after GST.
inline int heavy_epochs_after(const RunTrace& tr, Tick from) {
  std::set<View> views;
  for (const auto& s : tr.sends) {
    if (s.honest && s.kind == MsgKind::EpochView && s.t >= from) views.insert(s.view);
  }
  return static_cast<int>(views.size());
}

inline Tick stable_from(const RunTrace& tr, const TraceIndex& idx) {
  for (Epoch e = 0; e <= idx.max_epoch_entered(); ++e) {
    const View v = tr.layout.first_view_of(e);
    const auto first = idx.first_reach(v);
    if (first && *first >= tr.config.gst && idx.timely_start(v)) {
      if (const auto s = idx.epoch_start(e)) return *s;
    }
  }
  return tr.config.gst;
}

inline RunSummary summarize(const std::string& scenario, const RunTrace& tr,
                            const LemmaReport& rep) {
  RunSummary s;
  s.scenario = scenario;
  s.config = tr.config;
  const TraceIndex idx(tr);
  const Measures m(tr);

  s.stable_from = stable_from(tr, idx);
  const auto [w, l] = m.max_over(s.stable_from, tr.end_time);
  s.w_max = w;
  s.latency_max = l;
  const auto at_gst = m.after(tr.config.gst);
  s.latency_gst = at_gst.latency();
  s.truncated = at_gst.truncated;
  s.heavy_epochs_after_gst = heavy_epochs_after(tr, tr.config.gst);
  s.epochs_entered = idx.max_epoch_entered();
  s.honest_sends = static_cast<std::uint64_t>(
      std::count_if(tr.sends.begin(), tr.sends.end(), [](const SendRec& r) { return r.honest; }));
  s.trace_hash = content_hash(tr);

  s.lemma_ok = rep.ok();
  if (!rep.ok()) {
    const auto& v = *std::min_element(
        rep.violations.begin(), rep.violations.end(),
        [](const Violation& a, const Violation& b) { return a.t < b.t; });
    s.first_violation = v.check + "@" + std::to_string(v.t) + ": " + v.detail;
  }
  return s;
}

// Runs one scenario end to end. A contract violation ends the run and is
// reported in the summary rather than thrown.
inline RunSummary run_one(const std::string& scenario, const ScenarioConfig& cfg,
                          RunTrace* keep = nullptr) {
  try {
    auto tr = simulate(cfg);
    const auto rep = check_lemma_suite(tr);
    auto s = summarize(scenario, tr, rep);
    if (keep) *keep = std::move(tr);
    return s;
  } catch (const ContractViolation& e) {
    RunSummary s;
    s.scenario = scenario;
    s.config = cfg;
    s.contract_error = e.what();
    return s;
  }
}

// ---------------------------------------------------------------------------
// CSV

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "scenario", "synchronizer", "strategy",  "mutation",     "seed",
      "n",        "f",            "f_a",       "delta",        "delta_actual",
      "gst",      "gamma",        "w_max",     "latency_max",  "latency_gst",
      "stable_from", "heavy_epochs_after_gst", "epochs_entered", "honest_sends",
      "trace_hash", "lemma",      "detail"};
  return cols;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline void write_csv_header(std::ostream& os) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
}

inline void write_csv_row(std::ostream& os, const RunSummary& s) {
  const auto& c = s.config;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << s.trace_hash;
  std::string verdict = "pass";
  std::string detail;
  if (!s.contract_error.empty()) {
    verdict = "contract_violation";
    detail = s.contract_error;
  } else if (!s.lemma_ok) {
    verdict = "fail";
    detail = s.first_violation;
  }
  os << csv_escape(s.scenario) << ',' << to_string(c.synchronizer) << ','
     << csv_escape(c.adversary.name) << ',' << to_string(c.mutation) << ',' << c.seed << ','
     << c.n << ',' << c.f << ',' << c.corrupted.size() << ',' << c.delta << ','
     << c.delta_actual << ',' << c.gst << ',' << c.gamma() << ',' << s.w_max << ','
     << s.latency_max << ',' << s.latency_gst << ',' << s.stable_from << ','
     << s.heavy_epochs_after_gst << ',' << s.epochs_entered << ',' << s.honest_sends << ','
     << hash.str() << ',' << verdict << ',' << csv_escape(detail) << "\n";
}

// ---------------------------------------------------------------------------
// Experiments

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;  // inclusive
};

// "a..b" or a single integer.
inline SeedRange parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {v, v};
    }
    const auto a = std::stoull(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    const auto rest = text.substr(dots + 2);
    const auto b = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    if (b < a) throw ConfigError("seed range " + text + " is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("bad seed range '" + text + "', expected a..b");
  }
}

struct ScenarioTemplate {
  std::string name;
  ScenarioConfig base;
};

// Every combination of the axes is applied to every template, for every seed.
// An empty axis leaves the template's value alone.
// f_a axis value meaning "as many as the scenario's f allows".
inline constexpr int kFaMax = -1;

struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<ScenarioTemplate> templates;
  SeedRange seeds{0, 0};
  std::vector<int> n_axis;
  std::vector<int> fa_axis;
  std::vector<Tick> delta_actual_axis;
  std::vector<std::string> strategy_axis;
  std::vector<SynchronizerKind> synchronizer_axis;
  bool desync = true;            // seeded pre-GST start offsets and drift
  double horizon_multiplier = 0; // > 0: horizon = GST + k * n * Γ
  std::string out_dir;
};

struct Job {
  std::string scenario;
  ScenarioConfig config;
};

// Corrupted ids for a given f_a, chosen by the seed.
inline std::vector<ProcessorId> pick_corrupted(int n, int f_a, std::uint64_t seed) {
  std::vector<ProcessorId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), ProcessorId{0});
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x51);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(f_a));
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline void apply_horizon_multiplier(ScenarioConfig& c, double k) {
  if (k <= 0) return;
  c.horizon = c.gst + static_cast<Tick>(k * static_cast<double>(c.n * c.gamma()));
}

inline std::vector<Job> expand(const ExperimentSpec& spec) {
  auto or_keep = []<typename T>(const std::vector<T>& axis) {
    return axis.empty() ? std::vector<std::optional<T>>{std::nullopt}
                        : std::vector<std::optional<T>>(axis.begin(), axis.end());
  };
  std::vector<Job> jobs;
  for (const auto& t : spec.templates) {
    for (const auto& n : or_keep(spec.n_axis)) {
      for (const auto& fa : or_keep(spec.fa_axis)) {
        for (const auto& d : or_keep(spec.delta_actual_axis)) {
          for (const auto& strat : or_keep(spec.strategy_axis)) {
            for (const auto& sync : or_keep(spec.synchronizer_axis)) {
              for (auto seed = spec.seeds.first; seed <= spec.seeds.last; ++seed) {
                ScenarioConfig c = t.base;
                if (n) {
                  c.n = *n;
                  c.f = (*n - 1) / 3;
                  if (!fa) c.corrupted = pick_corrupted(c.n, std::min<int>(c.f, c.corrupted.size()), seed);
                }
                if (fa) c.corrupted = pick_corrupted(c.n, *fa == kFaMax ? c.f : *fa, seed);
                if (d) c.delta_actual = *d;
                if (strat) c.adversary.name = *strat;
                if (sync) c.synchronizer = *sync;
                c.seed = seed;
                if (spec.desync) {
                  randomize_desync(c, seed);
                } else if (n) {
                  c.start_offsets.clear();
                  c.drift_permille.clear();
                }
                apply_horizon_multiplier(c, spec.horizon_multiplier);
                validate(c);
                jobs.push_back({t.name, std::move(c)});
              }
            }
          }
        }
      }
    }
  }
  return jobs;
}

inline ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, "",
                         {"name", "templates", "seeds", "axes", "desync", "horizon_multiplier",
                          "out"});
  ExperimentSpec s;
  if (j.contains("name")) s.name = detail::get_as<std::string>(j["name"], "/name");
  if (!j.contains("templates") || !j["templates"].is_array() || j["templates"].empty()) {
    throw ConfigError("/templates: expected a non-empty array");
  }
  for (std::size_t i = 0; i < j["templates"].size(); ++i) {
    const auto& t = j["templates"][i];
    const auto path = "/templates/" + std::to_string(i);
    detail::reject_unknown(t, path, {"name", "scenario"});
    ScenarioTemplate st;
    st.name = t.contains("name") ? detail::get_as<std::string>(t["name"], path + "/name")
                                 : "t" + std::to_string(i);
    if (!t.contains("scenario")) throw ConfigError(path + "/scenario: missing");
    try {
      st.base = scenario_from_json(t["scenario"]);
    } catch (const ConfigError& e) {
      throw ConfigError(path + "/scenario" + e.what());
    }
    s.templates.push_back(std::move(st));
  }
  if (j.contains("seeds")) {
    const auto& v = j["seeds"];
    if (v.is_string()) {
      s.seeds = parse_seed_range(v.get<std::string>());
    } else if (v.is_number_unsigned()) {
      s.seeds = {v.get<std::uint64_t>(), v.get<std::uint64_t>()};
    } else {
      throw ConfigError("/seeds: expected \"a..b\" or an integer");
    }
  }
  if (j.contains("axes")) {
    const auto& a = j["axes"];
    detail::reject_unknown(a, "/axes", {"n", "f_a", "delta_actual", "strategy", "synchronizer"});
    if (a.contains("n")) s.n_axis = detail::get_as<std::vector<int>>(a["n"], "/axes/n");
    if (a.contains("f_a")) {
      if (!a["f_a"].is_array()) throw ConfigError("/axes/f_a: expected an array");
      for (std::size_t i = 0; i < a["f_a"].size(); ++i) {
        const auto& v = a["f_a"][i];
        if (v == "f") {
          s.fa_axis.push_back(kFaMax);
        } else {
          s.fa_axis.push_back(detail::get_as<int>(v, "/axes/f_a/" + std::to_string(i)));
        }
      }
    }
    if (a.contains("delta_actual")) {
      s.delta_actual_axis = detail::get_as<std::vector<Tick>>(a["delta_actual"], "/axes/delta_actual");
    }
    if (a.contains("strategy")) {
      s.strategy_axis = detail::get_as<std::vector<std::string>>(a["strategy"], "/axes/strategy");
    }
    if (a.contains("synchronizer")) {
      const auto names =
          detail::get_as<std::vector<std::string>>(a["synchronizer"], "/axes/synchronizer");
      for (std::size_t i = 0; i < names.size(); ++i) {
        const auto k = parse_synchronizer(names[i]);
        if (!k) {
          throw ConfigError("/axes/synchronizer/" + std::to_string(i) + ": unknown synchronizer '" +
                            names[i] + "'");
        }
        s.synchronizer_axis.push_back(*k);
      }
    }
  }
  if (j.contains("desync")) s.desync = detail::get_as<bool>(j["desync"], "/desync");
  if (j.contains("horizon_multiplier")) {
    s.horizon_multiplier = detail::get_as<double>(j["horizon_multiplier"], "/horizon_multiplier");
  }
  if (j.contains("out")) s.out_dir = detail::get_as<std::string>(j["out"], "/out");
  return s;
}

inline ExperimentSpec load_experiment(const std::string& path) {
  const auto j = parse_json_text(read_file(path), path);
  try {
    auto s = experiment_from_json(j);
    expand(s);  // surface validation errors up front
    return s;
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Runs every job on a pool of `workers` threads. Results come back sorted by
// (scenario, synchronizer, seed, n, f_a, strategy) so the order never depends
// on scheduling.
inline std::vector<RunSummary> run_jobs(const std::vector<Job>& jobs, unsigned workers,
                                        const std::function<void(std::size_t)>& progress = {}) {
  std::vector<RunSummary> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  auto work = [&] {
    for (auto i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      out[i] = run_one(jobs[i].scenario, jobs[i].config);
      const auto d = done.fetch_add(1) + 1;
      if (progress) progress(d);
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  auto key = [](const RunSummary& s) {
    const auto& c = s.config;
    return std::tuple{s.scenario,        static_cast<int>(c.synchronizer), c.n,
                      c.corrupted.size(), c.adversary.name, c.delta_actual,
                      static_cast<int>(c.mutation), c.seed};
  };
  std::stable_sort(out.begin(), out.end(),
                   [&](const RunSummary& a, const RunSummary& b) { return key(a) < key(b); });
  return out;
}

}  // namespace lumiere
