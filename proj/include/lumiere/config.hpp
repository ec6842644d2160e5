#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lumiere/types.hpp"

namespace lumiere {

enum class SynchronizerKind { Lumiere, Lp22, Basic };

inline std::string_view to_string(SynchronizerKind s) {
  switch (s) {
    case SynchronizerKind::Lumiere: return "lumiere";
    case SynchronizerKind::Lp22: return "lp22";
    case SynchronizerKind::Basic: return "basic";
  }
  return "?";
}

// Deliberate protocol defects used to show the acceptance suite discriminates.
enum class Mutation { None, NoQcDeadline, EcThresholdFPlus1, NoEpochWait };

inline std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::None: return "none";
    case Mutation::NoQcDeadline: return "no_qc_deadline";
    case Mutation::EcThresholdFPlus1: return "ec_threshold_f1";
    case Mutation::NoEpochWait: return "no_epoch_wait";
  }
  return "?";
}

struct AdversaryConfig {
  std::string name = "none";
  std::map<std::string, std::int64_t> params;

  std::int64_t param(const std::string& key, std::int64_t fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  friend bool operator==(const AdversaryConfig&, const AdversaryConfig&) = default;
};

inline const std::vector<std::string>& known_strategies() {
  static const std::vector<std::string> names{"none", "silent_leaders", "fast_colluders",
                                              "max_delay", "qc_reorder"};
  return names;
}

struct ScenarioConfig {
  int n = 4;
  int f = 1;
  Tick delta = 40;         // Δ, known bound after GST
  Tick delta_actual = 4;   // δ, actual bound after GST
  Tick gst = 1000;
  int x = 2;
  int z = 2;
  std::uint64_t seed = 7;
  Tick horizon = 100000;
  std::vector<ProcessorId> corrupted;
  AdversaryConfig adversary;
  std::vector<Tick> start_offsets;   // empty: every processor starts at time 0
  std::vector<int> drift_permille;   // pre-GST clock rate in 1/1000; empty: 1000
  SynchronizerKind synchronizer = SynchronizerKind::Lumiere;
  Epoch stop_epoch = -1;             // stop once an honest processor enters it; -1: never
  Mutation mutation = Mutation::None;

  Tick gamma() const {
    return synchronizer == SynchronizerKind::Lp22 ? lp22_gamma(x, delta)
                                                  : lumiere_gamma(x, delta);
  }

  EpochLayout layout() const {
    switch (synchronizer) {
      case SynchronizerKind::Lumiere: return {10 * View{n}};
      case SynchronizerKind::Basic: return {2 * View{f + 1}};
      case SynchronizerKind::Lp22: return {View{f + 1}};
    }
    return {10 * View{n}};
  }

  int ec_threshold() const {
    return mutation == Mutation::EcThresholdFPlus1 ? f + 1 : 2 * f + 1;
  }

  bool is_corrupted(ProcessorId p) const {
    return std::find(corrupted.begin(), corrupted.end(), p) != corrupted.end();
  }

  Tick start_offset(ProcessorId p) const {
    return start_offsets.empty() ? 0 : start_offsets[p];
  }
  int drift(ProcessorId p) const { return drift_permille.empty() ? 1000 : drift_permille[p]; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// Throws ConfigError naming the offending field as a JSON pointer.
inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
  };
  if (c.f < 1) fail("/f", "must be >= 1");
  if (c.n != 3 * c.f + 1) fail("/n", "n must equal 3f+1");
  if (c.delta < 10) fail("/delta", "must be >= 10 ticks");
  if (c.delta_actual < 1) fail("/delta_actual", "must be >= 1");
  if (c.delta_actual > c.delta) fail("/delta_actual", "must not exceed delta");
  if (c.gst < 0) fail("/gst", "must be non-negative");
  if (c.x < 2) fail("/x", "must be >= 2");
  if (c.z < 2) fail("/z", "must be >= 2");
  if (c.z % 2 != 0) fail("/z", "must be even");
  if (c.horizon <= 0) fail("/horizon", "must be positive");
  if (static_cast<int>(c.corrupted.size()) > c.f) fail("/corrupted", "more than f processors");
  std::set<ProcessorId> seen;
  for (std::size_t i = 0; i < c.corrupted.size(); ++i) {
    const auto p = c.corrupted[i];
    if (p >= static_cast<ProcessorId>(c.n)) fail("/corrupted/" + std::to_string(i), "out of range");
    if (!seen.insert(p).second) fail("/corrupted/" + std::to_string(i), "duplicate");
  }
  if (std::find(known_strategies().begin(), known_strategies().end(), c.adversary.name) ==
      known_strategies().end()) {
    fail("/adversary/name", "unknown strategy '" + c.adversary.name + "'");
  }
  if (!c.start_offsets.empty()) {
    if (static_cast<int>(c.start_offsets.size()) != c.n) fail("/start_offsets", "needs n entries");
    for (std::size_t i = 0; i < c.start_offsets.size(); ++i) {
      const auto s = c.start_offsets[i];
      if (s < 0 || (s > 0 && s >= c.gst)) {
        fail("/start_offsets/" + std::to_string(i), "must lie in [0, gst)");
      }
    }
  }
  if (!c.drift_permille.empty()) {
    if (static_cast<int>(c.drift_permille.size()) != c.n) fail("/drift_permille", "needs n entries");
    for (std::size_t i = 0; i < c.drift_permille.size(); ++i) {
      if (c.drift_permille[i] <= 0) fail("/drift_permille/" + std::to_string(i), "must be positive");
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

inline std::optional<SynchronizerKind> parse_synchronizer(std::string_view s) {
  if (s == "lumiere") return SynchronizerKind::Lumiere;
  if (s == "lp22") return SynchronizerKind::Lp22;
  if (s == "basic") return SynchronizerKind::Basic;
  return std::nullopt;
}

inline std::optional<Mutation> parse_mutation(std::string_view s) {
  for (auto m : {Mutation::None, Mutation::NoQcDeadline, Mutation::EcThresholdFPlus1,
                 Mutation::NoEpochWait}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["f"] = c.f;
  j["delta"] = c.delta;
  j["delta_actual"] = c.delta_actual;
  j["gst"] = c.gst;
  j["x"] = c.x;
  j["z"] = c.z;
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["corrupted"] = c.corrupted;
  j["adversary"] = {{"name", c.adversary.name}, {"params", c.adversary.params}};
  j["start_offsets"] = c.start_offsets;
  j["drift_permille"] = c.drift_permille;
  j["synchronizer"] = std::string(to_string(c.synchronizer));
  j["stop_epoch"] = c.stop_epoch;
  j["mutation"] = std::string(to_string(c.mutation));
  return j;
}

namespace detail {

template <typename T>
T get_as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "/" : path) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(path + "/" + it.key() + ": unknown key");
    }
  }
}

}  // namespace detail

// Fields absent from the document keep their defaults. Unknown keys are
// rejected; every diagnostic starts with the JSON pointer of the bad value.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig c = {}) {
  using detail::get_as;
  detail::reject_unknown(j, "",
                         {"n", "f", "delta", "delta_actual", "gst", "x", "z", "seed", "horizon",
                          "corrupted", "adversary", "start_offsets", "drift_permille",
                          "synchronizer", "stop_epoch", "mutation"});
  if (j.contains("n")) c.n = get_as<int>(j["n"], "/n");
  if (j.contains("f")) c.f = get_as<int>(j["f"], "/f");
  if (j.contains("delta")) c.delta = get_as<Tick>(j["delta"], "/delta");
  if (j.contains("delta_actual")) c.delta_actual = get_as<Tick>(j["delta_actual"], "/delta_actual");
  if (j.contains("gst")) c.gst = get_as<Tick>(j["gst"], "/gst");
  if (j.contains("x")) c.x = get_as<int>(j["x"], "/x");
  if (j.contains("z")) c.z = get_as<int>(j["z"], "/z");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "/seed");
  if (j.contains("horizon")) c.horizon = get_as<Tick>(j["horizon"], "/horizon");
  if (j.contains("corrupted")) {
    c.corrupted = get_as<std::vector<ProcessorId>>(j["corrupted"], "/corrupted");
  }
  if (j.contains("adversary")) {
    const auto& a = j["adversary"];
    detail::reject_unknown(a, "/adversary", {"name", "params"});
    if (a.contains("name")) c.adversary.name = get_as<std::string>(a["name"], "/adversary/name");
    if (a.contains("params")) {
      c.adversary.params =
          get_as<std::map<std::string, std::int64_t>>(a["params"], "/adversary/params");
    }
  }
  if (j.contains("start_offsets")) {
    c.start_offsets = get_as<std::vector<Tick>>(j["start_offsets"], "/start_offsets");
  }
  if (j.contains("drift_permille")) {
    c.drift_permille = get_as<std::vector<int>>(j["drift_permille"], "/drift_permille");
  }
  if (j.contains("synchronizer")) {
    auto s = parse_synchronizer(get_as<std::string>(j["synchronizer"], "/synchronizer"));
    if (!s) throw ConfigError("/synchronizer: expected lumiere, lp22 or basic");
    c.synchronizer = *s;
  }
  if (j.contains("stop_epoch")) c.stop_epoch = get_as<Epoch>(j["stop_epoch"], "/stop_epoch");
  if (j.contains("mutation")) {
    auto m = parse_mutation(get_as<std::string>(j["mutation"], "/mutation"));
    if (!m) throw ConfigError("/mutation: unknown mutation");
    c.mutation = *m;
  }
  validate(c);
  return c;
}

// Parses JSON text; syntax errors report the line and column.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": malformed JSON");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ScenarioConfig load_scenario(const std::string& path) {
  const auto j = parse_json_text(read_file(path), path);
  try {
    return scenario_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Seeded pre-GST desynchronization: start offsets in [0, gst/2) and drift
// rates in [500, 2000] permille.
inline void randomize_desync(ScenarioConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  c.start_offsets.assign(c.n, 0);
  c.drift_permille.assign(c.n, 1000);
  if (c.gst <= 1) return;
  std::uniform_int_distribution<Tick> offset(0, std::max<Tick>(0, c.gst / 2 - 1));
  std::uniform_int_distribution<int> rate(500, 2000);
  for (int i = 0; i < c.n; ++i) {
    c.start_offsets[i] = offset(rng);
    c.drift_permille[i] = rate(rng);
  }
}

}  // namespace lumiere
