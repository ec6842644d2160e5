// lumiere: run, sweep, check and compare view-synchronization scenarios.
//
// Exit codes: 0 success, 1 lemma failure or delivery-contract violation,
// 2 malformed configuration or command line.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lumiere/harness.hpp"

namespace fs = std::filesystem;
using namespace lumiere;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Common {
  double horizon_multiplier = 0;
  bool no_timestamp = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

std::string default_out() {
  if (const char* env = std::getenv("LUMIERE_OUT"); env && *env) return env;
  return "out";
}

void write_stamp(std::ostream& os, const Common& common) {
  if (common.no_timestamp) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  os << "# generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "\n";
}

void write_rows(const fs::path& path, const std::vector<RunSummary>& rows, const Common& common) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError(path.string() + ": cannot write");
  write_stamp(os, common);
  write_csv_header(os);
  for (const auto& r : rows) write_csv_row(os, r);
}

int report_failures(const std::vector<RunSummary>& rows) {
  int bad = 0;
  for (const auto& r : rows) {
    if (r.ok()) continue;
    ++bad;
    std::cerr << r.scenario << " " << to_string(r.config.synchronizer) << " seed "
              << r.config.seed << ": "
              << (r.contract_error.empty() ? r.first_violation : r.contract_error) << "\n";
  }
  return bad;
}

int cmd_run(const std::string& scenario, std::uint64_t seed, const std::string& out,
            bool trace, const Common& common) {
  auto cfg = load_scenario(scenario);
  cfg.seed = seed;
  apply_horizon_multiplier(cfg, common.horizon_multiplier);
  validate(cfg);
  RunTrace tr;
  const auto name = fs::path(scenario).stem().string();
  const auto s = run_one(name, cfg, &tr);
  const fs::path dir(out);
  write_rows(dir / (name + ".csv"), {s}, common);
  if (trace && s.contract_error.empty()) {
    std::ofstream os(dir / (name + ".jsonl"));
    write_jsonl(tr, os);
  }
  write_csv_header(std::cout);
  write_csv_row(std::cout, s);
  return report_failures({s}) ? kExitFail : 0;
}

int cmd_sweep(const std::string& experiment, std::string out, const Common& common) {
  auto spec = load_experiment(experiment);
  if (common.horizon_multiplier > 0) spec.horizon_multiplier = common.horizon_multiplier;
  if (out.empty()) out = spec.out_dir.empty() ? default_out() : spec.out_dir;
  const auto jobs = expand(spec);
  std::cerr << spec.name << ": " << jobs.size() << " runs on " << common.jobs << " workers\n";
  const auto rows = run_jobs(jobs, common.jobs);
  const auto path = fs::path(out) / (spec.name + ".csv");
  write_rows(path, rows, common);
  std::cerr << "wrote " << path.string() << "\n";
  return report_failures(rows) ? kExitFail : 0;
}

int cmd_check(const std::string& scenario, const std::string& seeds, bool desync,
              const Common& common) {
  const auto base = load_scenario(scenario);
  const auto range = parse_seed_range(seeds);
  std::vector<Job> jobs;
  const auto name = fs::path(scenario).stem().string();
  for (auto s = range.first; s <= range.last; ++s) {
    auto c = base;
    c.seed = s;
    if (desync) randomize_desync(c, s);
    apply_horizon_multiplier(c, common.horizon_multiplier);
    validate(c);
    jobs.push_back({name, std::move(c)});
  }
  const auto rows = run_jobs(jobs, common.jobs);
  const int bad = report_failures(rows);
  std::cout << name << ": " << rows.size() - static_cast<std::size_t>(bad) << "/" << rows.size()
            << " seeds pass the lemma suite\n";
  return bad ? kExitFail : 0;
}

// Per (scenario, n, f_a, strategy, synchronizer): worst values over seeds.
void print_compare_table(std::ostream& os, const std::vector<RunSummary>& rows) {
  struct Agg {
    int runs = 0;
    std::uint64_t w_max = 0;
    Tick latency_max = 0;
    Tick latency_gst = 0;
    int heavy = 0;
    int failed = 0;
  };
  using Key = std::tuple<std::string, int, std::size_t, std::string, int>;
  std::map<Key, Agg> table;
  for (const auto& r : rows) {
    const auto& c = r.config;
    auto& a = table[{r.scenario, c.n, c.corrupted.size(), c.adversary.name,
                     static_cast<int>(c.synchronizer)}];
    ++a.runs;
    a.w_max = std::max(a.w_max, r.w_max);
    a.latency_max = std::max(a.latency_max, r.latency_max);
    a.latency_gst = std::max(a.latency_gst, r.latency_gst);
    a.heavy = std::max(a.heavy, r.heavy_epochs_after_gst);
    a.failed += r.ok() ? 0 : 1;
  }
  os << "scenario,n,f_a,strategy,synchronizer,runs,w_max,latency_max,latency_gst,"
        "heavy_epochs_after_gst,failed\n";
  for (const auto& [k, a] : table) {
    const auto& [scn, n, fa, strat, sync] = k;
    os << csv_escape(scn) << ',' << n << ',' << fa << ',' << csv_escape(strat) << ','
       << to_string(static_cast<SynchronizerKind>(sync)) << ',' << a.runs << ',' << a.w_max
       << ',' << a.latency_max << ',' << a.latency_gst << ',' << a.heavy << ',' << a.failed
       << "\n";
  }
}

int cmd_compare(const std::string& experiment, const std::string& out, const Common& common) {
  auto spec = load_experiment(experiment);
  if (common.horizon_multiplier > 0) spec.horizon_multiplier = common.horizon_multiplier;
  spec.synchronizer_axis = {SynchronizerKind::Lumiere, SynchronizerKind::Lp22,
                            SynchronizerKind::Basic};
  const auto rows = run_jobs(expand(spec), common.jobs);
  if (!out.empty()) write_rows(fs::path(out) / (spec.name + "_compare.csv"), rows, common);
  write_stamp(std::cout, common);
  print_compare_table(std::cout, rows);
  return report_failures(rows) ? kExitFail : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lumiere view synchronization simulator"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--horizon-multiplier", common.horizon_multiplier,
                    "set horizon to GST + k*n*gamma");
    sub->add_flag("--no-timestamp", common.no_timestamp, "omit the timestamp line in CSV output");
    sub->add_option("-j,--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  std::string scenario, experiment, seeds, out;
  std::uint64_t seed = 7;
  bool desync = false;
  bool no_trace = false;

  auto* run = app.add_subcommand("run", "run one scenario and write its CSV row and trace");
  run->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "seed");
  run->add_option("--out", out, "output directory (default $LUMIERE_OUT or ./out)");
  run->add_flag("--no-trace", no_trace, "skip the JSONL trace");
  add_common(run);

  auto* sweep = app.add_subcommand("sweep", "run an experiment grid in parallel");
  sweep->add_option("--experiment", experiment, "experiment JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "output directory");
  add_common(sweep);

  auto* check = app.add_subcommand("check", "lemma suite over a seed range");
  check->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--seeds", seeds, "seed range a..b")->required();
  check->add_flag("--desync", desync, "randomize pre-GST start offsets and drift per seed");
  add_common(check);

  auto* compare = app.add_subcommand("compare", "Lumiere vs LP22 vs Basic on one experiment");
  compare->add_option("--experiment", experiment, "experiment JSON")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out", out, "also write the per-run CSV here");
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(scenario, seed, out.empty() ? default_out() : out, !no_trace, common);
    if (*sweep) return cmd_sweep(experiment, out, common);
    if (*check) return cmd_check(scenario, seeds, desync, common);
    if (*compare) return cmd_compare(experiment, out, common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kExitFail;
  }
  return 0;
}
