#include "ffcbf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ffcbf/io.hpp"
#include "ffcbf/scenario.hpp"

#ifndef FFCBF_VERSION
#define FFCBF_VERSION "0.0.0"
#endif

namespace ffcbf::cli {

namespace fs = std::filesystem;

const char* version() { return FFCBF_VERSION; }

namespace {

enum class LogPolicy { none, failures, all };

LogPolicy log_policy_from_string(const std::string& s) {
  if (s == "none") return LogPolicy::none;
  if (s == "all") return LogPolicy::all;
  return LogPolicy::failures;
}

bool is_failure(const TrialResult& t) {
  return !t.success || !t.always_feasible || t.deadlock || t.unsafe || t.timeout || !t.error.empty();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trajectory_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%05zu.csv", index);
  return buf;
}

struct BatchPlan {
  std::string command;
  ScenarioConfig config;
  std::vector<BarrierKind> kinds;
  std::size_t n_trials = 100;
  std::string log_trajectories = "failures";
  fs::path out;
  unsigned threads = 0;
};

/// Runs every kind on the same derived seeds and writes summary, tables, logs and manifest.
io::SummaryDocument execute(const BatchPlan& plan, std::ostream& out) {
  io::RunManifest manifest;
  manifest.command = plan.command;
  manifest.version = version();
  manifest.started_at = utc_now();
  manifest.config = io::config_to_json(plan.config);
  manifest.n_trials = plan.n_trials;
  manifest.log_trajectories = plan.log_trajectories;
  for (std::size_t i = 0; i < plan.n_trials; ++i) manifest.trial_seeds.push_back(trial_seed(plan.config.seed, i));

  io::SummaryDocument summary;
  summary.scenario = std::string(to_string(plan.config.scenario));
  summary.mode = std::string(to_string(plan.config.controller.mode));
  summary.seed = plan.config.seed;
  summary.n_trials = plan.n_trials;

  const LogPolicy policy = log_policy_from_string(plan.log_trajectories);
  const bool per_kind_dirs = plan.command == "compare";
  io::Json trial_tables = io::Json::object();
  io::Json trajectories = io::Json::array();
  fs::create_directories(plan.out);

  for (BarrierKind kind : plan.kinds) {
    const std::string name(to_string(kind));
    manifest.kinds.push_back(name);
    ScenarioConfig cfg = plan.config;
    cfg.controller.barrier.kind = kind;
    const fs::path rel_dir = per_kind_dirs ? fs::path(name) : fs::path();

    BatchOptions options;
    options.threads = plan.threads;
    if (policy != LogPolicy::none) {
      options.keep_log = [policy](const TrialResult& t) { return policy == LogPolicy::all || is_failure(t); };
    }
    std::vector<std::string> written;
    options.sink = [&](const TrialResult& t) {
      if (!t.log) return;
      const fs::path rel = rel_dir / "trajectories" / trajectory_name(t.trial_index);
      std::ostringstream csv;
      io::write_trajectory_csv(csv, *t.log);
      io::write_file(plan.out / rel, csv.str());
      written.push_back(rel.generic_string());
    };
    const BatchResult batch = run_batch(cfg, plan.n_trials, options);

    std::string table = io::trials_csv_header() + "\n";
    for (const TrialResult& t : batch.trials) table += io::trials_csv_row(t) + "\n";
    const fs::path trials_rel = rel_dir / "trials.csv";
    io::write_file(plan.out / trials_rel, table);
    trial_tables[name] = trials_rel.generic_string();
    std::sort(written.begin(), written.end());
    for (const std::string& w : written) trajectories.push_back(w);

    summary.rows.push_back({name, batch.summary});
  }

  io::write_file(plan.out / "summary.json", io::write_summary(summary));
  const std::string table = io::format_table(summary);
  manifest.outputs["summary"] = "summary.json";
  if (per_kind_dirs) {
    io::write_file(plan.out / "comparison.txt", table);
    manifest.outputs["table"] = "comparison.txt";
  }
  manifest.outputs["trials"] = trial_tables;
  manifest.outputs["trajectories"] = trajectories;
  manifest.finished_at = utc_now();
  io::write_file(plan.out / "manifest.json", io::manifest_to_json(manifest).dump(2) + "\n");
  out << table;
  return summary;
}

/// Flags shared by run and compare.
struct CommonFlags {
  std::string config_path;
  std::string scenario;
  std::string mode;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string log_trajectories = "failures";
  unsigned threads = 0;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON configuration file; flags override its values");
    app.add_option("--scenario", scenario, "straight | left-turn")
        ->check(CLI::IsMember({"straight", "left-turn", "all_straight", "one_left_turn"}));
    app.add_option("--mode", mode, "centralized | decentralized")
        ->check(CLI::IsMember({"centralized", "decentralized"}));
    app.add_option("--trials", trials, "number of trials")
        ->check(CLI::Validator(
            [](std::string& v) {
              return v.find_first_not_of("0") == std::string::npos ? std::string("must be at least 1") : std::string();
            },
            "N>=1"))
        ->capture_default_str();
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out, "output directory")->required();
    app.add_option("--log-trajectories", log_trajectories, "none | failures | all")
        ->check(CLI::IsMember({"none", "failures", "all"}))
        ->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0: FFCBF_THREADS or hardware)");
  }

  ScenarioConfig resolve() const {
    ScenarioConfig c = config_path.empty() ? ScenarioConfig{} : io::load_config(config_path);
    if (!scenario.empty()) c.scenario = scenario_kind_from_string(scenario);
    if (!mode.empty()) c.controller.mode = control_mode_from_string(mode);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }

  BatchPlan plan(const std::string& command) const {
    BatchPlan p;
    p.command = command;
    p.config = resolve();
    p.n_trials = trials;
    p.log_trajectories = log_trajectories;
    p.out = out;
    p.threads = threads;
    return p;
  }
};

/// Parses `args` into `app`; on failure prints the error with usage and returns the exit code.
std::optional<int> parse(CLI::App& app, const std::string& name, const std::vector<std::string>& args,
                         std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{name.c_str()};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 1;
  }
  return std::nullopt;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const io::ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::runtime_error& e) {
    // includes filesystem errors and exhausted initial-condition resampling
    err << "error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Run a batch of randomized intersection trials for one barrier kind", "ffcbf run");
  CommonFlags flags;
  flags.attach(app);
  std::string cbf;
  app.add_option("--cbf", cbf, "zero | ff | rff (default: the configured kind)")
      ->check(CLI::IsMember({"zero", "ff", "rff"}));
  if (auto code = parse(app, "ffcbf run", args, out, err)) return *code;
  return guarded(err, [&] {
    BatchPlan plan = flags.plan("run");
    if (!cbf.empty()) plan.config.controller.barrier.kind = barrier_kind_from_string(cbf);
    plan.kinds = {plan.config.controller.barrier.kind};
    execute(plan, out);
    return 0;
  });
}

int cmd_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Run zero, ff and rff barriers on paired trials and tabulate the metrics", "ffcbf compare");
  CommonFlags flags;
  flags.attach(app);
  if (auto code = parse(app, "ffcbf compare", args, out, err)) return *code;
  return guarded(err, [&] {
    BatchPlan plan = flags.plan("compare");
    plan.kinds = {BarrierKind::zero, BarrierKind::ff, BarrierKind::rff};
    execute(plan, out);
    return 0;
  });
}

int cmd_replay(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Convert a trajectory log into plot-ready columns", "ffcbf replay");
  std::string log_path;
  std::string out_path;
  app.add_option("--log", log_path, "trajectory log written by run/compare")->required();
  app.add_option("--out", out_path, "output CSV (default: standard output)");
  if (auto code = parse(app, "ffcbf replay", args, out, err)) return *code;
  return guarded(err, [&] {
    std::ifstream in(log_path);
    if (!in) throw io::ConfigError("trajectory log '" + log_path + "' not found");
    const TrajectoryLog log = io::read_trajectory_csv(in);
    std::ostringstream csv;
    io::write_replay_csv(csv, log);
    if (out_path.empty()) {
      out << csv.str();
    } else {
      io::write_file(out_path, csv.str());
    }
    return 0;
  });
}

int cmd_rerun(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Reproduce a batch from its manifest", "ffcbf rerun");
  std::string manifest_path;
  std::string out_dir;
  unsigned threads = 0;
  app.add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--threads", threads, "worker threads (0: FFCBF_THREADS or hardware)");
  if (auto code = parse(app, "ffcbf rerun", args, out, err)) return *code;
  return guarded(err, [&] {
    const io::RunManifest m = io::manifest_from_json(io::Json::parse(io::read_file(manifest_path)));
    BatchPlan plan;
    plan.command = m.command;
    plan.config = io::config_from_json(m.config);
    plan.n_trials = m.n_trials;
    plan.log_trajectories = m.log_trajectories;
    plan.out = out_dir;
    plan.threads = threads;
    for (const std::string& k : m.kinds) plan.kinds.push_back(barrier_kind_from_string(k));
    if (plan.kinds.empty() || plan.n_trials == 0) throw io::ConfigError("manifest lists no work");
    for (std::size_t i = 0; i < m.trial_seeds.size(); ++i) {
      if (m.trial_seeds[i] != trial_seed(plan.config.seed, i)) {
        throw io::ConfigError("manifest seed list does not match its base seed");
      }
    }
    if (m.version != version()) err << "warning: manifest written by version " << m.version << "\n";
    execute(plan, out);
    return 0;
  });
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const std::string usage =
      "usage: ffcbf <run|compare|replay|rerun> [flags]\n"
      "       ffcbf <command> --help for the flags of a command\n";
  if (argc < 2) {
    err << usage;
    return 1;
  }
  const std::string cmd = argv[1];
  const std::vector<std::string> rest(argv + 2, argv + argc);
  if (cmd == "run") return cmd_run(rest, out, err);
  if (cmd == "compare") return cmd_compare(rest, out, err);
  if (cmd == "replay") return cmd_replay(rest, out, err);
  if (cmd == "rerun") return cmd_rerun(rest, out, err);
  if (cmd == "--version" || cmd == "version") {
    out << version() << "\n";
    return 0;
  }
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << usage;
    return 0;
  }
  err << "error: unknown command '" << cmd << "'\n" << usage;
  return 1;
}

}  // namespace ffcbf::cli
