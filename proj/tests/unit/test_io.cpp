#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ffcbf/cli.hpp"
#include "ffcbf/io.hpp"

using namespace ffcbf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ffcbf_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "ffcbf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::size_t count_fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST_CASE("config round-trips and rejects unknown keys") {
  ScenarioConfig c;
  c.seed = 42;
  c.d0 = 15.0;
  c.controller.barrier.kind = BarrierKind::ff;
  c.controller.mode = ControlMode::decentralized;
  const io::Json doc = io::config_to_json(c);
  const ScenarioConfig back = io::config_from_json(doc);
  CHECK(io::config_to_json(back).dump() == doc.dump());

  io::Json bad = doc;
  bad["scenario"]["lane_wdith"] = 3.0;
  CHECK_THROWS_AS(io::config_from_json(bad), io::ConfigError);
  io::Json bad_section = io::Json::object();
  bad_section["vehicles"] = io::Json::object();
  CHECK_THROWS_AS(io::config_from_json(bad_section), io::ConfigError);
  io::Json partial = io::Json::object();
  partial["barrier"]["kind"] = "zero";
  CHECK(io::config_from_json(partial).controller.barrier.kind == BarrierKind::zero);
  io::Json invalid = io::Json::object();
  invalid["scenario"]["dt"] = -1.0;
  CHECK_THROWS_AS(io::config_from_json(invalid), io::ConfigError);
  CHECK_THROWS_AS(io::load_config("/nonexistent/ffcbf.json"), io::ConfigError);
}

TEST_CASE("shipped default config matches the built-in defaults") {
  const ScenarioConfig c = io::load_config(fs::path(FFCBF_SOURCE_DIR) / "configs" / "default.json");
  CHECK(io::config_to_json(c).dump() == io::config_to_json(ScenarioConfig{}).dump());
}

TEST_CASE("summary writer, reader and writer are byte-identical") {
  io::SummaryDocument doc;
  doc.scenario = "all_straight";
  doc.mode = "centralized";
  doc.seed = 3;
  doc.n_trials = 4;
  BatchSummary s;
  s.n_trials = 4;
  s.successes = 3;
  s.always_feasible = 4;
  s.deadlocks = 1;
  s.success_rate = 0.75;
  s.feas_rate = 1.0;
  s.deadlock_rate = 0.25;
  s.avg_time = 3.3333333333333335;
  doc.rows.push_back({"rff", s});
  s.avg_time.reset();
  doc.rows.push_back({"zero", s});
  const std::string text = io::write_summary(doc);
  CHECK(io::write_summary(io::read_summary(text)) == text);
  CHECK(text.back() == '\n');
  CHECK(io::format_table(doc).find("rff") != std::string::npos);
}

TEST_CASE("trajectory CSV round-trips and replay adds the documented columns") {
  TrajectoryLog log;
  log.num_vehicles = 2;
  for (int k = 0; k < 3; ++k) {
    TrajectorySample s;
    s.t = 0.01 * k;
    s.states = {{1.0 + k, 2.0, 0.5, 0.01, 6.0}, {-1.0, 0.25 * k, 3.0, 0.0, 5.5}};
    s.inputs = {{0.1, -1.0}, {0.0, 2.0}};
    s.h0 = {7.5};
    s.H = {3.25};
    s.feasible = k != 1;
    log.samples.push_back(s);
  }
  std::ostringstream os;
  io::write_trajectory_csv(os, log);
  std::istringstream is(os.str());
  const TrajectoryLog back = io::read_trajectory_csv(is);
  std::ostringstream os2;
  io::write_trajectory_csv(os2, back);
  CHECK(os.str() == os2.str());
  CHECK(back.samples[1].feasible == false);

  std::ostringstream rep;
  io::write_replay_csv(rep, back);
  std::istringstream lines(rep.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == io::replay_csv_header(2));
  CHECK(count_fields(header) == 1 + 6 * 2 + 2 * 1);
  std::string row;
  std::size_t rows = 0;
  while (std::getline(lines, row)) {
    CHECK(count_fields(row) == count_fields(header));
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("number formatting") {
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(1.0 / 3.0) == "0.333333333");
}

TEST_CASE("cli: flag validation and exit codes") {
  std::string err;
  CHECK(run_cli({"run", "--trials", "0", "--out", scratch("zero").string()}, nullptr, &err) != 0);
  CHECK(err.find("at least 1") != std::string::npos);
  CHECK(run_cli({"run", "--config", "/nonexistent/x.json", "--out", scratch("nc").string()}, nullptr, &err) == 2);
  CHECK(err.find("/nonexistent/x.json") != std::string::npos);
  CHECK(run_cli({"replay", "--log", "/nonexistent/log.csv"}, nullptr, &err) == 2);
  CHECK(run_cli({"bogus"}, nullptr, &err) != 0);
  CHECK(run_cli({"run", "--cbf", "hocbf", "--out", scratch("bad").string()}) != 0);
}

TEST_CASE("cli: compare pairs seeds and reruns from the manifest") {
  const fs::path out = scratch("compare");
  std::string text;
  REQUIRE(run_cli({"compare", "--trials", "6", "--seed", "11", "--threads", "2", "--log-trajectories", "all",
                   "--out", out.string()}, &text) == 0);
  CHECK(text.find("rff") != std::string::npos);
  for (const char* kind : {"zero", "ff", "rff"}) {
    CHECK(fs::exists(out / kind / "trials.csv"));
    CHECK(fs::exists(out / kind / "trajectories" / "trial_00000.csv"));
  }
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "comparison.txt"));

  // Paired seeds: the seed column is identical across controllers.
  auto seed_column = [&](const char* kind) {
    std::ifstream f(out / kind / "trials.csv");
    std::string line, seeds;
    std::getline(f, line);
    while (std::getline(f, line)) seeds += line.substr(0, line.find(',', line.find(',') + 1)) + "\n";
    return seeds;
  };
  CHECK(seed_column("zero") == seed_column("rff"));
  CHECK(seed_column("ff") == seed_column("rff"));

  const fs::path again = scratch("rerun");
  REQUIRE(run_cli({"rerun", "--manifest", (out / "manifest.json").string(), "--out", again.string()}) == 0);
  for (const char* kind : {"zero", "ff", "rff"}) {
    CHECK(io::read_file(out / kind / "trials.csv") == io::read_file(again / kind / "trials.csv"));
  }
  CHECK(io::read_file(out / "summary.json") == io::read_file(again / "summary.json"));

  const fs::path replay = out / "replay.csv";
  REQUIRE(run_cli({"replay", "--log", (out / "rff" / "trajectories" / "trial_00000.csv").string(), "--out",
                   replay.string()}) == 0);
  std::ifstream f(replay);
  std::string header;
  std::getline(f, header);
  CHECK(count_fields(header) == 1 + 6 * 4 + 2 * 6);
}

TEST_CASE("cli: run with a config file honours flag overrides") {
  const fs::path dir = scratch("cfg");
  ScenarioConfig c;
  c.scenario = ScenarioKind::one_left_turn;
  c.t_max = 20.0;
  io::write_file(dir / "c.json", io::config_to_json(c).dump(2));
  REQUIRE(run_cli({"run", "--config", (dir / "c.json").string(), "--cbf", "ff", "--trials", "2", "--seed", "1",
                   "--log-trajectories", "none", "--out", (dir / "o").string()}) == 0);
  const io::SummaryDocument s = io::read_summary(io::read_file(dir / "o" / "summary.json"));
  CHECK(s.scenario == "one_left_turn");
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].cbf == "ff");
  CHECK(s.n_trials == 2);
  CHECK_FALSE(fs::exists(dir / "o" / "trajectories"));
}
