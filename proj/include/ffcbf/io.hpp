#pragma once

// Persistence: JSON configuration, summary and manifest documents, per-trial CSV tables.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffcbf/scenario.hpp"

namespace ffcbf::io {

using Json = nlohmann::ordered_json;

/// Raised for unreadable, malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full configuration as a document with the sections "scenario", "controller", "barrier", "lqr".
Json config_to_json(const ScenarioConfig& config);
/// Overlays `doc` on `base`. Missing keys keep the base value; unknown keys raise ConfigError.
ScenarioConfig config_from_json(const Json& doc, ScenarioConfig base = {});
ScenarioConfig load_config(const std::filesystem::path& path, const ScenarioConfig& base = {});

struct SummaryRow {
  std::string cbf;
  BatchSummary stats;
};

struct SummaryDocument {
  std::string scenario;
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t n_trials = 0;
  std::vector<SummaryRow> rows;
};

Json summary_to_json(const SummaryDocument& doc);
SummaryDocument summary_from_json(const Json& doc);
/// Deterministic text: pretty-printed, no timestamps, trailing newline.
std::string write_summary(const SummaryDocument& doc);
SummaryDocument read_summary(const std::string& text);

/// Fixed-width comparison table with one line per row.
std::string format_table(const SummaryDocument& doc);

struct RunManifest {
  std::string command;  // "run" or "compare"
  std::string version;
  std::string started_at;
  std::string finished_at;
  Json config;
  std::vector<std::string> kinds;
  std::size_t n_trials = 0;
  std::string log_trajectories;
  std::vector<std::uint64_t> trial_seeds;
  Json outputs = Json::object();
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& doc);

std::string trials_csv_header();
std::string trials_csv_row(const TrialResult& t);

/// Header of the per-trial log: t, then x_i,y_i,psi_i,beta_i,v_i,omega_i,a_i per vehicle,
/// then h0_ij,H_ij per pair, then feasible.
std::string trajectory_csv_header(int num_vehicles);
void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log);
TrajectoryLog read_trajectory_csv(std::istream& is);

/// Plot-ready projection of a log: t, x_i,y_i,psi_i,v_i,omega_i,a_i per vehicle, H_ij,h0_ij per pair.
std::string replay_csv_header(int num_vehicles);
void write_replay_csv(std::ostream& os, const TrajectoryLog& log);

/// %.9g
std::string format_number(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace ffcbf::io
