#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ffcbf/controllers.hpp"
#include "ffcbf/dynamics.hpp"

namespace ffcbf {

enum class ScenarioKind { all_straight, one_left_turn };
std::string_view to_string(ScenarioKind kind);
/// Accepts "all_straight"/"straight" and "one_left_turn"/"left-turn".
ScenarioKind scenario_kind_from_string(std::string_view name);

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::all_straight;
  int num_vehicles = 4;
  double d0 = 12.0;
  double delta_d = 5.0;
  double s0 = 6.0;
  double delta_s = 3.0;
  double v_max = 10.0;
  double dt = 0.01;
  double t_max = 30.0;
  std::uint64_t seed = 0;
  double lane_width = 3.75;
  double box_half = 3.75;        // the intersection box is [-box_half, box_half]^2
  double R = 1.25;
  double stop_speed = 0.01;      // deadlock: every active vehicle below this speed ...
  double deadlock_window = 3.0;  // ... for this long
  double exit_tolerance = 0.5;   // lateral band around the exit lane centerline
  int max_resamples = 100;
  double reference_speed = 7.0;  // > 0: common cruise speed of every reference; 0: each vehicle's initial speed
  LqrWeights lqr;
  ControllerConfig controller;

  void validate() const;
  /// Controller settings with the scenario-level R, v_max and LQR weights applied.
  ControllerConfig resolved_controller() const;
};

/// Piecewise path (straight, or straight-arc-straight for a left turn) traversed at constant
/// speed from arc length 0.
class ReferencePath {
 public:
  static ReferencePath straight(int approach, double lane_width, double box_half, double start_distance);
  static ReferencePath left_turn(int approach, double lane_width, double box_half, double start_distance);

  Eigen::Vector2d point(double s) const;
  Eigen::Vector2d tangent(double s) const;
  NominalTarget target_at(double t, double speed) const;
  bool turns_left() const { return turning_; }
  double arc_radius() const { return radius_; }

 private:
  ReferencePath(int approach, double lane_width, double box_half, double start_distance, bool turning);
  // Canonical frame: approach from the south, travelling north.
  Eigen::Vector2d canonical_point(double s) const;
  Eigen::Vector2d canonical_tangent(double s) const;

  Eigen::Matrix2d rotation_;
  double half_lane_;
  double box_half_;
  double approach_length_;
  double radius_ = 0.0;
  bool turning_;
};

/// Four approach lanes meeting at the origin, right-hand traffic. Vehicle i enters from
/// approach i: 0 south (northbound), 1 east (westbound), 2 north (southbound), 3 west (eastbound).
class IntersectionWorld {
 public:
  explicit IntersectionWorld(const ScenarioConfig& config);

  int num_vehicles() const { return num_vehicles_; }
  bool turns_left(int vehicle) const;
  double heading(int approach) const;
  /// Lane centreline point of `approach` at `distance` metres before the box edge.
  Eigen::Vector2d entry_point(int approach, double distance) const;
  ReferencePath reference(int vehicle, double start_distance) const;
  /// Past the box on the designated exit lane, within the lateral tolerance.
  bool has_exited(int vehicle, const VehicleState& state) const;

 private:
  Eigen::Vector2d to_canonical(int approach, const Eigen::Vector2d& p) const;

  ScenarioKind scenario_;
  int num_vehicles_;
  double half_lane_;
  double box_half_;
  double exit_tolerance_;
};

IntersectionWorld build_world(const ScenarioConfig& config);

struct InitialConditions {
  std::vector<double> distances;
  std::vector<double> speeds;
  std::vector<VehicleState> states;
};

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index);

InitialConditions randomize_initial(const ScenarioConfig& config, std::mt19937_64& rng);

/// Minimum over tau in [0, tau_bar] of the constant-velocity predicted distance of a pair.
double min_predicted_distance(const VehicleState& si, const VehicleState& sj, double tau_bar);
/// True iff no pair is predicted to come within 2R over [0, tau_bar].
bool check_assumption1(std::span<const VehicleState> states, double tau_bar, double R);

/// Contiguous-window stop detector over the speeds of vehicles still in the scenario.
class DeadlockDetector {
 public:
  DeadlockDetector(double window, double stop_speed, double dt);
  bool update(std::span<const double> active_speeds);
  bool triggered() const { return triggered_; }

 private:
  double window_;
  double stop_speed_;
  double dt_;
  long run_ = 0;
  bool triggered_ = false;
};

bool detect_deadlock(const std::vector<std::vector<double>>& speed_history, double dt,
                     double window = 3.0, double stop_speed = 0.01);

struct TrajectorySample {
  double t = 0.0;
  std::vector<VehicleState> states;
  std::vector<ControlInput> inputs;
  std::vector<double> h0;    // per pair, (0,1), (0,2), ..., (n-2, n-1)
  std::vector<double> H;     // relaxed future-focused barrier per pair
  bool feasible = true;
};

struct TrajectoryLog {
  int num_vehicles = 0;
  std::vector<TrajectorySample> samples;
};

struct TrialResult {
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  bool always_feasible = true;
  bool deadlock = false;
  bool unsafe = false;
  bool timeout = false;
  std::string error;  // non-empty when the trial aborted on a numerical domain error
  double completion_time = std::numeric_limits<double>::quiet_NaN();
  double min_h0 = std::numeric_limits<double>::infinity();
  double min_H = std::numeric_limits<double>::infinity();
  double initial_min_H = std::numeric_limits<double>::infinity();
  double first_infeasible_time = std::numeric_limits<double>::quiet_NaN();
  int resamples = 0;
  int infeasible_steps = 0;
  int iteration_limit_steps = 0;
  int steps = 0;
  std::vector<double> distances;
  std::vector<double> speeds;
  std::vector<double> exit_times;
  std::optional<TrajectoryLog> log;
};

TrialResult run_trial(const ScenarioConfig& config, std::size_t trial_index, bool keep_log = false);

struct BatchSummary {
  std::size_t n_trials = 0;
  std::size_t successes = 0;
  std::size_t always_feasible = 0;
  std::size_t deadlocks = 0;
  std::size_t unsafe = 0;
  std::size_t timeouts = 0;
  std::size_t errors = 0;
  std::size_t resamples = 0;
  double success_rate = 0.0;
  double feas_rate = 0.0;
  double deadlock_rate = 0.0;
  double unsafe_rate = 0.0;
  std::optional<double> avg_time;  // over successful trials only
};

BatchSummary summarize(std::span<const TrialResult> trials);

struct BatchOptions {
  unsigned threads = 0;  // 0: FFCBF_THREADS or hardware concurrency
  /// Decides per finished trial whether the trajectory log is recorded and handed to `sink`.
  std::function<bool(const TrialResult&)> keep_log;
  /// Called on the consuming thread, once per trial, in completion order.
  std::function<void(const TrialResult&)> sink;
};

struct BatchResult {
  BatchSummary summary;
  std::vector<TrialResult> trials;  // by trial index, logs stripped
};

BatchResult run_batch(const ScenarioConfig& config, std::size_t n_trials, const BatchOptions& options = {});

/// Worker count from FFCBF_THREADS, falling back to the hardware concurrency.
unsigned default_thread_count();

}  // namespace ffcbf
