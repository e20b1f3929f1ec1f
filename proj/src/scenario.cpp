#include "ffcbf/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ffcbf {

std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::all_straight ? "all_straight" : "one_left_turn";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  if (name == "all_straight" || name == "straight") return ScenarioKind::all_straight;
  if (name == "one_left_turn" || name == "left-turn") return ScenarioKind::one_left_turn;
  throw std::invalid_argument("unknown scenario '" + std::string(name) +
                              "' (expected straight|left-turn)");
}

void ScenarioConfig::validate() const {
  if (num_vehicles < 1 || num_vehicles > 4) throw std::invalid_argument("num_vehicles must be in [1, 4]");
  if (!(d0 > delta_d && delta_d >= 0.0)) throw std::invalid_argument("require d0 > delta_d >= 0");
  if (!(s0 > delta_s && delta_s >= 0.0)) throw std::invalid_argument("require s0 > delta_s >= 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (!(lane_width > 0.0) || !(box_half > 0.0)) throw std::invalid_argument("lane_width and box_half must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
  if (!(stop_speed > 0.0) || !(deadlock_window > 0.0)) {
    throw std::invalid_argument("stop_speed and deadlock_window must be positive");
  }
  if (!(exit_tolerance > 0.0)) throw std::invalid_argument("exit_tolerance must be positive");
  if (max_resamples < 1) throw std::invalid_argument("max_resamples must be >= 1");
  if (!(reference_speed >= 0.0)) throw std::invalid_argument("reference_speed must be >= 0");
  resolved_controller().validate();
}

ControllerConfig ScenarioConfig::resolved_controller() const {
  ControllerConfig c = controller;
  c.vehicle.R = R;
  c.barrier.rff.ff.R = R;
  c.v_max = v_max;
  c.gain = lqr_gain(lqr);
  return c;
}

namespace {

Eigen::Matrix2d quarter_turns(int approach) {
  const double angle = approach * std::numbers::pi / 2.0;
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r.array().round().matrix();  // exact for multiples of pi/2
}

}  // namespace

ReferencePath::ReferencePath(int approach, double lane_width, double box_half, double start_distance,
                             bool turning)
    : rotation_(quarter_turns(approach)),
      half_lane_(0.5 * lane_width),
      box_half_(box_half),
      approach_length_(start_distance),
      turning_(turning) {
  if (turning_) radius_ = box_half_ + half_lane_;
}

ReferencePath ReferencePath::straight(int approach, double lane_width, double box_half, double start_distance) {
  return ReferencePath(approach, lane_width, box_half, start_distance, false);
}

ReferencePath ReferencePath::left_turn(int approach, double lane_width, double box_half, double start_distance) {
  return ReferencePath(approach, lane_width, box_half, start_distance, true);
}

Eigen::Vector2d ReferencePath::canonical_point(double s) const {
  const Eigen::Vector2d start(half_lane_, -box_half_ - approach_length_);
  if (!turning_ || s <= approach_length_) return start + Eigen::Vector2d(0.0, s);
  // Quarter circle about (-box_half, -box_half), counter-clockwise from angle 0.
  const Eigen::Vector2d centre(-box_half_, -box_half_);
  const double arc_len = 0.5 * std::numbers::pi * radius_;
  const double along = s - approach_length_;
  if (along <= arc_len) {
    const double theta = along / radius_;
    return centre + radius_ * Eigen::Vector2d(std::cos(theta), std::sin(theta));
  }
  return Eigen::Vector2d(-box_half_ - (along - arc_len), half_lane_);
}

Eigen::Vector2d ReferencePath::canonical_tangent(double s) const {
  if (!turning_ || s <= approach_length_) return {0.0, 1.0};
  const double arc_len = 0.5 * std::numbers::pi * radius_;
  const double along = s - approach_length_;
  if (along <= arc_len) {
    const double theta = along / radius_;
    return {-std::sin(theta), std::cos(theta)};
  }
  return {-1.0, 0.0};
}

Eigen::Vector2d ReferencePath::point(double s) const { return rotation_ * canonical_point(s); }

Eigen::Vector2d ReferencePath::tangent(double s) const { return rotation_ * canonical_tangent(s); }

NominalTarget ReferencePath::target_at(double t, double speed) const {
  const double s = speed * t;
  return {point(s), speed * tangent(s)};
}

IntersectionWorld::IntersectionWorld(const ScenarioConfig& config)
    : scenario_(config.scenario),
      num_vehicles_(config.num_vehicles),
      half_lane_(0.5 * config.lane_width),
      box_half_(config.box_half),
      exit_tolerance_(config.exit_tolerance) {
  config.validate();
}

bool IntersectionWorld::turns_left(int vehicle) const {
  return scenario_ == ScenarioKind::one_left_turn && vehicle == 0;
}

double IntersectionWorld::heading(int approach) const {
  return std::numbers::pi / 2.0 + approach * std::numbers::pi / 2.0;
}

Eigen::Vector2d IntersectionWorld::entry_point(int approach, double distance) const {
  return quarter_turns(approach) * Eigen::Vector2d(half_lane_, -box_half_ - distance);
}

ReferencePath IntersectionWorld::reference(int vehicle, double start_distance) const {
  const double lane_width = 2.0 * half_lane_;
  return turns_left(vehicle) ? ReferencePath::left_turn(vehicle, lane_width, box_half_, start_distance)
                             : ReferencePath::straight(vehicle, lane_width, box_half_, start_distance);
}

Eigen::Vector2d IntersectionWorld::to_canonical(int approach, const Eigen::Vector2d& p) const {
  return quarter_turns(approach).transpose() * p;
}

bool IntersectionWorld::has_exited(int vehicle, const VehicleState& state) const {
  const Eigen::Vector2d c = to_canonical(vehicle, state.position());
  if (turns_left(vehicle)) return c.x() < -box_half_ && std::abs(c.y() - half_lane_) <= exit_tolerance_;
  return c.y() > box_half_ && std::abs(c.x() - half_lane_) <= exit_tolerance_;
}

IntersectionWorld build_world(const ScenarioConfig& config) { return IntersectionWorld(config); }

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial_index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (trial_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

InitialConditions randomize_initial(const ScenarioConfig& config, std::mt19937_64& rng) {
  const IntersectionWorld world(config);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  InitialConditions ic;
  for (int i = 0; i < config.num_vehicles; ++i) {
    const double d = config.d0 + config.delta_d * (2.0 * unit(rng) - 1.0);
    const double s = config.s0 + config.delta_s * (2.0 * unit(rng) - 1.0);
    const Eigen::Vector2d p = world.entry_point(i, d);
    ic.distances.push_back(d);
    ic.speeds.push_back(s);
    ic.states.push_back({p.x(), p.y(), world.heading(i), 0.0, s});
  }
  return ic;
}

double min_predicted_distance(const VehicleState& si, const VehicleState& sj, double tau_bar) {
  const Eigen::Vector2d xi = si.position() - sj.position();
  const Eigen::Vector2d nu = planar_velocity(si) - planar_velocity(sj);
  const double q = nu.squaredNorm();
  const double tau = q > 0.0 ? std::clamp(-xi.dot(nu) / q, 0.0, tau_bar) : 0.0;
  return (xi + tau * nu).norm();
}

bool check_assumption1(std::span<const VehicleState> states, double tau_bar, double R) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      if (min_predicted_distance(states[i], states[j], tau_bar) < 2.0 * R) return false;
    }
  }
  return true;
}

DeadlockDetector::DeadlockDetector(double window, double stop_speed, double dt)
    : window_(window), stop_speed_(stop_speed), dt_(dt) {}

bool DeadlockDetector::update(std::span<const double> active_speeds) {
  const bool stopped = !active_speeds.empty() &&
      std::all_of(active_speeds.begin(), active_speeds.end(),
                  [&](double v) { return std::abs(v) < stop_speed_; });
  run_ = stopped ? run_ + 1 : 0;
  // each sample stands for one dt of elapsed time
  if (static_cast<double>(run_) * dt_ >= window_ - 1e-9) triggered_ = true;
  return triggered_;
}

bool detect_deadlock(const std::vector<std::vector<double>>& speed_history, double dt, double window,
                     double stop_speed) {
  DeadlockDetector d(window, stop_speed, dt);
  for (const auto& speeds : speed_history) {
    if (d.update(speeds)) return true;
  }
  return false;
}

namespace {

struct PairBarriers {
  std::vector<double> h0;
  std::vector<double> H;
};

PairBarriers pair_barriers(std::span<const VehicleState> states, const RffParams& rff) {
  PairBarriers out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      out.h0.push_back(h0(states[i], states[j], rff.ff.R));
      out.H.push_back(h_rff(states[i], states[j], rff));
    }
  }
  return out;
}

double min_or_inf(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::infinity() : *std::min_element(v.begin(), v.end());
}

}  // namespace

TrialResult run_trial(const ScenarioConfig& config, std::size_t trial_index, bool keep_log) {
  config.validate();
  const IntersectionWorld world(config);
  const ControllerConfig ctrl = config.resolved_controller();
  const int n = config.num_vehicles;

  TrialResult res;
  res.trial_index = trial_index;
  res.seed = trial_seed(config.seed, trial_index);

  std::mt19937_64 rng(res.seed);
  InitialConditions ic;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= config.max_resamples) {
      throw std::runtime_error("trial " + std::to_string(trial_index) + ": no initial condition satisfying the " +
                               "zero-acceleration safety screen after " + std::to_string(attempt) + " draws");
    }
    ic = randomize_initial(config, rng);
    if (check_assumption1(ic.states, ctrl.barrier.rff.ff.tau_bar, config.R)) break;
    ++res.resamples;
  }
  res.distances = ic.distances;
  res.speeds = ic.speeds;
  res.exit_times.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());

  std::vector<ReferencePath> paths;
  for (int i = 0; i < n; ++i) paths.push_back(world.reference(i, ic.distances[static_cast<std::size_t>(i)]));

  if (keep_log) res.log = TrajectoryLog{n, {}};

  std::vector<VehicleState> states = ic.states;
  std::vector<char> exited(static_cast<std::size_t>(n), 0);
  std::vector<NominalTarget> targets(static_cast<std::size_t>(n));
  std::vector<ControlInput> inputs(static_cast<std::size_t>(n));
  std::vector<QpWarmStart> warm(ctrl.mode == ControlMode::centralized ? 1 : static_cast<std::size_t>(n));
  DeadlockDetector deadlock(config.deadlock_window, config.stop_speed, config.dt);

  try {
    for (long k = 0;; ++k) {
      const double t = static_cast<double>(k) * config.dt;
      const PairBarriers bars = pair_barriers(states, ctrl.barrier.rff);
      res.min_h0 = std::min(res.min_h0, min_or_inf(bars.h0));
      res.min_H = std::min(res.min_H, min_or_inf(bars.H));
      if (k == 0) res.initial_min_H = min_or_inf(bars.H);

      std::vector<double> active_speeds;
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!exited[ui] && world.has_exited(i, states[ui])) {
          exited[ui] = 1;
          res.exit_times[ui] = t;
        }
        if (!exited[ui]) active_speeds.push_back(states[ui].v);
      }
      if (active_speeds.empty()) {
        res.success = true;
        res.completion_time = *std::max_element(res.exit_times.begin(), res.exit_times.end());
        break;
      }
      if (deadlock.update(active_speeds)) {
        res.deadlock = true;
        break;
      }
      if (t >= config.t_max - 1e-9) {
        res.timeout = true;
        break;
      }

      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        targets[ui] = paths[ui].target_at(t, config.reference_speed > 0.0 ? config.reference_speed : ic.speeds[ui]);
      }
      bool feasible = true;
      bool hit_limit = false;
      if (ctrl.mode == ControlMode::centralized) {
        CentralizedResult r = centralized_step(states, targets, ctrl, &warm[0]);
        inputs = std::move(r.inputs);
        feasible = r.feasible;
        hit_limit = r.status == QpStatus::iteration_limit;
      } else {
        for (int i = 0; i < n; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          const DecentralizedResult r = decentralized_step(ui, states, targets[ui], ctrl, &warm[ui]);
          inputs[ui] = r.input;
          feasible = feasible && r.feasible;
          hit_limit = hit_limit || r.status == QpStatus::iteration_limit;
        }
      }
      if (!feasible) {
        if (res.always_feasible) res.first_infeasible_time = t;
        res.always_feasible = false;
        ++res.infeasible_steps;
      }
      if (hit_limit) ++res.iteration_limit_steps;

      if (res.log) {
        res.log->samples.push_back({t, states, inputs, bars.h0, bars.H, feasible});
      }

      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        ControlInput u = inputs[ui];
        // braking never reverses the vehicle within a step
        if (states[ui].v + u.a * config.dt < 0.0) u.a = -states[ui].v / config.dt;
        states[ui] = step(states[ui], u, ctrl.vehicle, config.dt);
      }
      res.steps = static_cast<int>(k + 1);
    }
  } catch (const std::domain_error& e) {
    res.error = e.what();
  }
  res.unsafe = res.min_h0 < 0.0;
  return res;
}

BatchSummary summarize(std::span<const TrialResult> trials) {
  BatchSummary s;
  s.n_trials = trials.size();
  double time_sum = 0.0;
  for (const TrialResult& t : trials) {
    s.successes += t.success ? 1 : 0;
    s.always_feasible += t.always_feasible ? 1 : 0;
    s.deadlocks += t.deadlock ? 1 : 0;
    s.unsafe += t.unsafe ? 1 : 0;
    s.timeouts += t.timeout ? 1 : 0;
    s.errors += t.error.empty() ? 0 : 1;
    s.resamples += static_cast<std::size_t>(t.resamples);
    if (t.success) time_sum += t.completion_time;
  }
  if (s.n_trials > 0) {
    const auto n = static_cast<double>(s.n_trials);
    s.success_rate = static_cast<double>(s.successes) / n;
    s.feas_rate = static_cast<double>(s.always_feasible) / n;
    s.deadlock_rate = static_cast<double>(s.deadlocks) / n;
    s.unsafe_rate = static_cast<double>(s.unsafe) / n;
  }
  if (s.successes > 0) s.avg_time = time_sum / static_cast<double>(s.successes);
  return s;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("FFCBF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BatchResult run_batch(const ScenarioConfig& config, std::size_t n_trials, const BatchOptions& options) {
  config.validate();
  BatchResult out;
  out.trials.resize(n_trials);
  if (n_trials == 0) {
    out.summary = summarize(out.trials);
    return out;
  }
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(options.threads > 0 ? options.threads : default_thread_count(), n_trials));

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable cv;
  std::deque<TrialResult> queue;
  std::exception_ptr failure;
  std::size_t finished_workers = 0;

  auto work = [&] {
    try {
      for (;;) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= n_trials) break;
        TrialResult r = run_trial(config, idx, false);
        // trials are deterministic in (seed, index), so a logged rerun reproduces r exactly
        if (options.keep_log && options.keep_log(r)) r = run_trial(config, idx, true);
        std::lock_guard lock(mu);
        queue.push_back(std::move(r));
        cv.notify_one();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      next.store(n_trials);
    }
    std::lock_guard lock(mu);
    ++finished_workers;
    cv.notify_one();
  };

  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);

  for (;;) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return !queue.empty() || finished_workers == workers; });
    if (queue.empty()) break;
    TrialResult r = std::move(queue.front());
    queue.pop_front();
    lock.unlock();
    if (options.sink) options.sink(r);
    r.log.reset();
    const std::size_t idx = r.trial_index;
    out.trials[idx] = std::move(r);
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  out.summary = summarize(out.trials);
  return out;
}

}  // namespace ffcbf
