#pragma once

#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ffcbf/barriers.hpp"
#include "ffcbf/dynamics.hpp"
#include "ffcbf/qp.hpp"

namespace ffcbf {

/// Desired [x*, y*, xdot*, ydot*] at the current time.
struct NominalTarget {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

using LqrGain = Eigen::Matrix<double, 2, 4>;

enum class ControlMode { centralized, decentralized };
std::string_view to_string(ControlMode mode);
ControlMode control_mode_from_string(std::string_view name);

struct LqrWeights {
  double q_pos = 1.0;
  double q_vel = 2.0;
  double r = 1.0;
};

/// LQR gain for the planar double integrator with state [x, y, xdot, ydot].
LqrGain lqr_gain(double q_pos, double q_vel, double r);
inline LqrGain lqr_gain(const LqrWeights& w) { return lqr_gain(w.q_pos, w.q_vel, w.r); }

struct ControllerConfig {
  BarrierConfig barrier;                 // kind, rff/ff parameters, class-K slope
  ControlMode mode = ControlMode::centralized;
  double omega_bar = std::numbers::pi / 2.0;
  double a_bar = 9.81;
  double v_max = 10.0;
  LqrGain gain = lqr_gain(LqrWeights{});
  double v_eps = 1e-3;
  double decentral_eps = 1e-9;
  VehicleParams vehicle;

  void validate() const;
};

/// Planar acceleration command mu = -K (zeta - q*), mapped through S^-1 to (omega0, a0).
ControlInput nominal_control(const VehicleState& state, const NominalTarget& target, const LqrGain& gain,
                             double v_eps, const VehicleParams& params = {});

/// Maps a desired planar acceleration to (omega, a); the singular branch at |v| < v_eps
/// returns (0, |mu|).
ControlInput planar_to_input(const VehicleState& state, const Eigen::Vector2d& mu, double v_eps,
                             const VehicleParams& params = {});

double saturate_omega(double omega0, double omega_bar);

struct CentralizedResult {
  std::vector<ControlInput> inputs;
  std::vector<ControlInput> nominal;
  bool feasible = true;
  QpStatus status = QpStatus::optimal;
  QpProblem problem;  // the program that was solved, for post-hoc row checks
};

struct DecentralizedResult {
  ControlInput input;
  ControlInput nominal;
  bool feasible = true;
  QpStatus status = QpStatus::optimal;
  QpProblem problem;
};

/// One joint QP over all accelerations. On an infeasible program every vehicle brakes at -a_bar.
CentralizedResult centralized_step(std::span<const VehicleState> states,
                                   std::span<const NominalTarget> targets,
                                   const ControllerConfig& config, QpWarmStart* warm = nullptr);

/// QP over the ego acceleration only. Neighbours are assumed to follow the zero-acceleration
/// policy; each pair row keeps the full drift but only the ego's coefficient.
DecentralizedResult decentralized_step(std::size_t ego, std::span<const VehicleState> states,
                                       const NominalTarget& target_ego, const ControllerConfig& config,
                                       QpWarmStart* warm = nullptr);

}  // namespace ffcbf
