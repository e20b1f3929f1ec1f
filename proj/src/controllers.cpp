#include "ffcbf/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ffcbf {

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::centralized ? "centralized" : "decentralized";
}

ControlMode control_mode_from_string(std::string_view name) {
  if (name == "centralized") return ControlMode::centralized;
  if (name == "decentralized") return ControlMode::decentralized;
  throw std::invalid_argument("unknown control mode '" + std::string(name) +
                              "' (expected centralized|decentralized)");
}

void ControllerConfig::validate() const {
  if (!(barrier.alpha_gain > 0.0)) throw std::invalid_argument("alpha_gain must be positive");
  if (!(omega_bar > 0.0) || !(a_bar > 0.0) || !(v_max > 0.0)) {
    throw std::invalid_argument("omega_bar, a_bar and v_max must be positive");
  }
  if (!(v_eps > 0.0)) throw std::invalid_argument("v_eps must be positive");
  if (!(decentral_eps >= 0.0)) throw std::invalid_argument("decentral_eps must be non-negative");
  if (!gain.allFinite()) throw std::invalid_argument("LQR gain must be finite");
  if (!(vehicle.lr > 0.0 && vehicle.lf > 0.0 && vehicle.R > 0.0)) {
    throw std::invalid_argument("vehicle lr, lf and R must be positive");
  }
  ffcbf::validate(barrier.rff);
}

LqrGain lqr_gain(double q_pos, double q_vel, double r) {
  if (!(q_pos > 0.0 && q_vel > 0.0 && r > 0.0)) throw std::invalid_argument("LQR weights must be positive");
  // Per axis xdd = u with Q = diag(q_pos, q_vel): the Riccati solution gives
  // K = [sqrt(q_pos/r), sqrt((q_vel + 2 sqrt(q_pos r)) / r)].
  const double kp = std::sqrt(q_pos / r);
  const double kd = std::sqrt((q_vel + 2.0 * std::sqrt(q_pos * r)) / r);
  LqrGain k = LqrGain::Zero();
  k(0, 0) = kp;
  k(0, 2) = kd;
  k(1, 1) = kp;
  k(1, 3) = kd;
  return k;
}

ControlInput planar_to_input(const VehicleState& state, const Eigen::Vector2d& mu, double v_eps,
                             const VehicleParams& params) {
  if (std::abs(state.v) < v_eps) return {0.0, mu.norm()};
  const PlanarKinematics k = planar_kinematics(state, params);
  const Eigen::Vector2d rhs = mu - k.drift;
  const Eigen::Vector2d u = k.coupling.partialPivLu().solve(rhs);
  return {u(0), u(1)};
}

ControlInput nominal_control(const VehicleState& state, const NominalTarget& target, const LqrGain& gain,
                             double v_eps, const VehicleParams& params) {
  check_state_domain(state);
  Eigen::Vector4d err;
  err.head<2>() = state.position() - target.position;
  err.tail<2>() = planar_velocity(state) - target.velocity;
  const Eigen::Vector2d mu = -gain * err;
  return planar_to_input(state, mu, v_eps, params);
}

double saturate_omega(double omega0, double omega_bar) { return std::clamp(omega0, -omega_bar, omega_bar); }

CentralizedResult centralized_step(std::span<const VehicleState> states,
                                   std::span<const NominalTarget> targets,
                                   const ControllerConfig& config, QpWarmStart* warm) {
  const std::size_t n = states.size();
  if (n == 0) throw std::invalid_argument("centralized_step: no vehicles");
  if (targets.size() != n) throw std::invalid_argument("centralized_step: one target per vehicle required");

  CentralizedResult out;
  out.nominal.resize(n);
  out.inputs.resize(n);
  Eigen::VectorXd a0(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.nominal[i] = nominal_control(states[i], targets[i], config.gain, config.v_eps, config.vehicle);
    out.inputs[i].omega = saturate_omega(out.nominal[i].omega, config.omega_bar);
    a0(static_cast<Eigen::Index>(i)) = out.nominal[i].a;
  }

  QpProblem qp(a0);
  const auto dim = static_cast<Eigen::Index>(n);
  qp.set_box(Eigen::VectorXd::Constant(dim, -config.a_bar), Eigen::VectorXd::Constant(dim, config.a_bar));
  for (std::size_t i = 0; i < n; ++i) {
    const SpeedRow s = speed_row(states[i], config.v_max, config.barrier.alpha_gain);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
    c(static_cast<Eigen::Index>(i)) = s.gamma;
    qp.add_row(c, -s.phi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const BarrierEval row = constraint_row(config.barrier, states[i], states[j], out.inputs[i].omega,
                                             out.inputs[j].omega, config.vehicle);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
      c(static_cast<Eigen::Index>(i)) = row.gamma_i;
      c(static_cast<Eigen::Index>(j)) = row.gamma_j;
      qp.add_row(c, -row.phi);
    }
  }

  const QpSolution sol = solve(qp, warm);
  out.status = sol.status;
  out.feasible = sol.ok();
  for (std::size_t i = 0; i < n; ++i) {
    out.inputs[i].a = out.feasible ? sol.u(static_cast<Eigen::Index>(i)) : -config.a_bar;
  }
  out.problem = std::move(qp);
  return out;
}

DecentralizedResult decentralized_step(std::size_t ego, std::span<const VehicleState> states,
                                       const NominalTarget& target_ego, const ControllerConfig& config,
                                       QpWarmStart* warm) {
  if (ego >= states.size()) throw std::invalid_argument("decentralized_step: ego index out of range");
  DecentralizedResult out;
  const VehicleState& me = states[ego];
  out.nominal = nominal_control(me, target_ego, config.gain, config.v_eps, config.vehicle);
  out.input.omega = saturate_omega(out.nominal.omega, config.omega_bar);

  QpProblem qp(Eigen::VectorXd::Constant(1, out.nominal.a));
  qp.set_box(Eigen::VectorXd::Constant(1, -config.a_bar), Eigen::VectorXd::Constant(1, config.a_bar));
  const SpeedRow s = speed_row(me, config.v_max, config.barrier.alpha_gain);
  qp.add_row(Eigen::VectorXd::Constant(1, s.gamma), -s.phi);
  for (std::size_t j = 0; j < states.size(); ++j) {
    if (j == ego) continue;
    // Neighbour inputs are unknown: omega_j = 0, a_j = 0.
    const BarrierEval row = constraint_row(config.barrier, me, states[j], out.input.omega, 0.0, config.vehicle);
    qp.add_row(Eigen::VectorXd::Constant(1, row.gamma_i), -(row.phi - config.decentral_eps));
  }

  const QpSolution sol = solve(qp, warm);
  out.status = sol.status;
  out.feasible = sol.ok();
  out.input.a = out.feasible ? sol.u(0) : -config.a_bar;
  out.problem = std::move(qp);
  return out;
}

}  // namespace ffcbf
