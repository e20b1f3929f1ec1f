#include "ffcbf/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ffcbf {

namespace {

using Vec5 = std::array<double, 5>;

Vec5 to_array(const VehicleState& s) { return {s.x, s.y, s.psi, s.beta, s.v}; }

VehicleState from_array(const Vec5& a) { return {a[0], a[1], a[2], a[3], a[4]}; }

VehicleState axpy(const VehicleState& s, double h, const Vec5& k) {
  Vec5 a = to_array(s);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += h * k[i];
  return from_array(a);
}

}  // namespace

void check_state_domain(const VehicleState& state) {
  for (double f : to_array(state)) {
    if (!std::isfinite(f)) throw std::domain_error("vehicle state has a non-finite field");
  }
  if (std::abs(state.beta) >= std::numbers::pi / 2.0) {
    throw std::domain_error("slip angle outside (-pi/2, pi/2): beta = " + std::to_string(state.beta));
  }
}

Eigen::Vector2d planar_velocity(const VehicleState& s) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  const double tb = std::tan(s.beta);
  return {s.v * (c - sn * tb), s.v * (sn + c * tb)};
}

StateDerivative bicycle_derivative(const VehicleState& state, const ControlInput& input,
                                   const VehicleParams& params) {
  check_state_domain(state);
  const Eigen::Vector2d vel = planar_velocity(state);
  return {vel.x(), vel.y(), state.v / params.lr * std::tan(state.beta), input.omega, input.a};
}

VehicleState step(const VehicleState& state, const ControlInput& input, const VehicleParams& params,
                  double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const Vec5 k1 = bicycle_derivative(state, input, params);
  const Vec5 k2 = bicycle_derivative(axpy(state, 0.5 * dt, k1), input, params);
  const Vec5 k3 = bicycle_derivative(axpy(state, 0.5 * dt, k2), input, params);
  const Vec5 k4 = bicycle_derivative(axpy(state, dt, k3), input, params);
  Vec5 out = to_array(state);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return from_array(out);
}

Eigen::Vector2d predict_position(const VehicleState& state, double tau) {
  return state.position() + planar_velocity(state) * tau;
}

PlanarKinematics planar_kinematics(const VehicleState& state, const VehicleParams& params) {
  check_state_domain(state);
  const double c = std::cos(state.psi);
  const double sn = std::sin(state.psi);
  const double tb = std::tan(state.beta);
  const double sec2 = 1.0 + tb * tb;
  const double psi_dot = state.v / params.lr * tb;

  PlanarKinematics k;
  k.velocity = {state.v * (c - sn * tb), state.v * (sn + c * tb)};
  // Time derivative of the planar velocity with omega = a = 0 leaves only the heading-rate terms.
  k.drift = {-k.velocity.y() * psi_dot, k.velocity.x() * psi_dot};
  k.coupling << -state.v * sn * sec2, c - sn * tb,
                 state.v * c * sec2, sn + c * tb;
  return k;
}

}  // namespace ffcbf
