#pragma once

#include <array>

#include <Eigen/Dense>

namespace ffcbf {

/// Pose, slip and rear-wheel speed of one vehicle, z = [x, y, psi, beta, v].
struct VehicleState {
  double x = 0.0;     // m, east
  double y = 0.0;     // m, north
  double psi = 0.0;   // rad, heading of the body frame
  double beta = 0.0;  // rad, slip angle at the c.g., |beta| < pi/2
  double v = 0.0;     // m/s, rear-wheel speed

  Eigen::Vector2d position() const { return {x, y}; }
};

struct VehicleParams {
  double lr = 1.0;   // c.g. to rear axle (m)
  double lf = 1.0;   // c.g. to front axle (m)
  double R = 1.25;   // safety radius of the disc footprint (m)
};

/// u = [omega, a]: slip-angle rate and rear-wheel acceleration.
struct ControlInput {
  double omega = 0.0;
  double a = 0.0;
};

using StateDerivative = std::array<double, 5>;

/// Planar velocity and the affine map from [omega, a] to planar acceleration:
/// [xdd, ydd] = drift + coupling * [omega, a].
struct PlanarKinematics {
  Eigen::Vector2d velocity;
  Eigen::Vector2d drift;
  Eigen::Matrix2d coupling;  // S matrix; singular iff v == 0
};

/// Throws std::domain_error when |beta| >= pi/2 or a field is non-finite.
void check_state_domain(const VehicleState& state);

StateDerivative bicycle_derivative(const VehicleState& state, const ControlInput& input,
                                   const VehicleParams& params);

/// One RK4 step with the input held constant over dt.
VehicleState step(const VehicleState& state, const ControlInput& input, const VehicleParams& params,
                  double dt);

/// (xdot, ydot); independent of the wheelbase.
Eigen::Vector2d planar_velocity(const VehicleState& state);

/// Constant-velocity forecast x + xdot*tau, y + ydot*tau.
Eigen::Vector2d predict_position(const VehicleState& state, double tau);

PlanarKinematics planar_kinematics(const VehicleState& state, const VehicleParams& params);

}  // namespace ffcbf
