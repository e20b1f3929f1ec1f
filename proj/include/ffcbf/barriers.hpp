#pragma once

// Inter-vehicle and speed-limit barrier functions together with the affine rows
// they contribute to the safety-filter QPs.
//
// Every pair barrier here is a function of the differential position xi = p_i - p_j
// and differential velocity nu = v_i - v_j only. Its time derivative is therefore
//
//   hdot = dh/dxi . nu + dh/dnu . alpha,   alpha = alpha_drift + S_i u_i - S_j u_j,
//
// and a QP row is obtained by splitting hdot into the part that does not multiply an
// acceleration decision variable (folded into phi together with the class-K term and
// the already-fixed slip-rate inputs) and the coefficients of a_i and a_j.

#include <string_view>

#include <Eigen/Dense>

#include "ffcbf/dynamics.hpp"

namespace ffcbf {

enum class BarrierKind { zero, ff, rff };

std::string_view to_string(BarrierKind kind);
BarrierKind barrier_kind_from_string(std::string_view name);

/// Parameters of the future-focused barrier.
struct FfParams {
  double tau_bar = 5.0;   // look-ahead horizon (s)
  double k = 1000.0;      // sharpness of the smooth switches, k >= 1
  double epsilon = 1e-9;  // regularizer in the tau_hat_star denominator
  double R = 1.25;        // safety radius (m)
};

/// Relaxed barrier H = h_ff + k0 * h0 with k0 = k0_scale * max(tau_hat - 1, k0_floor).
struct RffParams {
  FfParams ff;
  double k0_scale = 0.1;
  double k0_floor = 0.001;
};

void validate(const FfParams& p);
void validate(const RffParams& p);

struct RelativeKinematics {
  Eigen::Vector2d xi;
  Eigen::Vector2d nu;
  Eigen::Vector2d alpha_drift;
  Eigen::Matrix2d coupling_i;
  Eigen::Matrix2d coupling_j;
};

/// One affine QP row phi + gamma_i a_i + gamma_j a_j >= 0. `value` is the barrier the row
/// enforces: h_ff or H for the future-focused kinds, and h1 = dh0/dt + gain*h0 for the
/// second-order distance baseline. In every case hdot(value) = phi - gain*value + sum gamma*a.
struct BarrierEval {
  double value = 0.0;
  double phi = 0.0;
  double gamma_i = 0.0;
  double gamma_j = 0.0;
};

/// Speed-limit row: h_s = (v_max - v) v, hdot_s = (v_max - 2v) a.
struct SpeedRow {
  double value = 0.0;
  double phi = 0.0;
  double gamma = 0.0;
};

/// Barrier value with its partial derivatives in (xi, nu).
struct PairBarrier {
  double value = 0.0;
  Eigen::Vector2d d_xi = Eigen::Vector2d::Zero();
  Eigen::Vector2d d_nu = Eigen::Vector2d::Zero();
};

/// Gradient of a pair barrier with respect to both full vehicle states.
struct StateGradient {
  double value = 0.0;
  Eigen::Matrix<double, 5, 1> d_zi = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 1> d_zj = Eigen::Matrix<double, 5, 1>::Zero();
};

/// Configuration of the pair rows shared by all controllers.
struct BarrierConfig {
  BarrierKind kind = BarrierKind::rff;
  RffParams rff;
  double alpha_gain = 10.0;
  double hocbf_gain = 3.0;   // inner slope of the zero-kind row: h1 = dh0/dt + hocbf_gain * h0
};

SpeedRow speed_row(const VehicleState& state, double v_max, double alpha_gain = 10.0);

double h0(const VehicleState& si, const VehicleState& sj, double R);
double h0(const Eigen::Vector2d& xi, double R);

double tau_star_hat(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, double epsilon);

/// K_delta(s) = 1/2 + 1/2 tanh(k (s - delta)).
double smooth_switch(double s, double delta, double k);
/// dK_delta/ds = k/2 sech^2(k (s - delta)).
double smooth_switch_slope(double s, double delta, double k);

/// Smooth clamp of tau_hat_star into [0, tau_bar].
double tau_hat(double tau_star_hat, double tau_bar, double k);
/// d tau_hat / d tau_hat_star.
double tau_hat_slope(double tau_star_hat, double tau_bar, double k);

/// Relaxation gain k0 of the rff barrier as a function of tau_hat.
double rff_gain(double tau_hat, const RffParams& p);

PairBarrier ff_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const FfParams& p);
PairBarrier rff_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const RffParams& p);
/// h1 = 2 xi.nu + gain * h0, the second-order distance barrier.
PairBarrier hocbf_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, double R,
                          double alpha_gain);

double h_ff(const VehicleState& si, const VehicleState& sj, const FfParams& p);
double h_rff(const VehicleState& si, const VehicleState& sj, const RffParams& p);

/// Value and gradient of h_ff (kind ff) or H (kind rff) with respect to z_i and z_j.
StateGradient barrier_state_gradient(BarrierKind kind, const VehicleState& si,
                                     const VehicleState& sj, const RffParams& p);

RelativeKinematics relative_kinematics(const VehicleState& si, const VehicleState& sj,
                                       const VehicleParams& params);

/// Assembles the QP row for the pair (i, j). The slip-rate inputs are exogenous: their
/// contribution to the differential acceleration is folded into phi.
BarrierEval constraint_row(const BarrierConfig& cfg, const VehicleState& si, const VehicleState& sj,
                           double omega_i, double omega_j, const VehicleParams& params);

/// Assembles a row from a precomputed barrier and relative kinematics.
BarrierEval assemble_row(const PairBarrier& barrier, const RelativeKinematics& rel, double omega_i,
                         double omega_j, double alpha_gain);

}  // namespace ffcbf
