#include "ffcbf/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ffcbf {

std::string_view to_string(BarrierKind kind) {
  switch (kind) {
    case BarrierKind::zero: return "zero";
    case BarrierKind::ff: return "ff";
    case BarrierKind::rff: return "rff";
  }
  return "?";
}

BarrierKind barrier_kind_from_string(std::string_view name) {
  if (name == "zero") return BarrierKind::zero;
  if (name == "ff") return BarrierKind::ff;
  if (name == "rff") return BarrierKind::rff;
  throw std::invalid_argument("unknown barrier kind '" + std::string(name) + "' (expected zero|ff|rff)");
}

void validate(const FfParams& p) {
  if (!(p.tau_bar > 0.0)) throw std::invalid_argument("tau_bar must be positive");
  if (!(p.k >= 1.0)) throw std::invalid_argument("switch sharpness k must be >= 1");
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(p.R > 0.0)) throw std::invalid_argument("safety radius R must be positive");
}

void validate(const RffParams& p) {
  validate(p.ff);
  if (!(p.k0_scale > 0.0)) throw std::invalid_argument("k0_scale must be positive");
  if (!(p.k0_floor > 0.0)) throw std::invalid_argument("k0_floor must be positive");
}

SpeedRow speed_row(const VehicleState& state, double v_max, double alpha_gain) {
  SpeedRow row;
  row.value = (v_max - state.v) * state.v;
  row.gamma = v_max - 2.0 * state.v;
  row.phi = alpha_gain * row.value;  // v̇ = a exactly, so the drift part is zero
  return row;
}

double h0(const Eigen::Vector2d& xi, double R) { return xi.squaredNorm() - 4.0 * R * R; }

double h0(const VehicleState& si, const VehicleState& sj, double R) {
  return h0(Eigen::Vector2d(si.position() - sj.position()), R);
}

double tau_star_hat(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, double epsilon) {
  return -xi.dot(nu) / (nu.squaredNorm() + epsilon);
}

double smooth_switch(double s, double delta, double k) {
  return 0.5 + 0.5 * std::tanh(k * (s - delta));
}

double smooth_switch_slope(double s, double delta, double k) {
  const double c = std::cosh(k * (s - delta));
  return 0.5 * k / (c * c);
}

double tau_hat(double tsh, double tau_bar, double k) {
  // tsh*K_0 + (tau_bar - tsh)*K_tau_bar, grouped so that both switches saturating to 1
  // cancels exactly instead of through a large difference.
  const double window = 0.5 * (std::tanh(k * tsh) - std::tanh(k * (tsh - tau_bar)));
  return tsh * window + tau_bar * smooth_switch(tsh, tau_bar, k);
}

double tau_hat_slope(double tsh, double tau_bar, double k) {
  const double window = 0.5 * (std::tanh(k * tsh) - std::tanh(k * (tsh - tau_bar)));
  const double d0 = smooth_switch_slope(tsh, 0.0, k);
  const double dbar = smooth_switch_slope(tsh, tau_bar, k);
  return window + tsh * (d0 - dbar) + tau_bar * dbar;
}

double rff_gain(double th, const RffParams& p) {
  return p.k0_scale * std::max(th - 1.0, p.k0_floor);
}

namespace {

struct TauHatTerms {
  double q = 0.0;
  double p = 0.0;
  double tsh = 0.0;
  double th = 0.0;
  double slope = 0.0;
  Eigen::Vector2d d_xi;  // d tau_hat / d xi
  Eigen::Vector2d d_nu;  // d tau_hat / d nu
};

TauHatTerms tau_hat_terms(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const FfParams& ff) {
  TauHatTerms t;
  t.q = nu.squaredNorm();
  t.p = xi.dot(nu);
  const double den = t.q + ff.epsilon;
  t.tsh = -t.p / den;
  t.th = tau_hat(t.tsh, ff.tau_bar, ff.k);
  t.slope = tau_hat_slope(t.tsh, ff.tau_bar, ff.k);
  t.d_xi = -t.slope / den * nu;
  t.d_nu = -t.slope / den * (xi + 2.0 * t.tsh * nu);
  return t;
}

PairBarrier ff_from_terms(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const TauHatTerms& t,
                          double R) {
  const Eigen::Vector2d predicted = xi + t.th * nu;
  // dh/dtau_hat = 2 (p + tau_hat q)
  const double dh_dth = 2.0 * (t.p + t.th * t.q);
  PairBarrier b;
  b.value = predicted.squaredNorm() - 4.0 * R * R;
  b.d_xi = 2.0 * predicted + dh_dth * t.d_xi;
  b.d_nu = 2.0 * t.th * predicted + dh_dth * t.d_nu;
  return b;
}

Eigen::Matrix<double, 2, 3> velocity_jacobian(const VehicleState& s) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  const double tb = std::tan(s.beta);
  const double sec2 = 1.0 + tb * tb;
  const Eigen::Vector2d vel = planar_velocity(s);
  Eigen::Matrix<double, 2, 3> j;
  j << -vel.y(), -s.v * sn * sec2, c - sn * tb,
        vel.x(),  s.v * c * sec2,  sn + c * tb;
  return j;
}

}  // namespace

PairBarrier ff_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const FfParams& p) {
  return ff_from_terms(xi, nu, tau_hat_terms(xi, nu, p), p.R);
}

PairBarrier rff_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, const RffParams& p) {
  const TauHatTerms t = tau_hat_terms(xi, nu, p.ff);
  PairBarrier b = ff_from_terms(xi, nu, t, p.ff.R);
  const double dist = h0(xi, p.ff.R);
  const double k0 = rff_gain(t.th, p);
  b.value += k0 * dist;
  b.d_xi += 2.0 * k0 * xi;
  // max(tau_hat - 1, floor): the floor branch wins ties and has zero slope.
  if (t.th - 1.0 > p.k0_floor) {
    b.d_xi += dist * p.k0_scale * t.d_xi;
    b.d_nu += dist * p.k0_scale * t.d_nu;
  }
  return b;
}

PairBarrier hocbf_barrier(const Eigen::Vector2d& xi, const Eigen::Vector2d& nu, double R,
                          double alpha_gain) {
  PairBarrier b;
  b.value = 2.0 * xi.dot(nu) + alpha_gain * h0(xi, R);
  b.d_xi = 2.0 * nu + 2.0 * alpha_gain * xi;
  b.d_nu = 2.0 * xi;
  return b;
}

double h_ff(const VehicleState& si, const VehicleState& sj, const FfParams& p) {
  return ff_barrier(si.position() - sj.position(), planar_velocity(si) - planar_velocity(sj), p).value;
}

double h_rff(const VehicleState& si, const VehicleState& sj, const RffParams& p) {
  return rff_barrier(si.position() - sj.position(), planar_velocity(si) - planar_velocity(sj), p).value;
}

StateGradient barrier_state_gradient(BarrierKind kind, const VehicleState& si,
                                     const VehicleState& sj, const RffParams& p) {
  const Eigen::Vector2d xi = si.position() - sj.position();
  const Eigen::Vector2d nu = planar_velocity(si) - planar_velocity(sj);
  PairBarrier b;
  switch (kind) {
    case BarrierKind::ff: b = ff_barrier(xi, nu, p.ff); break;
    case BarrierKind::rff: b = rff_barrier(xi, nu, p); break;
    case BarrierKind::zero:
      throw std::invalid_argument("barrier_state_gradient: only ff and rff are state functions here");
  }
  StateGradient g;
  g.value = b.value;
  const Eigen::Vector3d di = velocity_jacobian(si).transpose() * b.d_nu;
  const Eigen::Vector3d dj = velocity_jacobian(sj).transpose() * b.d_nu;
  g.d_zi << b.d_xi, di;
  g.d_zj << -b.d_xi, -dj;
  return g;
}

RelativeKinematics relative_kinematics(const VehicleState& si, const VehicleState& sj,
                                       const VehicleParams& params) {
  const PlanarKinematics ki = planar_kinematics(si, params);
  const PlanarKinematics kj = planar_kinematics(sj, params);
  RelativeKinematics rel;
  rel.xi = si.position() - sj.position();
  rel.nu = ki.velocity - kj.velocity;
  rel.alpha_drift = ki.drift - kj.drift;
  rel.coupling_i = ki.coupling;
  rel.coupling_j = kj.coupling;
  return rel;
}

BarrierEval assemble_row(const PairBarrier& barrier, const RelativeKinematics& rel, double omega_i,
                         double omega_j, double alpha_gain) {
  const Eigen::Vector2d alpha_fixed =
      rel.alpha_drift + rel.coupling_i.col(0) * omega_i - rel.coupling_j.col(0) * omega_j;
  BarrierEval row;
  row.value = barrier.value;
  row.phi = barrier.d_xi.dot(rel.nu) + barrier.d_nu.dot(alpha_fixed) + alpha_gain * barrier.value;
  row.gamma_i = barrier.d_nu.dot(rel.coupling_i.col(1));
  row.gamma_j = -barrier.d_nu.dot(rel.coupling_j.col(1));
  return row;
}

BarrierEval constraint_row(const BarrierConfig& cfg, const VehicleState& si, const VehicleState& sj,
                           double omega_i, double omega_j, const VehicleParams& params) {
  const RelativeKinematics rel = relative_kinematics(si, sj, params);
  PairBarrier b;
  switch (cfg.kind) {
    case BarrierKind::zero: b = hocbf_barrier(rel.xi, rel.nu, cfg.rff.ff.R, cfg.hocbf_gain); break;
    case BarrierKind::ff: b = ff_barrier(rel.xi, rel.nu, cfg.rff.ff); break;
    case BarrierKind::rff: b = rff_barrier(rel.xi, rel.nu, cfg.rff); break;
  }
  return assemble_row(b, rel, omega_i, omega_j, cfg.alpha_gain);
}

}  // namespace ffcbf
