#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ffcbf/controllers.hpp"
#include "oracles.hpp"

using namespace ffcbf;

namespace {

Eigen::MatrixXd riccati_gain(const LqrWeights& w) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
  B(2, 0) = 1.0;
  B(3, 1) = 1.0;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(4, 4);
  Q.diagonal() << w.q_pos, w.q_pos, w.q_vel, w.q_vel;
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2) * w.r;
  const Eigen::MatrixXd P = oracle::care(A, B, Q, R);
  return R.inverse() * B.transpose() * P;
}

}  // namespace

TEST_CASE("LQR gain matches the Riccati oracle") {
  const LqrGain unit = lqr_gain(1.0, 1.0, 1.0);
  CHECK(unit(0, 0) == doctest::Approx(1.0));
  CHECK(unit(0, 2) == doctest::Approx(std::sqrt(3.0)));
  for (const LqrWeights w : {LqrWeights{1, 1, 1}, LqrWeights{1, 2, 1}, LqrWeights{4, 0.5, 2}, LqrWeights{10, 3, 0.1}}) {
    const Eigen::MatrixXd expected = riccati_gain(w);
    CHECK((lqr_gain(w) - expected).norm() < 1e-8 * std::max(1.0, expected.norm()) * 10.0);
  }
  CHECK_THROWS_AS(lqr_gain(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("singular branch returns the magnitude of the request") {
  const ControlInput in = planar_to_input({0, 0, 0, 0, 0.0}, Eigen::Vector2d(-3.0, 4.0), 1e-3);
  CHECK(in.omega == 0.0);
  CHECK(in.a == doctest::Approx(5.0));
}

TEST_CASE("nominal control on the reference is zero") {
  const VehicleState s{0.0, -10.0, std::numbers::pi / 2.0, 0.0, 6.0};
  const NominalTarget t{{0.0, -10.0}, {0.0, 6.0}};
  const ControlInput in = nominal_control(s, t, lqr_gain(LqrWeights{}), 1e-3);
  CHECK(std::abs(in.omega) < 1e-12);
  CHECK(std::abs(in.a) < 1e-12);
}

TEST_CASE("filter is minimally invasive when no row binds") {
  ControllerConfig cfg;
  const std::vector<VehicleState> states{{-30.0, 0.0, 0.0, 0.0, 5.0}, {30.0, 10.0, std::numbers::pi, 0.0, 5.0}};
  const std::vector<NominalTarget> targets{{{-29.5, 0.0}, {5.0, 0.0}}, {{29.5, 10.0}, {-5.0, 0.0}}};
  const CentralizedResult r = centralized_step(states, targets, cfg);
  REQUIRE(r.feasible);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.inputs[i].a == doctest::Approx(std::clamp(r.nominal[i].a, -cfg.a_bar, cfg.a_bar)).epsilon(1e-8));
  }
}

TEST_CASE("every returned control satisfies its rows and bounds") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (BarrierKind kind : {BarrierKind::zero, BarrierKind::ff, BarrierKind::rff}) {
    ControllerConfig cfg;
    cfg.barrier.kind = kind;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<VehicleState> states;
      std::vector<NominalTarget> targets;
      for (int i = 0; i < 4; ++i) {
        states.push_back({15.0 * u(rng), 15.0 * u(rng), std::numbers::pi * u(rng), 0.2 * u(rng), 5.0 + 4.0 * u(rng)});
        targets.push_back({states.back().position() + Eigen::Vector2d(u(rng), u(rng)), {5.0 * u(rng), 5.0 * u(rng)}});
      }
      const CentralizedResult r = centralized_step(states, targets, cfg);
      Eigen::VectorXd a(4);
      for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(r.inputs[static_cast<std::size_t>(i)].omega) <= cfg.omega_bar);
        CHECK(std::abs(r.inputs[static_cast<std::size_t>(i)].a) <= cfg.a_bar + 1e-12);
        a(i) = r.inputs[static_cast<std::size_t>(i)].a;
      }
      if (r.feasible) CHECK(oracle::max_violation(r.problem, a) < 1e-6);
      else for (int i = 0; i < 4; ++i) CHECK(a(i) == -cfg.a_bar);

      const DecentralizedResult d = decentralized_step(0, states, targets[0], cfg);
      if (d.feasible) CHECK(oracle::max_violation(d.problem, Eigen::VectorXd::Constant(1, d.input.a)) < 1e-6);
      CHECK(std::abs(d.input.a) <= cfg.a_bar + 1e-12);
    }
  }
}

TEST_CASE("decentralized rows of a head-on pair sum to the pair derivative bound") {
  ControllerConfig cfg;
  cfg.mode = ControlMode::decentralized;
  cfg.barrier.kind = BarrierKind::ff;
  // Far enough apart that the predicted contact lies beyond the horizon, so h_ff > 0.
  std::vector<VehicleState> s{{-35.0, 0.0, 0.0, 0.0, 6.0}, {35.0, 0.0, std::numbers::pi, 0.0, 6.0}};
  CHECK(h_ff(s[0], s[1], cfg.barrier.rff.ff) > 0.0);
  const DecentralizedResult r0 = decentralized_step(0, s, {{-35.0, 0.0}, {6.0, 0.0}}, cfg);
  const DecentralizedResult r1 = decentralized_step(1, s, {{35.0, 0.0}, {-6.0, 0.0}}, cfg);
  REQUIRE(r0.feasible);
  REQUIRE(r1.feasible);
  // The pair is mirror symmetric, so both agents see the same barrier and brake equally.
  CHECK(r0.input.a == doctest::Approx(r1.input.a));
  CHECK(r0.input.a <= 1e-12);
}

TEST_CASE("config validation") {
  ControllerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.v_eps = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(control_mode_from_string("decentralized") == ControlMode::decentralized);
  CHECK_THROWS_AS(control_mode_from_string("central"), std::invalid_argument);
  CHECK(saturate_omega(3.0, 1.0) == 1.0);
}
