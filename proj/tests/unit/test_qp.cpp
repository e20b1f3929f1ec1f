#include <doctest.h>

#include <cstring>
#include <random>

#include "ffcbf/qp.hpp"
#include "oracles.hpp"

using namespace ffcbf;

TEST_CASE("unconstrained problem returns the target") {
  QpProblem p(Eigen::Vector2d(1.0, -2.0));
  const QpSolution s = solve(p);
  REQUIRE(s.ok());
  CHECK((s.u - p.target).norm() == 0.0);
  CHECK(s.active_set.empty());
}

TEST_CASE("single half-plane projection") {
  QpProblem p(Eigen::Vector2d(0.0, 0.0));
  p.add_row(Eigen::Vector2d(1.0, 1.0), 2.0);
  const QpSolution s = solve(p);
  REQUIRE(s.ok());
  CHECK(s.u(0) == doctest::Approx(1.0));
  CHECK(s.u(1) == doctest::Approx(1.0));
  CHECK(s.active_set == std::vector<int>{0});
  CHECK(verify_kkt(p, s.u, s.active_set) < 1e-9);
}

TEST_CASE("box clamps the target") {
  QpProblem p(Eigen::Vector3d(5.0, -5.0, 0.5));
  p.set_box(Eigen::Vector3d::Constant(-1.0), Eigen::Vector3d::Constant(1.0));
  const QpSolution s = solve(p);
  REQUIRE(s.ok());
  CHECK((s.u - Eigen::Vector3d(1.0, -1.0, 0.5)).norm() < 1e-12);
}

TEST_CASE("contradictory rows are infeasible") {
  QpProblem p(Eigen::VectorXd::Zero(1));
  p.add_row(Eigen::VectorXd::Constant(1, 1.0), 1.0);
  p.add_row(Eigen::VectorXd::Constant(1, -1.0), 0.0);
  CHECK(solve(p).status == QpStatus::infeasible);

  QpProblem q(Eigen::VectorXd::Zero(1));
  q.set_box(Eigen::VectorXd::Constant(1, -9.81), Eigen::VectorXd::Constant(1, 9.81));
  q.add_row(Eigen::VectorXd::Constant(1, 1.0), 10.0);
  CHECK(solve(q).status == QpStatus::infeasible);
}

TEST_CASE("zero row") {
  QpProblem p(Eigen::VectorXd::Zero(2));
  p.add_row(Eigen::VectorXd::Zero(2), -1.0);
  CHECK(solve(p).ok());
  p.add_row(Eigen::VectorXd::Zero(2), 1.0);
  CHECK(solve(p).status == QpStatus::infeasible);
}

TEST_CASE("invalid problems throw") {
  QpProblem p(Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(p.add_row(Eigen::VectorXd::Zero(3), 0.0), std::invalid_argument);
  p.set_box(Eigen::VectorXd::Constant(2, 1.0), Eigen::VectorXd::Constant(2, -1.0));
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
  QpProblem e;
  CHECK_THROWS_AS(solve(e), std::invalid_argument);
}

TEST_CASE("matches the enumeration oracle") {
  std::mt19937_64 rng(123);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const QpProblem p = oracle::random_qp(rng);
    const QpSolution s = solve(p);
    const oracle::BruteForceResult o = oracle::brute_force_qp(p);
    REQUIRE(s.status != QpStatus::iteration_limit);
    CHECK(s.ok() == o.feasible);
    if (s.ok() && o.feasible) {
      CHECK((s.u - o.u).norm() < 1e-6);
      CHECK(oracle::max_violation(p, s.u) < 1e-8);
      ++feasible;
    } else {
      ++infeasible;
    }
  }
  CHECK(feasible > 50);
  CHECK(infeasible > 10);
}

TEST_CASE("row scaling leaves the solution unchanged") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    QpProblem p = oracle::random_qp(rng);
    const QpSolution a = solve(p);
    if (!a.ok() || p.num_rows() == 0) continue;
    p.A.row(0) *= 1e3;
    p.lower(0) *= 1e3;
    const QpSolution b = solve(p);
    REQUIRE(b.ok());
    CHECK((a.u - b.u).norm() < 1e-6);
  }
}

TEST_CASE("deterministic and warm-start invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const QpProblem p = oracle::random_qp(rng);
    const QpSolution a = solve(p);
    const QpSolution b = solve(p);
    CHECK(a.status == b.status);
    if (!a.ok()) continue;
    CHECK(std::memcmp(a.u.data(), b.u.data(), sizeof(double) * static_cast<std::size_t>(a.u.size())) == 0);
    QpWarmStart warm{a.active_set};
    const QpSolution c = solve(p, &warm);
    REQUIRE(c.ok());
    CHECK((c.u - a.u).norm() < 1e-9);
    // A stale warm start must not change the answer either.
    QpWarmStart stale{{0, 1, 2, 3, 50}};
    const QpSolution d = solve(p, &stale);
    REQUIRE(d.ok());
    CHECK((d.u - a.u).norm() < 1e-9);
  }
}

TEST_CASE("iteration limit is reported distinctly") {
  std::mt19937_64 rng(8);
  QpSettings tight;
  tight.max_iterations = 0;
  bool seen = false;
  for (int trial = 0; trial < 50 && !seen; ++trial) {
    const QpProblem p = oracle::random_qp(rng);
    seen = solve(p, nullptr, tight).status == QpStatus::iteration_limit;
  }
  CHECK(seen);
  CHECK(to_string(QpStatus::iteration_limit) == "iteration_limit");
}
