#pragma once

// Reference implementations used only by tests. Each is deliberately naive and shares no
// code with the library it checks.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ffcbf/qp.hpp"

namespace oracle {

/// Projection of the target onto {A u >= b, lo <= u <= hi} by enumerating every subset of at
/// most dim constraints, treating it as equalities, and keeping the closest feasible candidate.
struct BruteForceResult {
  bool feasible = false;
  Eigen::VectorXd u;
};

inline BruteForceResult brute_force_qp(const ffcbf::QpProblem& p, double tol = 1e-9) {
  const int n = p.dim();
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int r = 0; r < p.num_rows(); ++r) {
    rows.emplace_back(p.A.row(r).transpose());
    rhs.push_back(p.lower(r));
  }
  if (p.has_box()) {
    for (int k = 0; k < n; ++k) {
      if (std::isfinite(p.box_lower(k))) {
        rows.push_back(Eigen::VectorXd::Unit(n, k));
        rhs.push_back(p.box_lower(k));
      }
      if (std::isfinite(p.box_upper(k))) {
        rows.push_back(-Eigen::VectorXd::Unit(n, k));
        rhs.push_back(-p.box_upper(k));
      }
    }
  }
  const int m = static_cast<int>(rows.size());
  auto feasible = [&](const Eigen::VectorXd& u) {
    for (int r = 0; r < m; ++r) {
      const double scale = std::max(1.0, rows[r].norm());
      if (rows[r].dot(u) - rhs[r] < -tol * scale) return false;
    }
    return true;
  };

  BruteForceResult best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int start) {
    // Equality-constrained projection onto the picked rows.
    const int k = static_cast<int>(pick.size());
    Eigen::VectorXd u = p.target;
    if (k > 0) {
      Eigen::MatrixXd E(k, n);
      Eigen::VectorXd e(k);
      for (int i = 0; i < k; ++i) {
        E.row(i) = rows[pick[i]].transpose();
        e(i) = rhs[pick[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(E * E.transpose());
      if (lu.rank() == k) u = p.target - E.transpose() * lu.solve(E * p.target - e);
      else u.resize(0);
    }
    if (u.size() == n && feasible(u)) {
      const double d = (u - p.target).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best.feasible = true;
        best.u = u;
      }
    }
    if (k == n) return;
    for (int r = start; r < m; ++r) {
      pick.push_back(r);
      rec(r + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

/// Stabilizing solution of the continuous algebraic Riccati equation
/// A'P + PA - P B R^-1 B' P + Q = 0 from the stable invariant subspace of the Hamiltonian.
inline Eigen::MatrixXd care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                            const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  Eigen::MatrixXcd U(2 * n, n);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < 2 * n && col < n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) U.col(col++) = es.eigenvectors().col(i);
  }
  const Eigen::MatrixXcd P = U.bottomRows(n) * U.topRows(n).inverse();
  return P.real();
}

/// Central difference of a scalar function at x along each coordinate.
template <class F>
Eigen::VectorXd central_gradient(F&& f, Eigen::VectorXd x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const double fp = f(x);
    x(i) = xi - h;
    const double fm = f(x);
    x(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Random QP with dim <= 4 and <= 12 rows; roughly half are built around a known interior point.
inline ffcbf::QpProblem random_qp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_d(1, 4);
  std::uniform_int_distribution<int> rows_d(0, 12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = dim_d(rng);
  const int m = rows_d(rng);
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) target(i) = 3.0 * u(rng);
  ffcbf::QpProblem p(target);
  const bool anchored = u(rng) > 0.0;
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0(i) = 2.0 * u(rng);
  for (int r = 0; r < m; ++r) {
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = u(rng);
    if (a.norm() < 0.05) a(0) += 0.5;
    const double b = anchored ? a.dot(x0) - 0.5 * (u(rng) + 1.0) : 2.0 * u(rng);
    p.add_row(a, b);
  }
  if (u(rng) > 0.0) {
    Eigen::VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo(i) = anchored ? std::min(x0(i), -2.5) : -2.5;
      hi(i) = anchored ? std::max(x0(i), 2.5) : 2.5;
    }
    p.set_box(lo, hi);
  }
  return p;
}

/// Largest violation of any row or bound, normalized per row.
inline double max_violation(const ffcbf::QpProblem& p, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (int r = 0; r < p.num_rows(); ++r) {
    const double s = std::max(1.0, p.A.row(r).norm());
    worst = std::max(worst, (p.lower(r) - p.A.row(r).dot(x)) / s);
  }
  if (p.has_box()) {
    for (int k = 0; k < p.dim(); ++k) {
      worst = std::max(worst, p.box_lower(k) - x(k));
      worst = std::max(worst, x(k) - p.box_upper(k));
    }
  }
  return worst;
}

}  // namespace oracle
