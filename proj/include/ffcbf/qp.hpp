#pragma once

// Dense projection QP used by the safety filters:
//
//   minimize 1/2 ||u - target||^2   subject to   A u >= lower,  box_lower <= u <= box_upper.
//
// Rows are numbered 0..m-1 for the general inequalities, followed by two rows per variable
// for the box: m + 2k is "u_k >= box_lower[k]" and m + 2k + 1 is "-u_k >= -box_upper[k]".
// Active sets in QpSolution / QpWarmStart use this numbering.

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ffcbf {

struct QpProblem {
  Eigen::VectorXd target;
  Eigen::MatrixXd A;          // m x dim
  Eigen::VectorXd lower;      // m
  Eigen::VectorXd box_lower;  // dim, or empty for no box; entries may be -inf
  Eigen::VectorXd box_upper;  // dim, or empty for no box; entries may be +inf

  QpProblem() = default;
  explicit QpProblem(Eigen::VectorXd u0) : target(std::move(u0)), A(0, target.size()), lower(0) {}

  int dim() const { return static_cast<int>(target.size()); }
  int num_rows() const { return static_cast<int>(A.rows()); }
  bool has_box() const { return box_lower.size() > 0; }
  /// Appends coeffs . u >= bound and returns its row index.
  int add_row(const Eigen::VectorXd& coeffs, double bound);
  void set_box(Eigen::VectorXd lo, Eigen::VectorXd hi);
};

enum class QpStatus { optimal, infeasible, iteration_limit };
std::string_view to_string(QpStatus status);

struct QpSolution {
  QpStatus status = QpStatus::infeasible;
  Eigen::VectorXd u;             // minimizer when optimal, last iterate otherwise
  std::vector<int> active_set;   // sorted row indices tight at u
  double kkt_residual = 0.0;
  int iterations = 0;

  bool ok() const { return status == QpStatus::optimal; }
};

/// Active set carried between consecutive solves of closely related problems.
struct QpWarmStart {
  std::vector<int> active_set;
};

struct QpSettings {
  double feasibility_tol = 1e-8;      // absolute + relative on normalized rows
  double dual_tol = 1e-9;
  double infeasibility_tol = 1e-7;    // minimum certified slack to declare infeasible
  int max_iterations = 200;
};

/// Dual active-set solve (Goldfarb-Idnani specialized to an identity Hessian). Never throws
/// on infeasible data; throws std::invalid_argument on malformed input.
QpSolution solve(const QpProblem& problem, QpWarmStart* warm = nullptr, const QpSettings& settings = {});

/// Max of stationarity, primal infeasibility, dual infeasibility and complementarity
/// violations for a candidate (u, active_set), with multipliers fitted by least squares.
double verify_kkt(const QpProblem& problem, const Eigen::VectorXd& u, std::span<const int> active_set);

}  // namespace ffcbf
