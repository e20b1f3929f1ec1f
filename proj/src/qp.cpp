#include "ffcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ffcbf {

int QpProblem::add_row(const Eigen::VectorXd& coeffs, double bound) {
  if (coeffs.size() != dim()) throw std::invalid_argument("QpProblem::add_row: dimension mismatch");
  const Eigen::Index m = A.rows();
  A.conservativeResize(m + 1, dim());
  lower.conservativeResize(m + 1);
  A.row(m) = coeffs.transpose();
  lower(m) = bound;
  return static_cast<int>(m);
}

void QpProblem::set_box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  box_lower = std::move(lo);
  box_upper = std::move(hi);
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::iteration_limit: return "iteration_limit";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// All constraints as unit normals n . u >= b. Rows with a zero normal or an infinite box
/// bound are kept with `present = false` so that indices stay stable.
struct NormalizedRows {
  Eigen::MatrixXd normals;  // dim x M
  Eigen::VectorXd bounds;   // M
  std::vector<char> present;
  bool trivially_infeasible = false;
};

void validate_problem(const QpProblem& p) {
  if (p.dim() < 1) throw std::invalid_argument("QP dimension must be >= 1");
  if (p.A.cols() != p.dim() || p.lower.size() != p.A.rows()) {
    throw std::invalid_argument("QP row matrix / bound sizes are inconsistent");
  }
  if (!p.target.allFinite() || !p.A.allFinite() || !p.lower.allFinite()) {
    throw std::invalid_argument("QP data contains non-finite entries");
  }
  if (p.box_lower.size() != p.box_upper.size() ||
      (p.has_box() && p.box_lower.size() != p.dim())) {
    throw std::invalid_argument("QP box bounds have the wrong size");
  }
  for (Eigen::Index k = 0; k < p.box_lower.size(); ++k) {
    if (std::isnan(p.box_lower(k)) || std::isnan(p.box_upper(k)) || p.box_lower(k) == kInf ||
        p.box_upper(k) == -kInf) {
      throw std::invalid_argument("QP box bounds must be real or outward infinities");
    }
    if (p.box_lower(k) > p.box_upper(k)) throw std::invalid_argument("QP box lower > upper");
  }
}

NormalizedRows normalize(const QpProblem& p, double feas_tol) {
  const int n = p.dim();
  const int m = p.num_rows();
  const int total = m + (p.has_box() ? 2 * n : 0);
  NormalizedRows rows;
  rows.normals = Eigen::MatrixXd::Zero(n, total);
  rows.bounds = Eigen::VectorXd::Zero(total);
  rows.present.assign(static_cast<std::size_t>(total), 0);
  for (int r = 0; r < m; ++r) {
    const double norm = p.A.row(r).norm();
    if (norm == 0.0) {
      // 0 >= lower
      if (p.lower(r) > feas_tol) rows.trivially_infeasible = true;
      continue;
    }
    rows.normals.col(r) = p.A.row(r).transpose() / norm;
    rows.bounds(r) = p.lower(r) / norm;
    rows.present[static_cast<std::size_t>(r)] = 1;
  }
  if (p.has_box()) {
    for (int k = 0; k < n; ++k) {
      const int lo = m + 2 * k;
      const int hi = lo + 1;
      if (std::isfinite(p.box_lower(k))) {
        rows.normals(k, lo) = 1.0;
        rows.bounds(lo) = p.box_lower(k);
        rows.present[static_cast<std::size_t>(lo)] = 1;
      }
      if (std::isfinite(p.box_upper(k))) {
        rows.normals(k, hi) = -1.0;
        rows.bounds(hi) = -p.box_upper(k);
        rows.present[static_cast<std::size_t>(hi)] = 1;
      }
    }
  }
  return rows;
}

double slack_tolerance(double bound, double feas_tol) { return feas_tol * (1.0 + std::abs(bound)); }

Eigen::MatrixXd gather(const Eigen::MatrixXd& normals, const std::vector<int>& idx) {
  Eigen::MatrixXd out(normals.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = normals.col(idx[c]);
  return out;
}

}  // namespace

QpSolution solve(const QpProblem& problem, QpWarmStart* warm, const QpSettings& settings) {
  validate_problem(problem);
  const NormalizedRows rows = normalize(problem, settings.feasibility_tol);
  const int total = static_cast<int>(rows.bounds.size());

  QpSolution sol;
  sol.u = problem.target;
  if (rows.trivially_infeasible) {
    sol.status = QpStatus::infeasible;
    return sol;
  }

  std::vector<char> preferred(static_cast<std::size_t>(total), 0);
  if (warm != nullptr) {
    for (int r : warm->active_set) {
      if (r >= 0 && r < total) preferred[static_cast<std::size_t>(r)] = 1;
    }
  }
  // Rows whose infeasibility certificate was below tolerance; treated as satisfied.
  std::vector<char> tolerated(static_cast<std::size_t>(total), 0);

  Eigen::VectorXd x = problem.target;
  std::vector<int> active;
  std::vector<double> lambda;

  auto most_violated = [&](bool preferred_only) {
    int best = -1;
    double best_slack = 0.0;
    for (int r = 0; r < total; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      if (!rows.present[ur] || tolerated[ur]) continue;
      if (preferred_only && !preferred[ur]) continue;
      if (std::find(active.begin(), active.end(), r) != active.end()) continue;
      const double s = rows.normals.col(r).dot(x) - rows.bounds(r);
      if (s >= -slack_tolerance(rows.bounds(r), settings.feasibility_tol)) continue;
      // strict comparison keeps the lowest index on ties
      if (best < 0 || s < best_slack) {
        best = r;
        best_slack = s;
      }
    }
    return best;
  };

  int iterations = 0;
  for (;;) {
    int p = most_violated(true);
    if (p < 0) p = most_violated(false);
    if (p < 0) break;

    const Eigen::VectorXd np = rows.normals.col(p);
    double lambda_p = 0.0;
    bool added = false;
    while (!added) {
      if (++iterations > settings.max_iterations) {
        sol.status = QpStatus::iteration_limit;
        sol.u = x;
        sol.iterations = iterations;
        sol.active_set = active;
        std::sort(sol.active_set.begin(), sol.active_set.end());
        return sol;
      }
      Eigen::VectorXd r;
      Eigen::VectorXd z = np;
      if (!active.empty()) {
        const Eigen::MatrixXd N = gather(rows.normals, active);
        r = N.colPivHouseholderQr().solve(np);
        z = np - N * r;
      }
      // Largest dual step that keeps active multipliers non-negative.
      double t1 = kInf;
      int drop = -1;
      for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (r(j) > 1e-12) {
          const double t = lambda[static_cast<std::size_t>(j)] / r(j);
          if (t < t1) {
            t1 = t;
            drop = static_cast<int>(j);
          }
        }
      }
      const double zz = z.dot(np);
      const double slack_p = np.dot(x) - rows.bounds(p);
      const double t2 = zz > 1e-14 ? -slack_p / zz : kInf;

      if (t1 == kInf && t2 == kInf) {
        // np lies in the span of the active normals with non-positive coefficients:
        // multipliers y = (-r, 1) prove infeasibility with certified slack below.
        double weight = 1.0;
        double rhs = rows.bounds(p);
        for (Eigen::Index j = 0; j < r.size(); ++j) {
          weight -= r(j);
          rhs -= r(j) * rows.bounds(active[static_cast<std::size_t>(j)]);
        }
        if (rhs / weight > settings.infeasibility_tol) {
          sol.status = QpStatus::infeasible;
          sol.u = x;
          sol.iterations = iterations;
          sol.active_set = active;
          std::sort(sol.active_set.begin(), sol.active_set.end());
          return sol;
        }
        tolerated[static_cast<std::size_t>(p)] = 1;
        break;
      }

      const double t = std::min(t1, t2);
      if (t2 < kInf) x += t * z;
      for (Eigen::Index j = 0; j < r.size(); ++j) lambda[static_cast<std::size_t>(j)] -= t * r(j);
      lambda_p += t;

      if (t2 <= t1) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        added = true;
      } else {
        active.erase(active.begin() + drop);
        lambda.erase(lambda.begin() + drop);
      }
    }
  }

  sol.status = QpStatus::optimal;
  sol.u = x;
  sol.iterations = iterations;
  sol.active_set = active;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.kkt_residual = verify_kkt(problem, x, sol.active_set);
  if (warm != nullptr) warm->active_set = sol.active_set;
  return sol;
}

double verify_kkt(const QpProblem& problem, const Eigen::VectorXd& u, std::span<const int> active_set) {
  validate_problem(problem);
  if (u.size() != problem.dim()) throw std::invalid_argument("verify_kkt: candidate has wrong size");
  const NormalizedRows rows = normalize(problem, 0.0);
  const int total = static_cast<int>(rows.bounds.size());

  double primal = 0.0;
  for (int r = 0; r < total; ++r) {
    if (!rows.present[static_cast<std::size_t>(r)]) continue;
    primal = std::max(primal, rows.bounds(r) - rows.normals.col(r).dot(u));
  }

  std::vector<int> idx;
  for (int r : active_set) {
    if (r < 0 || r >= total) throw std::invalid_argument("verify_kkt: active index out of range");
    if (rows.present[static_cast<std::size_t>(r)]) idx.push_back(r);
  }
  const Eigen::VectorXd grad = u - problem.target;
  double stationarity = grad.cwiseAbs().maxCoeff();
  double dual = 0.0;
  double complementarity = 0.0;
  if (!idx.empty()) {
    const Eigen::MatrixXd N = gather(rows.normals, idx);
    const Eigen::VectorXd lam = N.colPivHouseholderQr().solve(grad);
    stationarity = (grad - N * lam).cwiseAbs().maxCoeff();
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const double l = lam(static_cast<Eigen::Index>(c));
      dual = std::max(dual, -l);
      const double s = rows.normals.col(idx[c]).dot(u) - rows.bounds(idx[c]);
      complementarity = std::max(complementarity, std::abs(l * s));
    }
  }
  return std::max({stationarity, primal, dual, complementarity});
}

}  // namespace ffcbf
