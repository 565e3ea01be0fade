#include "starmec/lp.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace starmec {

namespace {

struct Rows {
  // rows: n x <= rhs
  std::vector<Eigen::RowVector3d> n;
  std::vector<double> rhs;

  void add(const Eigen::RowVector3d& row, double b) {
    const double s = std::max({std::abs(row[0]), std::abs(row[1]),
                               std::abs(row[2]), 1e-30});
    n.push_back(row / s);
    rhs.push_back(b / s);
  }

  bool feasible(const Eigen::Vector3d& x, double tol) const {
    for (std::size_t i = 0; i < n.size(); ++i)
      if (n[i].dot(x) > rhs[i] + tol) return false;
    return true;
  }
};

bool lex_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

// Best vertex of {rows, x in R^3} for the given objective, or nullopt-like
// found=false when no triple of rows meets feasibly.
struct VertexScan {
  bool found = false;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double value = -std::numeric_limits<double>::infinity();
};

VertexScan best_vertex(const Rows& rows, const Eigen::RowVector3d& objective,
                       double tol) {
  VertexScan best;
  const int nr = static_cast<int>(rows.n.size());
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
  for (int i = 0; i < nr; ++i)
    for (int j = i + 1; j < nr; ++j)
      for (int k = j + 1; k < nr; ++k) {
        a.row(0) = rows.n[i];
        a.row(1) = rows.n[j];
        a.row(2) = rows.n[k];
        b << rows.rhs[i], rows.rhs[j], rows.rhs[k];
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        lu.setThreshold(1e-10);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d x = lu.solve(b);
        if (!x.allFinite() || !rows.feasible(x, tol)) continue;
        const double v = objective.dot(x);
        if (!best.found || v > best.value + tol ||
            (v > best.value - tol && lex_less(x, best.x, tol))) {
          best.found = true;
          best.value = v;
          best.x = x;
        }
      }
  return best;
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, double tol) {
  Rows rows;
  for (int r = 0; r < problem.constraints.rows(); ++r)
    rows.add(problem.constraints.row(r), problem.bounds[r]);
  for (int i = 0; i < 3; ++i) {
    Eigen::RowVector3d e = Eigen::RowVector3d::Zero();
    e[i] = -1.0;
    rows.add(e, 0.0);  // x_i >= 0
  }

  LpSolution sol;
  const VertexScan feas = best_vertex(rows, problem.objective, tol);
  if (!feas.found) {
    sol.status = LpStatus::Infeasible;
    return sol;
  }

  // Recession check: an improving ray y >= 0, C y <= 0 means unbounded.
  {
    Rows cone = rows;
    cone.rhs.assign(cone.rhs.size(), 0.0);
    for (int i = 0; i < 3; ++i) {
      Eigen::RowVector3d e = Eigen::RowVector3d::Zero();
      e[i] = 1.0;
      cone.add(e, 1.0);  // normalize the cone to a box
    }
    const VertexScan ray = best_vertex(cone, problem.objective, tol);
    if (ray.found && ray.value > 1e-7 * (1.0 + problem.objective.cwiseAbs().maxCoeff())) {
      sol.status = LpStatus::Unbounded;
      return sol;
    }
  }

  sol.status = LpStatus::Optimal;
  sol.x = feas.x;
  sol.value = feas.value;
  return sol;
}

}  // namespace starmec
