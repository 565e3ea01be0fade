#pragma once

#include <Eigen/Dense>

namespace starmec {

/// maximize a.dot(x)  s.t.  C x <= d,  x >= 0, with x three-dimensional.
struct LpProblem {
  Eigen::RowVector3d objective;
  Eigen::Matrix<double, Eigen::Dynamic, 3> constraints;
  Eigen::VectorXd bounds;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double value = 0.0;
};

/// Exact solve by enumerating all vertices (intersections of three active
/// constraints). Ties in the objective break toward the lexicographically
/// smallest point. Problems here have three variables and a handful of
/// rows, so enumeration is cheaper and more predictable than a simplex.
LpSolution solve_lp(const LpProblem& problem, double tol = 1e-9);

}  // namespace starmec
