#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace starmec {

/// maximize f(x) s.t. g_j(x) <= 0 and lower <= x <= upper, with f concave
/// and every g_j convex, all differentiable on the box interior.
struct SmoothConcaveProblem {
  using Fn = std::function<double(const Eigen::VectorXd&)>;
  using Grad = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  struct Constraint {
    Fn value;
    Grad gradient;
  };

  Fn objective;
  Grad objective_gradient;
  std::vector<Constraint> constraints;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
};

enum class SmoothStatus { Optimal, Infeasible, MaxIterations };

struct SmoothSolution {
  SmoothStatus status = SmoothStatus::Infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  double kkt_residual = 0.0;  // on the box-normalized problem
  int newton_steps = 0;
};

struct SmoothSettings {
  double kkt_tol = 1e-7;
  double barrier_growth = 10.0;
  int max_newton_per_stage = 60;
  int max_stages = 40;
};

/// Log-barrier Newton with backtracking. Variables are normalized to the
/// unit box internally; Hessians come from finite differences of the
/// supplied gradients. `start` must be strictly feasible (a small pull
/// toward the box center is attempted when it is only marginally so).
SmoothSolution solve_smooth(const SmoothConcaveProblem& problem,
                            const Eigen::VectorXd& start,
                            const SmoothSettings& settings = {});

}  // namespace starmec
