#include "starmec/smooth.hpp"

#include <cmath>
#include <limits>

namespace starmec {

namespace {

constexpr double kEdge = 1e-9;  // strict interiority margin in unit box

struct Scaled {
  // Free coordinates are mapped to the unit box; pinned ones (degenerate
  // bounds) are substituted out.
  const SmoothConcaveProblem* prob;
  Eigen::VectorXd lo, width;
  std::vector<int> free_idx;
  Eigen::VectorXd x_template;
  double f_scale = 1.0;
  std::vector<double> g_scale;

  int nfree() const { return static_cast<int>(free_idx.size()); }

  Eigen::VectorXd to_x(const Eigen::VectorXd& z) const {
    Eigen::VectorXd x = x_template;
    for (int i = 0; i < nfree(); ++i) {
      const int j = free_idx[i];
      x[j] = lo[j] + width[j] * z[i];
    }
    return x;
  }

  double fhat(const Eigen::VectorXd& z) const {
    return prob->objective(to_x(z)) * f_scale;
  }

  Eigen::VectorXd fhat_grad(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd g = prob->objective_gradient(to_x(z));
    Eigen::VectorXd out(nfree());
    for (int i = 0; i < nfree(); ++i)
      out[i] = g[free_idx[i]] * width[free_idx[i]] * f_scale;
    return out;
  }

  double ghat(int j, const Eigen::VectorXd& z) const {
    return prob->constraints[j].value(to_x(z)) * g_scale[j];
  }

  Eigen::VectorXd ghat_grad(int j, const Eigen::VectorXd& z) const {
    const Eigen::VectorXd g = prob->constraints[j].gradient(to_x(z));
    Eigen::VectorXd out(nfree());
    for (int i = 0; i < nfree(); ++i)
      out[i] = g[free_idx[i]] * width[free_idx[i]] * g_scale[j];
    return out;
  }

  bool strictly_feasible(const Eigen::VectorXd& z) const {
    for (int i = 0; i < nfree(); ++i)
      if (z[i] <= 0.0 || z[i] >= 1.0) return false;
    for (std::size_t j = 0; j < prob->constraints.size(); ++j)
      if (ghat(static_cast<int>(j), z) >= 0.0) return false;
    return true;
  }
};

struct Barrier {
  const Scaled* s;
  double t;

  double value(const Eigen::VectorXd& z, bool* ok) const {
    *ok = true;
    double v = -t * s->fhat(z);
    for (std::size_t j = 0; j < s->prob->constraints.size(); ++j) {
      const double g = s->ghat(static_cast<int>(j), z);
      if (g >= 0.0) { *ok = false; return std::numeric_limits<double>::infinity(); }
      v -= std::log(-g);
    }
    for (int i = 0; i < s->nfree(); ++i) {
      if (z[i] <= 0.0 || z[i] >= 1.0) { *ok = false; return std::numeric_limits<double>::infinity(); }
      v -= std::log(z[i]) + std::log(1.0 - z[i]);
    }
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z, bool* ok) const {
    *ok = true;
    Eigen::VectorXd g = -t * s->fhat_grad(z);
    for (std::size_t j = 0; j < s->prob->constraints.size(); ++j) {
      const double gj = s->ghat(static_cast<int>(j), z);
      if (gj >= 0.0) { *ok = false; return g; }
      g += s->ghat_grad(static_cast<int>(j), z) / (-gj);
    }
    for (int i = 0; i < s->nfree(); ++i) {
      if (z[i] <= 0.0 || z[i] >= 1.0) { *ok = false; return g; }
      g[i] += -1.0 / z[i] + 1.0 / (1.0 - z[i]);
    }
    return g;
  }

  // Finite-difference Hessian from analytic gradients; steps shrink near
  // the boundary so probes stay inside the domain.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const {
    const int n = s->nfree();
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i) {
      double step = 1e-6;
      step = std::min(step, 0.45 * z[i]);
      step = std::min(step, 0.45 * (1.0 - z[i]));
      step = std::max(step, 1e-12);
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += step;
      zm[i] -= step;
      bool okp = false, okm = false;
      Eigen::VectorXd gp = gradient(zp, &okp);
      Eigen::VectorXd gm = gradient(zm, &okm);
      if (okp && okm) {
        h.col(i) = (gp - gm) / (2.0 * step);
      } else if (okp) {
        h.col(i) = (gp - gradient(z, &okm)) / step;
      } else if (okm) {
        h.col(i) = (gradient(z, &okp) - gm) / step;
      } else {
        h.col(i).setZero();
        h(i, i) = 1.0;
      }
    }
    return 0.5 * (h + h.transpose());
  }
};

}  // namespace

SmoothSolution solve_smooth(const SmoothConcaveProblem& problem,
                            const Eigen::VectorXd& start,
                            const SmoothSettings& settings) {
  SmoothSolution sol;
  const int n = problem.dim();

  Scaled sc;
  sc.prob = &problem;
  sc.lo = problem.lower;
  sc.width = problem.upper - problem.lower;
  sc.x_template = start;
  for (int i = 0; i < n; ++i) {
    if (sc.width[i] < 0.0)
      throw std::invalid_argument("box upper bound below lower bound");
    if (sc.width[i] > 0.0)
      sc.free_idx.push_back(i);
    else
      sc.x_template[i] = sc.lo[i];
  }
  const int nf = sc.nfree();

  // Initial point in the unit box, nudged strictly inside.
  Eigen::VectorXd z(nf);
  for (int i = 0; i < nf; ++i) {
    const int j = sc.free_idx[i];
    z[i] = (start[j] - sc.lo[j]) / sc.width[j];
    z[i] = std::min(std::max(z[i], kEdge), 1.0 - kEdge);
  }

  sc.g_scale.resize(problem.constraints.size());
  {
    const Eigen::VectorXd x0 = sc.to_x(z);
    for (std::size_t j = 0; j < problem.constraints.size(); ++j) {
      const double gv = std::abs(problem.constraints[j].value(x0));
      const Eigen::VectorXd gg = problem.constraints[j].gradient(x0);
      double gn = 0.0;
      for (int i = 0; i < nf; ++i)
        gn = std::max(gn, std::abs(gg[sc.free_idx[i]] * sc.width[sc.free_idx[i]]));
      sc.g_scale[j] = 1.0 / std::max({gv, gn, 1e-12});
    }
    const Eigen::VectorXd fg = problem.objective_gradient(x0);
    double fn = 0.0;
    for (int i = 0; i < nf; ++i)
      fn = std::max(fn, std::abs(fg[sc.free_idx[i]] * sc.width[sc.free_idx[i]]));
    sc.f_scale = 1.0 / std::max({std::abs(problem.objective(x0)), fn, 1.0});
  }

  if (nf == 0) {
    // Everything pinned; just report the point.
    const Eigen::VectorXd x = sc.to_x(z);
    for (const auto& c : problem.constraints)
      if (c.value(x) > 0.0) return sol;  // Infeasible
    sol.status = SmoothStatus::Optimal;
    sol.x = x;
    sol.value = problem.objective(x);
    return sol;
  }

  if (!sc.strictly_feasible(z)) {
    bool ok = false;
    for (double pull : {0.9, 0.7, 0.5, 0.25, 0.1, 0.0}) {
      Eigen::VectorXd zc = Eigen::VectorXd::Constant(nf, 0.5) +
                           pull * (z - Eigen::VectorXd::Constant(nf, 0.5));
      if (sc.strictly_feasible(zc)) {
        z = zc;
        ok = true;
        break;
      }
    }
    if (!ok) return sol;  // Infeasible
  }

  const double m_total = static_cast<double>(problem.constraints.size()) + 2.0 * nf;
  Barrier barrier{&sc, 1.0};
  int newton_total = 0;

  for (int stage = 0; stage < settings.max_stages; ++stage) {
    for (int it = 0; it < settings.max_newton_per_stage; ++it) {
      bool ok = false;
      const Eigen::VectorXd grad = barrier.gradient(z, &ok);
      if (!ok) break;
      Eigen::MatrixXd hess = barrier.hessian(z);
      Eigen::VectorXd step;
      double damping = 0.0;
      for (int tries = 0; tries < 60; ++tries) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(
            hess + damping * Eigen::MatrixXd::Identity(nf, nf));
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          step = ldlt.solve(-grad);
          if (step.allFinite() && grad.dot(step) < 0.0) break;
        }
        damping = damping == 0.0 ? 1e-10 : damping * 10.0;
        step.resize(0);
      }
      if (step.size() == 0) break;

      const double decrement = -grad.dot(step);
      ++newton_total;
      double alpha = 1.0;
      bool vok = false;
      const double v0 = barrier.value(z, &vok);
      bool moved = false;
      for (int bt = 0; bt < 70; ++bt) {
        const Eigen::VectorXd zn = z + alpha * step;
        bool okn = false;
        const double vn = barrier.value(zn, &okn);
        if (okn && vn <= v0 - 0.25 * alpha * decrement) {
          z = zn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved || decrement < 1e-15 * (1.0 + std::abs(v0)) ||
          alpha * step.lpNorm<Eigen::Infinity>() < 1e-15)
        break;
    }
    if (m_total / barrier.t < 1e-8) break;
    barrier.t *= settings.barrier_growth;
  }

  sol.status = SmoothStatus::Optimal;
  sol.x = sc.to_x(z);
  sol.value = problem.objective(sol.x);

  // KKT residual with least-squares-fitted multipliers on the near-active
  // set. The raw barrier gradient is useless here: at a box-saturated
  // center its sensitivity to one ulp of z exceeds any sane tolerance.
  {
    const Eigen::VectorXd fg = sc.fhat_grad(z);
    std::vector<Eigen::VectorXd> cols;
    std::vector<double> slack;  // |g| or distance to the bound
    for (std::size_t j = 0; j < problem.constraints.size(); ++j) {
      const double gj = sc.ghat(static_cast<int>(j), z);
      if (gj >= -1e-4) {
        cols.push_back(sc.ghat_grad(static_cast<int>(j), z));
        slack.push_back(std::abs(gj));
      }
    }
    for (int i = 0; i < nf; ++i) {
      if (z[i] <= 1e-6) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nf);
        e[i] = -1.0;
        cols.push_back(e);
        slack.push_back(z[i]);
      } else if (z[i] >= 1.0 - 1e-6) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nf);
        e[i] = 1.0;
        cols.push_back(e);
        slack.push_back(1.0 - z[i]);
      }
    }
    double stationarity = fg.lpNorm<Eigen::Infinity>();
    double complementarity = 0.0;
    if (!cols.empty()) {
      std::vector<int> support(cols.size());
      for (std::size_t k = 0; k < cols.size(); ++k) support[k] = 1;
      Eigen::VectorXd lambda;
      for (int round = 0; round < 10; ++round) {
        std::vector<int> idx;
        for (std::size_t k = 0; k < cols.size(); ++k)
          if (support[k]) idx.push_back(static_cast<int>(k));
        if (idx.empty()) break;
        Eigen::MatrixXd a(nf, idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) a.col(k) = cols[idx[k]];
        Eigen::MatrixXd normal = a.transpose() * a;
        normal.diagonal().array() += 1e-12;
        lambda = normal.ldlt().solve(a.transpose() * fg);
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k)
          if (lambda[k] < 0.0) {
            support[idx[k]] = 0;
            clipped = true;
          }
        if (!clipped) {
          const Eigen::VectorXd r = fg - a * lambda;
          stationarity = r.lpNorm<Eigen::Infinity>();
          for (std::size_t k = 0; k < idx.size(); ++k)
            complementarity =
                std::max(complementarity, lambda[k] * slack[idx[k]]);
          break;
        }
      }
    }
    sol.kkt_residual =
        std::max({stationarity, complementarity, m_total / barrier.t});
  }
  sol.newton_steps = newton_total;
  return sol;
}

}  // namespace starmec
