#include "starmec/sca.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "starmec/rng.hpp"

namespace starmec {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLog2E = 1.4426950408889634074;
constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::MatrixXcd symmetrized(const Eigen::MatrixXcd& v) {
  return 0.5 * (v + v.adjoint());
}

double re_inner(const Eigen::MatrixXcd& f, const Eigen::MatrixXcd& v) {
  return (f.conjugate().cwiseProduct(v)).sum().real();
}

}  // namespace

AffineBound taylor_R(const Eigen::VectorXd& p_current,
                     const Eigen::VectorXd& gains, int ue, double sigma2,
                     const std::vector<int>& group) {
  const int n = static_cast<int>(p_current.size());
  double s = sigma2;
  for (int j = 0; j < n; ++j)
    if (j != ue && group[j] == group[ue]) s += p_current[j] * gains[j];
  AffineBound b;
  b.base_point = p_current;
  b.constant = std::log2(s);
  b.gradient = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    if (j != ue && group[j] == group[ue]) b.gradient[j] = gains[j] / (kLn2 * s);
  return b;
}

HatRBound hatR_bound(double a0, double b0) {
  if (!(a0 > 0.0) || !(b0 > 0.0))
    throw std::domain_error("hatR_bound needs positive base point");
  HatRBound h;
  h.a0 = a0;
  h.b0 = b0;
  const double prod = a0 * b0;
  h.constant = std::log2(1.0 + 1.0 / prod);
  h.coeff_a = -kLog2E / (a0 * (1.0 + prod));
  h.coeff_b = -kLog2E / (b0 * (1.0 + prod));
  return h;
}

double RankLinearization::gamma(const Eigen::MatrixXcd& v) const {
  return offset + re_inner(uu, v);
}

double RankLinearization::residual(const Eigen::MatrixXcd& v) const {
  return v.real().trace() - gamma(v);
}

RankLinearization rank_linearization(const Eigen::MatrixXcd& v_prev) {
  const auto [lambda, u] = leading_eig(v_prev);
  RankLinearization r;
  r.uu = u * u.adjoint();
  r.offset = lambda - re_inner(r.uu, v_prev);
  return r;
}

BinarySurrogate ms_penalty_bound(double beta_current) {
  return {2.0 * beta_current - 1.0, -beta_current * beta_current};
}

// ---------------------------------------------------------------------------
// Resource allocation subproblem
// ---------------------------------------------------------------------------

double ResourceProblem::objective(const Eigen::VectorXd& p,
                                  const Eigen::VectorXd& f) const {
  const int n = static_cast<int>(p.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = offload_window_s[i];
    if (w > 0.0 && p[i] > 0.0 && gains[i] > 0.0) {
      double interference = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i && group[j] == group[i]) interference += p[j] * gains[j];
      total += w * bandwidth_hz *
               std::log2(1.0 + p[i] * gains[i] / (interference + sigma2));
    }
    if (local_window_s > 0.0) total += f[i] * local_window_s / cycles_per_bit[i];
  }
  return total;
}

ResourceResult solve_resource(const ResourceProblem& problem,
                              const Eigen::VectorXd& p0,
                              const Eigen::VectorXd& f0, double epsilon_rel,
                              const SmoothSettings& smooth, int max_passes) {
  const int n = static_cast<int>(problem.gains.size());
  ResourceResult out;
  out.p = Eigen::VectorXd::Zero(n);
  out.f = Eigen::VectorXd::Zero(n);

  const double wloc = problem.local_window_s;
  std::vector<bool> can_offload(n), can_compute(n);
  bool any_active = false;
  for (int i = 0; i < n; ++i) {
    const double e = problem.energy_budget_j[i];
    can_offload[i] = problem.offload_window_s[i] > 0.0 && e > 0.0 &&
                     problem.gains[i] > 0.0;
    can_compute[i] = e > 0.0 && wloc > 0.0;
    any_active = any_active || can_offload[i] || can_compute[i];
  }
  if (!any_active) {
    out.objective = 0.0;
    out.trace = {0.0};
    return out;
  }

  // Boxes tightened to what the energy budget allows; this keeps the
  // barrier well scaled when F_max is far above reach.
  Eigen::VectorXd p_hi = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f_hi = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double e = problem.energy_budget_j[i];
    if (can_offload[i])
      p_hi[i] = std::min(problem.p_max, e / problem.offload_window_s[i]);
    if (can_compute[i])
      f_hi[i] = std::min(problem.f_max, std::cbrt(e / (problem.kappa * wloc)));
  }

  Eigen::VectorXd p = p0.size() == n ? p0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = f0.size() == n ? f0 : Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    p[i] = std::min(std::max(p[i], 0.0), p_hi[i]);
    f[i] = std::min(std::max(f[i], 0.0), f_hi[i]);
    if (p[i] <= 0.0) p[i] = 0.25 * p_hi[i];
    if (f[i] <= 0.0) f[i] = 0.25 * f_hi[i];
  }
  // Pull strictly inside the energy constraint.
  for (int i = 0; i < n; ++i) {
    const double e = problem.energy_budget_j[i];
    if (e <= 0.0) continue;
    for (int guard = 0; guard < 200; ++guard) {
      const double cons = problem.kappa * wloc * f[i] * f[i] * f[i] +
                          p[i] * problem.offload_window_s[i];
      if (cons < e * (1.0 - 1e-6)) break;
      p[i] *= 0.7;
      f[i] *= 0.7;
    }
  }

  double l_prev = problem.objective(p, f);
  for (int pass = 0; pass < max_passes; ++pass) {
    std::vector<AffineBound> bounds(n);
    for (int i = 0; i < n; ++i)
      bounds[i] = taylor_R(p, problem.gains, i, problem.sigma2, problem.group);

    SmoothConcaveProblem sp;
    sp.lower = Eigen::VectorXd::Zero(2 * n);
    sp.upper.resize(2 * n);
    sp.upper.head(n) = p_hi;
    sp.upper.tail(n) = f_hi;

    sp.objective = [&, bounds](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = problem.offload_window_s[i];
        if (w > 0.0) {
          double s = problem.sigma2;
          for (int j = 0; j < n; ++j)
            if (problem.group[j] == problem.group[i])
              s += x[j] * problem.gains[j];
          v += w * problem.bandwidth_hz *
               (std::log2(s) - bounds[i].value(x.head(n)));
        }
        if (wloc > 0.0) v += x[n + i] * wloc / problem.cycles_per_bit[i];
      }
      return v;
    };
    sp.objective_gradient = [&, bounds](const Eigen::VectorXd& x) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n);
      for (int i = 0; i < n; ++i) {
        const double w = problem.offload_window_s[i];
        if (w > 0.0) {
          double s = problem.sigma2;
          for (int j = 0; j < n; ++j)
            if (problem.group[j] == problem.group[i])
              s += x[j] * problem.gains[j];
          const double wb = w * problem.bandwidth_hz;
          for (int j = 0; j < n; ++j) {
            if (problem.group[j] == problem.group[i])
              g[j] += wb * problem.gains[j] / (kLn2 * s);
            g[j] -= wb * bounds[i].gradient[j];
          }
        }
        if (wloc > 0.0) g[n + i] += wloc / problem.cycles_per_bit[i];
      }
      return g;
    };
    for (int i = 0; i < n; ++i) {
      const double e = problem.energy_budget_j[i];
      if (e <= 0.0) continue;
      SmoothConcaveProblem::Constraint c;
      const double wi = problem.offload_window_s[i];
      c.value = [&, i, e, wi](const Eigen::VectorXd& x) {
        return problem.kappa * wloc * x[n + i] * x[n + i] * x[n + i] +
               x[i] * wi - e;
      };
      c.gradient = [&, i, wi](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n);
        g[i] = wi;
        g[n + i] = 3.0 * problem.kappa * wloc * x[n + i] * x[n + i];
        return g;
      };
      sp.constraints.push_back(std::move(c));
    }

    Eigen::VectorXd x0(2 * n);
    x0.head(n) = p;
    x0.tail(n) = f;
    const SmoothSolution sol = solve_smooth(sp, x0, smooth);
    if (sol.status == SmoothStatus::Infeasible) {
      out.feasible = false;
      break;
    }
    p = sol.x.head(n);
    f = sol.x.tail(n);
    const double l = problem.objective(p, f);
    out.trace.push_back(l);
    if (std::abs(l - l_prev) <= epsilon_rel * std::max(1.0, std::abs(l))) {
      l_prev = l;
      break;
    }
    l_prev = l;
  }

  out.p = p;
  out.f = f;
  out.objective = l_prev;
  if (out.trace.empty()) out.trace.push_back(l_prev);
  return out;
}

// ---------------------------------------------------------------------------
// Coefficient-matrix subproblem
// ---------------------------------------------------------------------------

namespace {

// Blocks in the SDP, fixed order.
constexpr int kBlockDr = 0;
constexpr int kBlockDt = 1;
constexpr int kBlockUr = 2;
constexpr int kBlockUt = 3;

int uplink_block(Side s) {
  return s == Side::Reflection ? kBlockUr : kBlockUt;
}
int downlink_block(Side s) {
  return s == Side::Reflection ? kBlockDr : kBlockDt;
}

Eigen::MatrixXcd unit_diag_mat(int m, int e) {
  Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(m, m);
  f(e, e) = 1.0;
  return f;
}

struct CoeffState {
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> v;
  std::vector<int> active;  // UEs carrying A/B scalars
};

double consumed_energy(const CoeffProblem& cp, int i) {
  const double wloc = cp.params->period_s - cp.tau0;
  const double e_loc =
      wloc > 0.0 ? cp.params->kappa * wloc * std::pow(cp.f[i], 3) : 0.0;
  return e_loc + cp.p[i] * std::max(cp.offload_window_s[i], 0.0);
}

}  // namespace

double relaxed_offload_bits(
    const CoeffProblem& cp,
    const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v) {
  const int n = static_cast<int>(cp.sides.size());
  auto gain = [&](int i) {
    const Eigen::MatrixXcd& blk =
        v[static_cast<int>(Direction::Up)][static_cast<int>(mode_of(cp.sides[i]))];
    return std::max(re_inner(cp.cascades->h_up[i], blk), 0.0);
  };
  double bits = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = cp.offload_window_s[i];
    if (w <= 0.0 || cp.p[i] <= 0.0) continue;
    double interference = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i && cp.group[j] == cp.group[i])
        interference += cp.p[j] * gain(j);
    bits += w * cp.params->bandwidth_hz *
            std::log2(1.0 + cp.p[i] * gain(i) /
                                (interference + cp.params->noise_power_w));
  }
  return bits;
}

CoeffResult solve_coeff_step(const CoeffProblem& cp,
                             const StarCoefficients& start,
                             const PenaltySettings& penalty,
                             const SdpSettings& sdp_settings,
                             double epsilon_rel, int max_passes,
                             SdpWarmState* warm) {
  const SystemParams& params = *cp.params;
  const int m = params.num_elements;
  const int n = static_cast<int>(cp.sides.size());
  const double harvest_rate = params.eta * cp.tau0 * params.ap_power_w;

  CoeffResult out;
  out.v = lift_coefficients(start).v;
  out.extracted = start;

  // Nothing to shape: no energy flows and no offload windows.
  double cascade_power = 0.0;
  for (int i = 0; i < n; ++i)
    cascade_power += cp.cascades->up[i].squaredNorm() +
                     cp.cascades->down[i].squaredNorm();
  if (cascade_power <= 0.0 || (harvest_rate <= 0.0 && cp.p.maxCoeff() <= 0.0)) {
    out.relaxed_offload_bits = relaxed_offload_bits(cp, out.v);
    out.max_rank_residual_rel = max_rank_residual(out.v);
    return out;
  }

  // Penalty weight balancing joules against bits.
  double l_now = std::max(relaxed_offload_bits(cp, out.v), 1.0);
  double energy_scale = 1e-30;
  for (int i = 0; i < n; ++i) {
    energy_scale = std::max(energy_scale, consumed_energy(cp, i));
    energy_scale = std::max(
        energy_scale, harvest_rate * std::abs(re_inner(cp.cascades->g_down[i],
                                                       out.v[0][0] + out.v[0][1])));
  }
  double mu = penalty.mu >= 0.0 ? penalty.mu : 10.0 * l_now / energy_scale;
  double nu = penalty.nu >= 0.0 ? penalty.nu : 0.5 * l_now / std::max(m, 1);

  SdpWarmState local_warm;
  if (!warm) warm = &local_warm;

  // Progress across SCA passes is tracked per objective component; offload
  // alone reads zero whenever transmit powers are negligible (the downlink
  // would stop half-shaped), while a mixed sum lets the large harvest term
  // swallow genuine offload progress.
  struct Tracked {
    double offload = 0.0;
    double harvest = 0.0;
  };
  auto tracked_objective = [&](const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v) {
    Tracked t;
    t.offload = relaxed_offload_bits(cp, v);
    if (harvest_rate > 0.0)
      for (int i = 0; i < n; ++i)
        t.harvest += harvest_rate *
                     std::max(re_inner(cp.cascades->g_down[i],
                                       v[0][static_cast<int>(mode_of(cp.sides[i]))]),
                              0.0);
    return t;
  };
  auto stalled = [](const Tracked& now, const Tracked& prev, double tol) {
    return std::abs(now.offload - prev.offload) <=
               tol * std::max(1.0, std::abs(now.offload)) &&
           std::abs(now.harvest - prev.harvest) <=
               tol * std::max(now.harvest, 1e-300);
  };

  auto build_and_solve = [&](double eps_rel_rank) {
    // Linearization data from the current lift.
    std::array<RankLinearization, 4> rank_lin;
    std::array<double, 4> trace_l{};
    const Eigen::MatrixXcd* blocks[4] = {&out.v[0][0], &out.v[0][1],
                                         &out.v[1][0], &out.v[1][1]};
    for (int b = 0; b < 4; ++b) {
      rank_lin[b] = rank_linearization(*blocks[b]);
      trace_l[b] = blocks[b]->real().trace();
    }

    // Active offload UEs and their surrogate base points.
    std::vector<int> active;
    std::vector<double> a0, b0;
    for (int i = 0; i < n; ++i) {
      if (cp.offload_window_s[i] <= 0.0 || cp.p[i] <= 0.0) continue;
      const double x0 =
          cp.p[i] * std::max(re_inner(cp.cascades->h_up[i],
                                      *blocks[uplink_block(cp.sides[i])]),
                             0.0);
      if (x0 <= 1e-20) continue;
      double interference = params.noise_power_w;
      for (int j = 0; j < n; ++j)
        if (j != i && cp.group[j] == cp.group[i])
          interference += cp.p[j] * std::max(re_inner(cp.cascades->h_up[j],
                                                      *blocks[uplink_block(cp.sides[j])]),
                                             0.0);
      active.push_back(i);
      a0.push_back(1.0 / x0);
      b0.push_back(interference);
    }

    SdpProblem prob;
    prob.block_dims = {m, m, m, m};
    prob.num_scalars = 2 * static_cast<int>(active.size());

    // The auxiliary scalars enter in units of their base point (A = a0 Ahat,
    // B = b0 Bhat), so every row the solver sees is O(1) regardless of how
    // small the noise floor is.
    std::array<Eigen::MatrixXcd, 4> obj_mat;
    for (auto& f : obj_mat) f = Eigen::MatrixXcd::Zero(m, m);
    double obj_const = 0.0;
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int i = active[t];
      const double wb = cp.offload_window_s[i] * params.bandwidth_hz;
      const HatRBound h = hatR_bound(a0[t], b0[t]);
      prob.objective.add_scalar(2 * static_cast<int>(t), wb * h.coeff_a * a0[t]);
      prob.objective.add_scalar(2 * static_cast<int>(t) + 1,
                                wb * h.coeff_b * b0[t]);
      obj_const += wb * (h.constant - h.coeff_a * h.a0 - h.coeff_b * h.b0);
    }
    for (int i = 0; i < n; ++i) {
      obj_mat[downlink_block(cp.sides[i])] +=
          mu * harvest_rate * cp.cascades->g_down[i];
      obj_const -= mu * consumed_energy(cp, i);
    }
    if (cp.ms_penalty) {
      for (int k = 0; k < 2; ++k) {
        const int blk = k == 0 ? kBlockUr : kBlockUt;
        for (int e = 0; e < m; ++e) {
          const double beta_l =
              std::clamp((*blocks[blk])(e, e).real(), 0.0, 1.0);
          const BinarySurrogate s = ms_penalty_bound(beta_l);
          obj_mat[blk](e, e) += nu * s.slope;
          obj_const += nu * s.constant;
        }
      }
    }
    for (int b = 0; b < 4; ++b)
      if (obj_mat[b].cwiseAbs().maxCoeff() > 0.0)
        prob.objective.add_mat(b, obj_mat[b]);
    prob.objective.constant = obj_const;

    // Surface structure rows.
    for (int e = 0; e < m; ++e) {
      for (int dir = 0; dir < 2; ++dir) {
        const int br = dir == 0 ? kBlockDr : kBlockUr;
        const int bt = dir == 0 ? kBlockDt : kBlockUt;
        if (dir == 1 && cp.structure.uplink_unit_amplitude) {
          for (int blk : {br, bt}) {
            SdpProblem::Constraint c;
            c.expr.add_mat(blk, unit_diag_mat(m, e));
            c.expr.constant = -1.0;
            c.equality = true;
            prob.constraints.push_back(std::move(c));
          }
          continue;
        }
        SdpProblem::Constraint c;
        c.expr.add_mat(br, unit_diag_mat(m, e));
        c.expr.add_mat(bt, unit_diag_mat(m, e));
        c.expr.constant = -1.0;
        c.equality = true;
        prob.constraints.push_back(std::move(c));
        int pin = cp.structure.pin[e];
        if (dir == 1 && !cp.structure.uplink_pin.empty() &&
            cp.structure.uplink_pin[e] >= 0)
          pin = cp.structure.uplink_pin[e];
        if (pin >= 0) {
          SdpProblem::Constraint z;
          z.expr.add_mat(pin == 0 ? bt : br, unit_diag_mat(m, e));
          z.equality = true;
          prob.constraints.push_back(std::move(z));
        }
      }
    }

    // Per-UE energy coverage (kept as hard rows; the objective pushes the
    // harvested side up, these keep the current allocation chargeable).
    if (harvest_rate > 0.0) {
      for (int i = 0; i < n; ++i) {
        SdpProblem::Constraint c;
        c.expr.add_mat(downlink_block(cp.sides[i]),
                       -harvest_rate * cp.cascades->g_down[i]);
        c.expr.constant = consumed_energy(cp, i);
        prob.constraints.push_back(std::move(c));
      }
    }

    // Interference bound B_i (in b0 units) and the inverse-SINR coupling
    // block for A_i. [[x a0, 1], [1, Ahat]] puts both diagonals at 1 at the
    // base point; the PSD condition x A >= 1 is invariant to that scaling.
    for (std::size_t t = 0; t < active.size(); ++t) {
      const int i = active[t];
      SdpProblem::Constraint c;
      for (int j = 0; j < n; ++j)
        if (j != i && cp.group[j] == cp.group[i] && cp.p[j] > 0.0)
          c.expr.add_mat(uplink_block(cp.sides[j]),
                         cp.p[j] / b0[t] * cp.cascades->h_up[j]);
      c.expr.add_scalar(2 * static_cast<int>(t) + 1, -1.0);
      c.expr.constant = params.noise_power_w / b0[t];
      prob.constraints.push_back(std::move(c));

      SdpProblem::Psd2 p2;
      p2.x.add_mat(uplink_block(cp.sides[i]),
                   a0[t] * cp.p[i] * cp.cascades->h_up[i]);
      p2.y.add_scalar(2 * static_cast<int>(t), 1.0);
      prob.psd2.push_back(std::move(p2));
    }

    // Rank-one surrogate rows: Tr(V) - gamma(V) <= eps.
    for (int b = 0; b < 4; ++b) {
      SdpProblem::Constraint c;
      Eigen::MatrixXcd f = Eigen::MatrixXcd::Identity(m, m) - rank_lin[b].uu;
      c.expr.add_mat(b, std::move(f));
      c.expr.constant =
          -rank_lin[b].offset - eps_rel_rank * std::max(trace_l[b], 1e-12);
      prob.constraints.push_back(std::move(c));
    }

    SdpSolution sol = solve_sdp(prob, sdp_settings, warm);
    return sol;
  };

  int nu_escalations = 0;
  int mu_escalations = 0;
  int total_passes = 0;
  bool sdp_ok = true;
  while (true) {
    double eps_rel_rank = penalty.rank_eps_start;
    Tracked l_prev = tracked_objective(out.v);
    for (int pass = 0; pass < max_passes; ++pass) {
      ++total_passes;
      SdpSolution sol = build_and_solve(eps_rel_rank);
      sdp_ok = sdp_ok && sol.status == SdpStatus::Converged;
      if (sol.blocks.size() == 4) {
        out.v[0][0] = symmetrized(sol.blocks[kBlockDr]);
        out.v[0][1] = symmetrized(sol.blocks[kBlockDt]);
        out.v[1][0] = symmetrized(sol.blocks[kBlockUr]);
        out.v[1][1] = symmetrized(sol.blocks[kBlockUt]);
      }
      const Tracked l_rel = tracked_objective(out.v);
      if (std::getenv("STARMEC_DEBUG"))
        std::fprintf(stderr, "pass %d eps %.2e off %.6e harv %.3e rank %.2e sdp_iter %d conv %d\n",
                     pass, eps_rel_rank, l_rel.offload, l_rel.harvest,
                     max_rank_residual(out.v), sol.iterations,
                     sol.status == SdpStatus::Converged);
      // The rank trust region tightens only once progress at the current
      // level slows; a fixed schedule freezes the dominant direction
      // before it can rotate to the optimum.
      const bool at_final = eps_rel_rank <= penalty.rank_eps * (1.0 + 1e-12);
      const double shrink_tol = std::max(epsilon_rel, 3e-3);
      if (at_final && stalled(l_rel, l_prev, epsilon_rel)) {
        l_prev = l_rel;
        break;
      }
      if (!at_final && stalled(l_rel, l_prev, shrink_tol))
        eps_rel_rank = std::max(penalty.rank_eps,
                                eps_rel_rank * penalty.rank_decay);
      l_prev = l_rel;
    }
    // The extraction below expects a near-rank-one iterate; make sure the
    // last solve ran at the final trust-region level.
    if (eps_rel_rank > penalty.rank_eps * (1.0 + 1e-12)) {
      ++total_passes;
      SdpSolution sol = build_and_solve(penalty.rank_eps);
      sdp_ok = sdp_ok && sol.status == SdpStatus::Converged;
      if (sol.blocks.size() == 4) {
        out.v[0][0] = symmetrized(sol.blocks[kBlockDr]);
        out.v[0][1] = symmetrized(sol.blocks[kBlockDt]);
        out.v[1][0] = symmetrized(sol.blocks[kBlockUr]);
        out.v[1][1] = symmetrized(sol.blocks[kBlockUt]);
      }
    }

    out.extracted = extract_coefficients(out.v, cp.structure);

    if (cp.ms_penalty) {
      double worst = 0.0;
      const auto& br = out.extracted.betas(Direction::Up, Mode::Reflect);
      for (int e = 0; e < m; ++e)
        worst = std::max(worst, std::min(br[e], 1.0 - br[e]));
      if (worst > penalty.binariness_tol &&
          nu_escalations < penalty.nu_escalations) {
        nu *= penalty.growth;
        ++nu_escalations;
        continue;
      }
    }

    // Energy coverage of the extracted downlink; escalate mu if violated.
    if (harvest_rate > 0.0) {
      const LiftedCoefficients ext = lift_coefficients(out.extracted);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const double harvested =
            harvest_rate *
            std::max(re_inner(cp.cascades->g_down[i],
                              ext.v[0][static_cast<int>(mode_of(cp.sides[i]))]),
                     0.0);
        const double cons = consumed_energy(cp, i);
        worst = std::max(worst, (cons - harvested) / std::max(harvested, 1e-30));
      }
      if (worst > 1e-3 && mu_escalations < penalty.mu_escalations) {
        mu *= penalty.growth;
        ++mu_escalations;
        continue;
      }
    }
    break;
  }

  // Discrete mode-pattern refinement. The MS uplink must end binary; for
  // the unconstrained step binary splits are feasible too and reach the
  // interference-suppressing extremes that a balanced fractional optimum
  // hides, so the winners are kept when they beat the continuous point.
  bool free_structure = !cp.ms_penalty && !cp.structure.uplink_unit_amplitude;
  if (free_structure)
    for (int e = 0; e < m; ++e)
      if (cp.structure.pin[e] >= 0 ||
          (!cp.structure.uplink_pin.empty() && cp.structure.uplink_pin[e] >= 0))
        free_structure = false;

  if ((cp.ms_penalty || free_structure) && m <= 30) {
    auto& br = out.extracted.betas(Direction::Up, Mode::Reflect);
    auto& bt = out.extracted.betas(Direction::Up, Mode::Transmit);
    int k_r = 0, k_t = 0;
    for (Side s : cp.sides) (s == Side::Reflection ? k_r : k_t) += 1;
    const bool lone_sides = k_r <= 1 && k_t <= 1;

    auto pattern_total = [&](unsigned mask) {
      // Per-UE gain under the mask; with one UE per side the phases align
      // analytically, otherwise the extracted phases are kept.
      Eigen::VectorXd gain(n);
      for (int i = 0; i < n; ++i) {
        const Mode k = mode_of(cp.sides[i]);
        std::complex<double> sum = 0.0;
        double mag = 0.0;
        for (int e = 0; e < m; ++e) {
          const bool reflect_elem = (mask & (1u << e)) != 0;
          if ((k == Mode::Reflect) != reflect_elem) continue;
          const double th = out.extracted.thetas(Direction::Up, k)[e];
          sum += std::polar(1.0, th) * cp.cascades->up[i][e];
          mag += std::abs(cp.cascades->up[i][e]);
        }
        gain[i] = lone_sides ? mag * mag : std::norm(sum);
      }
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = cp.offload_window_s[i];
        if (w <= 0.0 || cp.p[i] <= 0.0) continue;
        double interference = params.noise_power_w;
        for (int j = 0; j < n; ++j)
          if (j != i && cp.group[j] == cp.group[i])
            interference += cp.p[j] * gain[j];
        total += w * params.bandwidth_hz *
                 std::log2(1.0 + cp.p[i] * gain[i] / interference);
      }
      return total;
    };

    unsigned mask = 0;
    for (int e = 0; e < m; ++e)
      if (br[e] >= 0.5) mask |= 1u << e;
    double best_total = pattern_total(mask);
    for (int sweep = 0; sweep < m; ++sweep) {
      bool improved = false;
      std::vector<unsigned> candidates;
      for (int e = 0; e < m; ++e) candidates.push_back(mask ^ (1u << e));
      candidates.push_back(0u);
      candidates.push_back((1u << m) - 1u);
      for (unsigned cand : candidates) {
        const double v = pattern_total(cand);
        if (v > best_total * (1.0 + 1e-12)) {
          best_total = v;
          mask = cand;
          improved = true;
        }
      }
      if (!improved) break;
    }

    const double continuous_off =
        relaxed_offload_bits(cp, lift_coefficients(out.extracted).v);
    const bool worth_trying =
        cp.ms_penalty || best_total > continuous_off * 1.005;
    if (worth_trying) {
      CoeffProblem polish = cp;
      polish.ms_penalty = false;
      polish.structure.uplink_pin.assign(m, -1);
      StarCoefficients pinned = out.extracted;
      for (int e = 0; e < m; ++e) {
        const bool reflect = (mask & (1u << e)) != 0;
        pinned.betas(Direction::Up, Mode::Reflect)[e] = reflect ? 1.0 : 0.0;
        pinned.betas(Direction::Up, Mode::Transmit)[e] = reflect ? 0.0 : 1.0;
        polish.structure.uplink_pin[e] = reflect ? 0 : 1;
      }
      PenaltySettings polish_penalty = penalty;
      polish_penalty.mu = mu;
      const CoeffResult refined =
          solve_coeff_step(polish, pinned, polish_penalty, sdp_settings,
                           epsilon_rel, std::max(4, max_passes / 2));
      const double rounded_off =
          relaxed_offload_bits(cp, lift_coefficients(pinned).v);
      const double refined_off =
          relaxed_offload_bits(cp, lift_coefficients(refined.extracted).v);
      const bool refined_wins = refined_off >= rounded_off;
      if (cp.ms_penalty || std::max(refined_off, rounded_off) > continuous_off) {
        if (refined_wins) {
          out.extracted = refined.extracted;
          out.v = refined.v;
        } else {
          out.extracted = pinned;
          out.v = lift_coefficients(pinned).v;
        }
      }
    } else if (cp.ms_penalty) {
      for (int e = 0; e < m; ++e) {
        const bool reflect = (mask & (1u << e)) != 0;
        br[e] = reflect ? 1.0 : 0.0;
        bt[e] = reflect ? 0.0 : 1.0;
      }
    }
    out.nu_used = nu;
  }

  out.relaxed_offload_bits = relaxed_offload_bits(cp, out.v);
  out.max_rank_residual_rel = max_rank_residual(out.v);
  out.sca_passes = total_passes;
  out.sdp_converged = sdp_ok;
  out.mu_used = mu;
  out.nu_used = nu;
  return out;
}

// ---------------------------------------------------------------------------
// Alternation driver for the ES-family protocols
// ---------------------------------------------------------------------------

StarCoefficients init_coefficients(int m, const CoeffStructure& structure,
                                   std::uint64_t seed) {
  StarCoefficients c = StarCoefficients::uniform(m, 0.5);
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 2; ++k) {
      rng::Stream stream(rng::derive_key(seed, 40 + 2 * n + k));
      for (int e = 0; e < m; ++e)
        c.theta[n][k][e] = kTwoPi * stream.uniform01() * (1.0 - 1e-12);
    }
  for (int e = 0; e < m; ++e) {
    if (structure.pin[e] == 0) {
      for (int n = 0; n < 2; ++n) {
        c.beta[n][0][e] = 1.0;
        c.beta[n][1][e] = 0.0;
      }
    } else if (structure.pin[e] == 1) {
      for (int n = 0; n < 2; ++n) {
        c.beta[n][0][e] = 0.0;
        c.beta[n][1][e] = 1.0;
      }
    }
  }
  if (structure.uplink_unit_amplitude)
    for (int e = 0; e < m; ++e) {
      c.beta[1][0][e] = 1.0;
      c.beta[1][1][e] = 1.0;
    }
  return c;
}

namespace {

Eigen::VectorXd uplink_gains(const SystemParams& params,
                             const ChannelSet& channels,
                             const StarCoefficients& coeffs) {
  Eigen::VectorXd g(params.num_ues);
  for (int i = 0; i < params.num_ues; ++i)
    g[i] = std::norm(compose_channel(channels, coeffs, i, Direction::Up));
  return g;
}

Eigen::VectorXd harvested_energies(const SystemParams& params,
                                   const ChannelSet& channels,
                                   const StarCoefficients& coeffs,
                                   double tau0) {
  Eigen::VectorXd e(params.num_ues);
  for (int i = 0; i < params.num_ues; ++i)
    e[i] = harvested_energy(params, channels, coeffs, tau0, i);
  return e;
}

// Consumption of the current allocation, used to vet a downlink update.
Eigen::VectorXd consumptions(const SystemParams& params,
                             const AllocationState& alloc, Protocol protocol,
                             const ChannelSet& channels) {
  Eigen::VectorXd c(params.num_ues);
  for (int i = 0; i < params.num_ues; ++i) {
    const auto [bits, e_loc] = local_bits_and_energy(params, alloc, i);
    const double w =
        alloc.offload_window(protocol, channels.sides[i], params.period_s);
    c[i] = e_loc + alloc.p[i] * std::max(w, 0.0);
  }
  return c;
}

double total_offload(const SystemParams& params, const ChannelSet& channels,
                     const StarCoefficients& coeffs,
                     const AllocationState& alloc, Protocol protocol) {
  double v = 0.0;
  for (int i = 0; i < params.num_ues; ++i)
    v += offload_bits(params, channels, coeffs, alloc, protocol, i);
  return v;
}

}  // namespace

void accept_coefficients(const SystemParams& params,
                                const ChannelSet& channels, Protocol protocol,
                                const AllocationState& alloc,
                                StarCoefficients& coeffs,
                                const StarCoefficients& candidate) {
  const Protocol eval_protocol =
      protocol == Protocol::ConventionalRis ? Protocol::Es : protocol;

  StarCoefficients hybrid = coeffs;
  hybrid.beta[1] = candidate.beta[1];
  hybrid.theta[1] = candidate.theta[1];
  const double off_old =
      total_offload(params, channels, coeffs, alloc, eval_protocol);
  const double off_new =
      total_offload(params, channels, hybrid, alloc, eval_protocol);
  if (off_new >= off_old * (1.0 - 1e-12) - 1e-9) {
    coeffs.beta[1] = candidate.beta[1];
    coeffs.theta[1] = candidate.theta[1];
  }

  StarCoefficients down = coeffs;
  down.beta[0] = candidate.beta[0];
  down.theta[0] = candidate.theta[0];
  const Eigen::VectorXd cons = consumptions(params, alloc, eval_protocol, channels);
  bool covers = true;
  for (int i = 0; i < params.num_ues; ++i) {
    const double e = harvested_energy(params, channels, down, alloc.tau0, i);
    if (e < cons[i] * (1.0 - 1e-12)) {
      covers = false;
      break;
    }
  }
  if (covers) {
    coeffs.beta[0] = candidate.beta[0];
    coeffs.theta[0] = candidate.theta[0];
  }
}

SolveReport alternate_fixed_tau0(const SystemParams& params,
                                 const ChannelSet& channels, Protocol protocol,
                                 double tau0, const SolveOptions& opts) {
  if (protocol == Protocol::Ts)
    throw std::invalid_argument("TS uses its own driver");
  if (!(tau0 > 0.0) || !(tau0 < params.period_s))
    throw std::invalid_argument("tau0 must lie strictly inside (0, T)");
  const int m = params.num_elements;
  if (protocol == Protocol::ConventionalRis && m % 2 != 0)
    throw std::invalid_argument("conventional baseline needs an even element count");

  const CoeffStructure structure = protocol == Protocol::ConventionalRis
                                       ? CoeffStructure::conventional(m)
                                       : CoeffStructure::free_es(m);
  const Protocol eval_protocol =
      protocol == Protocol::ConventionalRis ? Protocol::Es : protocol;

  const CascadeSet cascades = build_cascades(channels);
  StarCoefficients coeffs = init_coefficients(m, structure, opts.init_seed);
  if (protocol == Protocol::Ms) {
    // Start binary so a rejected first update cannot leave a fractional
    // uplink split behind.
    for (int e = 0; e < m; ++e) {
      const bool reflect = e % 2 == 0;
      coeffs.beta[1][0][e] = reflect ? 1.0 : 0.0;
      coeffs.beta[1][1][e] = reflect ? 0.0 : 1.0;
    }
  }

  SolveReport rep;
  rep.protocol = protocol;

  AllocationState alloc = AllocationState::zeros(params.num_ues);
  alloc.tau0 = tau0;

  CoeffProblem cp;
  cp.params = &params;
  cp.cascades = &cascades;
  cp.sides = channels.sides;
  cp.structure = structure;
  cp.tau0 = tau0;
  cp.offload_window_s =
      Eigen::VectorXd::Constant(params.num_ues, params.period_s - tau0);
  cp.group.assign(params.num_ues, 0);
  cp.ms_penalty = protocol == Protocol::Ms;

  ResourceProblem rp;
  rp.bandwidth_hz = params.bandwidth_hz;
  rp.sigma2 = params.noise_power_w;
  rp.p_max = params.p_max_w;
  rp.f_max = params.f_max_hz;
  rp.kappa = params.kappa;
  rp.local_window_s = params.period_s - tau0;
  rp.offload_window_s = cp.offload_window_s;
  rp.cycles_per_bit =
      Eigen::Map<const Eigen::VectorXd>(params.cycles_per_bit.data(), params.num_ues);
  rp.group.assign(params.num_ues, 0);

  SdpWarmState warm;
  CoeffResult last_coeff;
  last_coeff.v = lift_coefficients(coeffs).v;
  double l_prev = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;

  for (int t = 1; t <= params.n_max; ++t) {
    iters = t;
    rp.gains = uplink_gains(params, channels, coeffs);
    rp.energy_budget_j = harvested_energies(params, channels, coeffs, tau0);
    const ResourceResult rr =
        solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                       opts.resource_max_passes);
    alloc.p = rr.p;
    alloc.f = rr.f;

    cp.p = alloc.p;
    cp.f = alloc.f;
    last_coeff = solve_coeff_step(cp, coeffs, opts.penalty, opts.sdp,
                                  params.epsilon_tol, opts.coeff_max_passes,
                                  &warm);
    accept_coefficients(params, channels, protocol, alloc, coeffs,
                        last_coeff.extracted);

    const RateReport rate = evaluate(params, channels, coeffs, alloc, eval_protocol);
    rep.trace.push_back(rate.total_bits);
    if (t >= 2 && std::abs(rate.total_bits - l_prev) <=
                      params.delta_tol * std::max(1.0, std::abs(rate.total_bits))) {
      rep.converged = true;
      l_prev = rate.total_bits;
      break;
    }
    l_prev = rate.total_bits;
  }

  // Final polish: let the allocation consume the final configuration.
  rp.gains = uplink_gains(params, channels, coeffs);
  rp.energy_budget_j = harvested_energies(params, channels, coeffs, tau0);
  const ResourceResult polish =
      solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                     opts.resource_max_passes);
  if (rep.trace.empty() || polish.objective >= rep.trace.back() - 1e-9) {
    alloc.p = polish.p;
    alloc.f = polish.f;
    rep.trace.push_back(polish.objective);
  }

  rep.alloc = alloc;
  rep.coeffs = coeffs;
  rep.rate = evaluate(params, channels, coeffs, alloc, eval_protocol);
  rep.total_bits = rep.rate.total_bits;
  rep.iterations = iters;
  double local_total = 0.0;
  for (double b : rep.rate.local_bits) local_total += b;
  cp.p = alloc.p;
  cp.f = alloc.f;
  rep.sdp_relaxed_bits = local_total + relaxed_offload_bits(cp, last_coeff.v);
  rep.max_rank_residual_rel = last_coeff.max_rank_residual_rel;
  return rep;
}

SolveReport search_tau0(const SystemParams& params, const ChannelSet& channels,
                        Protocol protocol, const SolveOptions& opts) {
  const double step = opts.tau0_step_s;
  if (!(step > 0.0) || !(step < params.period_s))
    throw std::invalid_argument("tau0 step must lie in (0, T)");

  std::vector<double> grid;
  for (int k = 1;; ++k) {
    const double tau = k * step;
    if (tau >= params.period_s - 1e-12) break;
    grid.push_back(tau);
  }
  if (grid.empty())
    throw std::invalid_argument("tau0 grid is empty; reduce the step");

  std::vector<SolveReport> results(grid.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(grid.size())));

  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= grid.size()) return;
      try {
        SolveOptions point_opts = opts;
        point_opts.init_seed = rng::derive_key(opts.init_seed, 7000, k);
        results[k] =
            alternate_fixed_tau0(params, channels, protocol, grid[k], point_opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (results[k].total_bits > results[best].total_bits) best = k;

  SolveReport rep = results[best];
  rep.tau0_curve.clear();
  for (std::size_t k = 0; k < grid.size(); ++k)
    rep.tau0_curve.emplace_back(grid[k], results[k].total_bits);
  return rep;
}

}  // namespace starmec
