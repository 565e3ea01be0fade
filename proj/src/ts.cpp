#include "starmec/ts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace starmec {

namespace {

Eigen::VectorXd ts_windows(const ChannelSet& channels, double tau_r,
                           double tau_t) {
  Eigen::VectorXd w(channels.num_ues());
  for (int i = 0; i < channels.num_ues(); ++i)
    w[i] = channels.sides[i] == Side::Reflection ? tau_r : tau_t;
  return w;
}

std::vector<int> side_groups(const ChannelSet& channels) {
  std::vector<int> g(channels.num_ues());
  for (int i = 0; i < channels.num_ues(); ++i)
    g[i] = static_cast<int>(channels.sides[i]);
  return g;
}

}  // namespace

LpProblem build_time_lp(const SystemParams& params, const ChannelSet& channels,
                        const StarCoefficients& coeffs,
                        const Eigen::VectorXd& p, const Eigen::VectorXd& f) {
  const int n = params.num_ues;
  Eigen::VectorXd gains(n), down(n);
  for (int i = 0; i < n; ++i) {
    gains[i] = std::norm(compose_channel(channels, coeffs, i, Direction::Up));
    down[i] = std::norm(compose_channel(channels, coeffs, i, Direction::Down));
  }

  LpProblem lp;
  lp.objective.setZero();
  for (int i = 0; i < n; ++i) {
    lp.objective[0] -= f[i] / params.cycles(i);
    double interference = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i && channels.sides[j] == channels.sides[i])
        interference += p[j] * gains[j];
    const double rate =
        params.bandwidth_hz *
        std::log2(1.0 + p[i] * gains[i] / (interference + params.noise_power_w));
    lp.objective[channels.sides[i] == Side::Reflection ? 1 : 2] += rate;
  }

  lp.constraints.resize(n + 1, 3);
  lp.bounds.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    const double f3 = f[i] * f[i] * f[i];
    lp.constraints(i, 0) =
        -params.kappa * f3 - params.eta * params.ap_power_w * down[i];
    lp.constraints(i, 1) = channels.sides[i] == Side::Reflection ? p[i] : 0.0;
    lp.constraints(i, 2) = channels.sides[i] == Side::Transmission ? p[i] : 0.0;
    lp.bounds[i] = -params.kappa * params.period_s * f3;
  }
  lp.constraints.row(n) << 1.0, 1.0, 1.0;
  lp.bounds[n] = params.period_s;
  return lp;
}

SolveReport solve_ts(const SystemParams& params, const ChannelSet& channels,
                     const SolveOptions& opts) {
  const int m = params.num_elements;
  const int n = params.num_ues;
  const CoeffStructure structure = CoeffStructure::ts(m);
  const CascadeSet cascades = build_cascades(channels);
  StarCoefficients coeffs = init_coefficients(m, structure, opts.init_seed);

  const int k_r = static_cast<int>(
      std::count(channels.sides.begin(), channels.sides.end(), Side::Reflection));
  const int k_t = n - k_r;

  AllocationState alloc = AllocationState::zeros(n);
  alloc.tau0 = params.period_s / 3.0;
  const double rest = params.period_s - alloc.tau0;
  if (k_r > 0 && k_t > 0) {
    alloc.tau_r = rest * static_cast<double>(k_r) / n;
    alloc.tau_t = rest - alloc.tau_r;
  } else if (k_r > 0) {
    alloc.tau_r = rest;
  } else {
    alloc.tau_t = rest;
  }

  ResourceProblem rp;
  rp.bandwidth_hz = params.bandwidth_hz;
  rp.sigma2 = params.noise_power_w;
  rp.p_max = params.p_max_w;
  rp.f_max = params.f_max_hz;
  rp.kappa = params.kappa;
  rp.cycles_per_bit = Eigen::Map<const Eigen::VectorXd>(
      params.cycles_per_bit.data(), n);
  rp.group = side_groups(channels);

  CoeffProblem cp;
  cp.params = &params;
  cp.cascades = &cascades;
  cp.sides = channels.sides;
  cp.structure = structure;
  cp.group = rp.group;

  auto refresh_resource = [&]() {
    rp.local_window_s = params.period_s - alloc.tau0;
    rp.offload_window_s = ts_windows(channels, alloc.tau_r, alloc.tau_t);
    rp.gains.resize(n);
    rp.energy_budget_j.resize(n);
    for (int i = 0; i < n; ++i) {
      rp.gains[i] =
          std::norm(compose_channel(channels, coeffs, i, Direction::Up));
      rp.energy_budget_j[i] =
          harvested_energy(params, channels, coeffs, alloc.tau0, i);
    }
  };

  SolveReport rep;
  rep.protocol = Protocol::Ts;

  SdpWarmState warm;
  CoeffResult last_coeff;
  last_coeff.v = lift_coefficients(coeffs).v;
  double l_prev = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;

  for (int t = 1; t <= params.n_max; ++t) {
    iters = t;
    if (t == 1) {
      // Initialization: a damped allocation, then one coefficient pass and a
      // refit before any LP runs. The LP keeps tau0 at the energy break-even
      // of the current consumption, so the surfaces must already harvest
      // well when it first executes or the CPU share stays starved forever.
      refresh_resource();
      ResourceResult rr =
          solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                         opts.resource_max_passes);
      alloc.p = rr.p;
      alloc.f = rr.f;
      cp.tau0 = alloc.tau0;
      cp.offload_window_s = rp.offload_window_s;
      cp.p = alloc.p;
      cp.f = alloc.f;
      last_coeff = solve_coeff_step(cp, coeffs, opts.penalty, opts.sdp,
                                    params.epsilon_tol, opts.coeff_max_passes,
                                    &warm);
      accept_coefficients(params, channels, Protocol::Ts, alloc, coeffs,
                          last_coeff.extracted);
      refresh_resource();
      rr = solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                          opts.resource_max_passes);
      alloc.p = rr.p;
      alloc.f = rr.f;
    }

    const LpSolution lp = solve_lp(build_time_lp(params, channels, coeffs,
                                                 alloc.p, alloc.f));
    if (lp.status == LpStatus::Optimal) {
      alloc.tau0 = lp.x[0];
      alloc.tau_r = lp.x[1];
      alloc.tau_t = lp.x[2];
    }

    refresh_resource();
    const ResourceResult rr =
        solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                       opts.resource_max_passes);
    alloc.p = rr.p;
    alloc.f = rr.f;

    cp.tau0 = alloc.tau0;
    cp.offload_window_s = rp.offload_window_s;
    cp.p = alloc.p;
    cp.f = alloc.f;
    last_coeff = solve_coeff_step(cp, coeffs, opts.penalty, opts.sdp,
                                  params.epsilon_tol, opts.coeff_max_passes,
                                  &warm);
    accept_coefficients(params, channels, Protocol::Ts, alloc, coeffs,
                        last_coeff.extracted);

    const RateReport rate = evaluate(params, channels, coeffs, alloc, Protocol::Ts);
    rep.trace.push_back(rate.total_bits);
    if (t >= 2 && std::abs(rate.total_bits - l_prev) <=
                      params.delta_tol * std::max(1.0, std::abs(rate.total_bits))) {
      rep.converged = true;
      l_prev = rate.total_bits;
      break;
    }
    l_prev = rate.total_bits;
  }

  // Polish: one more time-allocation pass and a final resource fit.
  {
    const LpSolution lp = solve_lp(build_time_lp(params, channels, coeffs,
                                                 alloc.p, alloc.f));
    if (lp.status == LpStatus::Optimal) {
      alloc.tau0 = lp.x[0];
      alloc.tau_r = lp.x[1];
      alloc.tau_t = lp.x[2];
    }
    refresh_resource();
    const ResourceResult rr =
        solve_resource(rp, alloc.p, alloc.f, params.epsilon_tol, opts.smooth,
                       opts.resource_max_passes);
    if (rep.trace.empty() || rr.objective >= rep.trace.back() - 1e-9) {
      alloc.p = rr.p;
      alloc.f = rr.f;
      rep.trace.push_back(rr.objective);
    }
  }

  rep.alloc = alloc;
  rep.coeffs = coeffs;
  rep.rate = evaluate(params, channels, coeffs, alloc, Protocol::Ts);
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

}  // namespace starmec
