#include "starmec/es.hpp"

namespace starmec {

namespace {

ResourceProblem make_resource_problem(const SystemParams& params,
                                      const ChannelSet& channels,
                                      const StarCoefficients& coeffs,
                                      double tau0) {
  ResourceProblem rp;
  rp.bandwidth_hz = params.bandwidth_hz;
  rp.sigma2 = params.noise_power_w;
  rp.p_max = params.p_max_w;
  rp.f_max = params.f_max_hz;
  rp.kappa = params.kappa;
  rp.local_window_s = params.period_s - tau0;
  rp.offload_window_s =
      Eigen::VectorXd::Constant(params.num_ues, params.period_s - tau0);
  rp.cycles_per_bit = Eigen::Map<const Eigen::VectorXd>(
      params.cycles_per_bit.data(), params.num_ues);
  rp.group.assign(params.num_ues, 0);
  rp.gains.resize(params.num_ues);
  rp.energy_budget_j.resize(params.num_ues);
  for (int i = 0; i < params.num_ues; ++i) {
    rp.gains[i] = std::norm(compose_channel(channels, coeffs, i, Direction::Up));
    rp.energy_budget_j[i] =
        harvested_energy(params, channels, coeffs, tau0, i);
  }
  return rp;
}

}  // namespace

ResourceResult resource_step(const SystemParams& params,
                             const ChannelSet& channels,
                             const StarCoefficients& coeffs, double tau0,
                             const Eigen::VectorXd& p0,
                             const Eigen::VectorXd& f0,
                             const SolveOptions& opts) {
  const ResourceProblem rp = make_resource_problem(params, channels, coeffs, tau0);
  return solve_resource(rp, p0, f0, params.epsilon_tol, opts.smooth,
                        opts.resource_max_passes);
}

CoeffResult coeff_step(const SystemParams& params, const ChannelSet& channels,
                       const AllocationState& alloc,
                       const StarCoefficients& coeffs,
                       const SolveOptions& opts) {
  const CascadeSet cascades = build_cascades(channels);
  CoeffProblem cp;
  cp.params = &params;
  cp.cascades = &cascades;
  cp.sides = channels.sides;
  cp.structure = CoeffStructure::free_es(params.num_elements);
  cp.tau0 = alloc.tau0;
  cp.offload_window_s =
      Eigen::VectorXd::Constant(params.num_ues, params.period_s - alloc.tau0);
  cp.p = alloc.p;
  cp.f = alloc.f;
  cp.group.assign(params.num_ues, 0);
  return solve_coeff_step(cp, coeffs, opts.penalty, opts.sdp,
                          params.epsilon_tol, opts.coeff_max_passes);
}

SolveReport alternate_es(const SystemParams& params, const ChannelSet& channels,
                         double tau0, const SolveOptions& opts) {
  return alternate_fixed_tau0(params, channels, Protocol::Es, tau0, opts);
}

SolveReport search_tau0_es(const SystemParams& params,
                           const ChannelSet& channels,
                           const SolveOptions& opts) {
  return search_tau0(params, channels, Protocol::Es, opts);
}

}  // namespace starmec
