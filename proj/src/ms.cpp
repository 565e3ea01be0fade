#include "starmec/ms.hpp"

namespace starmec {

CoeffResult ms_coeff_step(const SystemParams& params,
                          const ChannelSet& channels,
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
  cp.ms_penalty = true;
  return solve_coeff_step(cp, coeffs, opts.penalty, opts.sdp,
                          params.epsilon_tol, opts.coeff_max_passes);
}

SolveReport solve_ms(const SystemParams& params, const ChannelSet& channels,
                     const SolveOptions& opts) {
  return search_tau0(params, channels, Protocol::Ms, opts);
}

}  // namespace starmec
