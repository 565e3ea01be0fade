#pragma once

#include "starmec/lp.hpp"
#include "starmec/sca.hpp"

namespace starmec {

/// Time-allocation LP over (tau0, tau_r, tau_t) at fixed allocation and
/// coefficients. One energy row per UE plus the total-time row; the
/// objective carries the local-computing slope in tau0 and the per-side
/// offload rate sums.
LpProblem build_time_lp(const SystemParams& params, const ChannelSet& channels,
                        const StarCoefficients& coeffs,
                        const Eigen::VectorXd& p, const Eigen::VectorXd& f);

/// Full TS solve: iterate [time LP, resource allocation, coefficient
/// optimization] until the objective settles. No outer tau0 search is
/// needed; the LP owns all three time shares.
SolveReport solve_ts(const SystemParams& params, const ChannelSet& channels,
                     const SolveOptions& opts = {});

}  // namespace starmec
