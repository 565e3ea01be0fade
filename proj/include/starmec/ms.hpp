#pragma once

#include "starmec/sca.hpp"

namespace starmec {

/// Coefficient step with the binary-equality penalty on the uplink
/// amplitudes; the result's uplink split is hard-rounded after the penalty
/// drives it to within tolerance of {0,1}.
CoeffResult ms_coeff_step(const SystemParams& params,
                          const ChannelSet& channels,
                          const AllocationState& alloc,
                          const StarCoefficients& coeffs,
                          const SolveOptions& opts = {});

/// Full MS solve: linear search over tau0 around the penalized alternation.
SolveReport solve_ms(const SystemParams& params, const ChannelSet& channels,
                     const SolveOptions& opts = {});

}  // namespace starmec
