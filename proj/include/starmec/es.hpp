#pragma once

#include "starmec/sca.hpp"

namespace starmec {

/// Resource allocation at fixed coefficients and energy-transfer time
/// (inner SCA over the transmit-power Taylor bound).
ResourceResult resource_step(const SystemParams& params,
                             const ChannelSet& channels,
                             const StarCoefficients& coeffs, double tau0,
                             const Eigen::VectorXd& p0,
                             const Eigen::VectorXd& f0,
                             const SolveOptions& opts = {});

/// Coefficient-matrix step at fixed allocation: SDP with the penalty term,
/// the rank-one linearization, and rank-one extraction of the result.
CoeffResult coeff_step(const SystemParams& params, const ChannelSet& channels,
                       const AllocationState& alloc,
                       const StarCoefficients& coeffs,
                       const SolveOptions& opts = {});

/// Alternate the two steps at fixed tau0 until the objective settles.
SolveReport alternate_es(const SystemParams& params, const ChannelSet& channels,
                         double tau0, const SolveOptions& opts = {});

/// Linear search over the tau0 grid; returns the best point plus the full
/// objective-versus-tau0 curve.
SolveReport search_tau0_es(const SystemParams& params,
                           const ChannelSet& channels,
                           const SolveOptions& opts = {});

}  // namespace starmec
