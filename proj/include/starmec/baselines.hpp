#pragma once

#include "starmec/sca.hpp"

namespace starmec {

/// Baseline: one reflect-only and one transmit-only surface of M/2 elements
/// each at the STAR-RIS location, run through the ES pipeline with the
/// element modes pinned. Requires an even element count.
SolveReport conventional_ris_solve(const SystemParams& params,
                                   const ChannelSet& channels,
                                   const SolveOptions& opts = {});

/// Grid densities for the exhaustive verification oracle. Refining by 2
/// keeps every previously evaluated configuration in the new grid, so the
/// returned value can only grow.
struct BruteForceGrids {
  double tau0_step_s = 0.05;
  int p_points = 33;
  int f_points = 33;
  int phase_points = 16;  // per element
  int beta_points = 9;    // per element amplitude split
  int time_points = 21;   // TS offload-slot grid

  BruteForceGrids refined() const {
    BruteForceGrids g = *this;
    g.tau0_step_s = tau0_step_s / 2.0;
    g.p_points = 2 * p_points - 1;
    g.f_points = 2 * f_points - 1;
    g.phase_points = 2 * phase_points;
    g.beta_points = 2 * beta_points - 1;
    g.time_points = 2 * time_points - 1;
    return g;
  }

  /// Rough evaluation count, used to enforce the configured budget.
  double cost(int m, int num_ues, Protocol protocol) const;
};

struct BruteForceResult {
  double total_bits = 0.0;
  AllocationState alloc;
  StarCoefficients coeffs;
};

/// Exhaustive scan over tau0 x power x frequency x phases (x amplitude
/// split for ES, x binary patterns for MS, x slot split for TS). Only
/// single-UE instances decompose exactly; larger ones must fit the
/// evaluation budget with the given grids.
BruteForceResult brute_force_small(const SystemParams& params,
                                   const ChannelSet& channels,
                                   Protocol protocol,
                                   const BruteForceGrids& grids = {},
                                   double budget = 1e8);

/// Best true offload total over every uplink binary pattern with phases on
/// a per-element grid, at fixed allocation. Verification oracle for the MS
/// coefficient step.
double ms_pattern_enumeration(const SystemParams& params,
                              const ChannelSet& channels,
                              const AllocationState& alloc, int phase_points);

}  // namespace starmec
