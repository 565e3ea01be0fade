#pragma once

#include <complex>

#include "starmec/types.hpp"

namespace starmec {

/// Objective value and per-constraint residuals of one operating point.
/// Residual convention: g <= 0 means satisfied. Raw energy residuals are in
/// joules (consumed - harvested); normalized ones are divided by the
/// harvested energy so tolerances are dimensionless.
struct RateReport {
  double total_bits = 0.0;
  std::vector<double> local_bits;
  std::vector<double> offload_bits;
  std::vector<double> harvested_j;
  std::vector<double> consumed_j;
  std::vector<double> energy_residual_j;     // consumed - harvested
  std::vector<double> energy_residual_norm;  // divided by harvested
  double time_residual = 0.0;                // tau0 (+tau_r+tau_t) - T, over T
  double power_residual = 0.0;               // max_i (p_i - P_max)/P_max
  double freq_residual = 0.0;                // max_i (f_i - F_max)/F_max
  std::vector<std::string> violations;       // structural invariant breaches

  bool feasible(double tol = 1e-9) const;
  double max_residual() const;
};

/// Combined cascade channel through the surface for one UE, Eq.-(1)-style
/// composition: sum_m ue_vec[m] * sqrt(beta_m) e^{j theta_m} * ap_vec[m].
/// The UE's side picks the mode set.
std::complex<double> compose_channel(const ChannelSet& channels,
                                     const StarCoefficients& coeffs, int ue,
                                     Direction direction);

/// Energy collected by `ue` during the charging window: eta*tau0*P0*|h_D|^2.
double harvested_energy(const SystemParams& params, const ChannelSet& channels,
                        const StarCoefficients& coeffs, double tau0, int ue);

/// Offloaded bits for one UE under the given protocol. ES/MS use the full
/// window T - tau0 with interference from every other UE; TS uses the UE's
/// slot and only same-side interference.
double offload_bits(const SystemParams& params, const ChannelSet& channels,
                    const StarCoefficients& coeffs,
                    const AllocationState& alloc, Protocol protocol, int ue);

/// (bits computed locally, energy burned doing so).
std::pair<double, double> local_bits_and_energy(const SystemParams& params,
                                                const AllocationState& alloc,
                                                int ue);

/// Full objective/constraint evaluation; never throws on infeasibility,
/// it is reported through the residuals instead.
RateReport evaluate(const SystemParams& params, const ChannelSet& channels,
                    const StarCoefficients& coeffs,
                    const AllocationState& alloc, Protocol protocol);

}  // namespace starmec
