#pragma once

#include <cstdint>

#include "starmec/types.hpp"

namespace starmec {

/// Distance-dependent fading statistics: every link entry is
/// sqrt(rho * d^-alpha) * phi with phi a unit circularly-symmetric Gaussian.
struct PathLossParams {
  double rho_linear = 1e-3;      // -30 dB reference gain at 1 m
  double alpha_ue_ris_up = 3.0;  // absent from the source table; see docs
  double alpha_ris_ap_up = 3.0;
  double alpha_ris_ue_down = 3.0;
  double alpha_ap_ris_down = 3.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Draws one ChannelSet. Streams are keyed per (link, UE) off the master
/// seed, so regenerating with more UEs leaves earlier UEs' channels intact.
ChannelSet generate_channels(const SystemParams& params,
                             const UePlacement& placement,
                             const PathLossParams& pl);

/// Annulus used to drop UEs around the surface.
struct GeometrySpec {
  double ap_ris_distance_m = 1.0;
  double ue_ris_min_m = 0.8;
  double ue_ris_max_m = 1.5;
};

/// Random UE drop: uniform radii in [min,max], first k_r UEs reflecting.
UePlacement sample_placement(const GeometrySpec& geom, int k_r, int k_t,
                             std::uint64_t seed);

}  // namespace starmec
