#pragma once

#include <array>

#include "starmec/types.hpp"

namespace starmec {

/// Per-UE cascade vectors through the surface and their Gram matrices.
/// With c = diag(ue_link) * ap_link and u the element coefficient vector,
/// the composed link obeys |h|^2 = Re Tr(V H) for V = u u^H and
/// H = conj(c) conj(c)^H.
struct CascadeSet {
  std::vector<Eigen::VectorXcd> up;
  std::vector<Eigen::VectorXcd> down;
  std::vector<Eigen::MatrixXcd> h_up;    // uplink Gram, one per UE
  std::vector<Eigen::MatrixXcd> g_down;  // downlink Gram, one per UE
};

CascadeSet build_cascades(const ChannelSet& channels);

/// Gram-lifted surface configuration plus the auxiliary per-UE scalars of
/// the offload surrogate.
struct LiftedCoefficients {
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> v;  // [direction][mode]
  Eigen::VectorXd a;
  Eigen::VectorXd b;

  const Eigen::MatrixXcd& block(Direction n, Mode k) const {
    return v[static_cast<int>(n)][static_cast<int>(k)];
  }
  Eigen::MatrixXcd& block(Direction n, Mode k) {
    return v[static_cast<int>(n)][static_cast<int>(k)];
  }
};

/// Rank-one lift V = u u^H of every coefficient set.
LiftedCoefficients lift_coefficients(const StarCoefficients& coeffs);

/// Structural restrictions on the surface configuration used by the SDP
/// and by rank-one extraction.
struct CoeffStructure {
  // Per element: -1 free, 0 pinned to reflect-only, 1 pinned to
  // transmit-only (conventional-RIS baseline applies this to both
  // directions).
  std::vector<int> pin;
  // Uplink-only pins (same coding); used to re-optimize phases for a fixed
  // binary mode pattern. Empty means unconstrained.
  std::vector<int> uplink_pin;
  // TS: uplink blocks run mode-pure with unit amplitudes.
  bool uplink_unit_amplitude = false;

  static CoeffStructure free_es(int m) {
    return {std::vector<int>(m, -1), {}, false};
  }
  static CoeffStructure ts(int m) { return {std::vector<int>(m, -1), {}, true}; }
  static CoeffStructure conventional(int m);
};

/// Rank-one recovery: u = sqrt(lambda_max) * leading eigenvector per block,
/// theta = arg(u), beta = |u|^2, then per-element renormalization onto
/// beta_r + beta_t = 1 (per direction). Pinned elements come out exactly
/// pure; TS uplink amplitudes come out exactly 1.
StarCoefficients extract_coefficients(
    const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v,
    const CoeffStructure& structure);

/// Worst relative rank-one residual (Tr(V) - lambda_max) / Tr(V) over the
/// four blocks.
double max_rank_residual(const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v);

}  // namespace starmec
