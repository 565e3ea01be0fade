#include "starmec/channel.hpp"

#include <cmath>

#include "starmec/rng.hpp"

namespace starmec {

namespace {

// Stream tags; per-UE links get a distinct stream per (tag, ue) so the
// realization of one UE never depends on how many others exist.
enum LinkTag : std::uint64_t {
  kApRisDown = 0,
  kApRisUp = 1,
  kRisUeDown = 2,
  kRisUeUp = 3,
  kPlacement = 100,
};

Eigen::VectorXcd draw_link(std::uint64_t seed, std::uint64_t tag,
                           std::uint64_t ue, int m, double rho, double alpha,
                           double distance) {
  if (!(distance > 0.0)) throw std::domain_error("link distance must be positive");
  const double amp = std::sqrt(rho * std::pow(distance, -alpha));
  rng::Stream stream(rng::derive_key(seed, tag, ue));
  Eigen::VectorXcd v(m);
  for (int e = 0; e < m; ++e) v[e] = amp * stream.cnormal();
  return v;
}

}  // namespace

void PathLossParams::validate() const {
  if (!(rho_linear > 0.0)) throw std::invalid_argument("rho must be positive");
  for (double a : {alpha_ue_ris_up, alpha_ris_ap_up, alpha_ris_ue_down,
                   alpha_ap_ris_down})
    if (a < 2.0) throw std::invalid_argument("path loss exponents must be >= 2");
}

ChannelSet generate_channels(const SystemParams& params,
                             const UePlacement& placement,
                             const PathLossParams& pl) {
  pl.validate();
  placement.validate();
  if (placement.num_ues() != params.num_ues)
    throw std::invalid_argument("placement UE count mismatch");
  const int m = params.num_elements;
  const double d0 = placement.ap_ris_distance_m;

  ChannelSet cs;
  cs.ap_ris_down = draw_link(pl.seed, kApRisDown, 0, m, pl.rho_linear,
                             pl.alpha_ap_ris_down, d0);
  cs.ap_ris_up = draw_link(pl.seed, kApRisUp, 0, m, pl.rho_linear,
                           pl.alpha_ris_ap_up, d0);
  cs.sides = placement.side;
  cs.ris_ue_down.reserve(placement.num_ues());
  cs.ris_ue_up.reserve(placement.num_ues());
  for (int i = 0; i < placement.num_ues(); ++i) {
    const double d = placement.ue_ris_distance_m[i];
    cs.ris_ue_down.push_back(draw_link(pl.seed, kRisUeDown, i, m, pl.rho_linear,
                                       pl.alpha_ris_ue_down, d));
    cs.ris_ue_up.push_back(draw_link(pl.seed, kRisUeUp, i, m, pl.rho_linear,
                                     pl.alpha_ue_ris_up, d));
  }
  return cs;
}

UePlacement sample_placement(const GeometrySpec& geom, int k_r, int k_t,
                             std::uint64_t seed) {
  if (k_r < 0 || k_t < 0 || k_r + k_t <= 0)
    throw std::invalid_argument("need at least one UE");
  if (!(geom.ue_ris_min_m > 0.0) || geom.ue_ris_max_m < geom.ue_ris_min_m)
    throw std::invalid_argument("invalid UE annulus");
  UePlacement pl;
  pl.ap_ris_distance_m = geom.ap_ris_distance_m;
  const int n = k_r + k_t;
  pl.side.resize(n);
  pl.ue_ris_distance_m.resize(n);
  for (int i = 0; i < n; ++i) {
    pl.side[i] = i < k_r ? Side::Reflection : Side::Transmission;
    rng::Stream stream(rng::derive_key(seed, kPlacement, i));
    const double u = stream.uniform01();
    pl.ue_ris_distance_m[i] =
        geom.ue_ris_min_m + u * (geom.ue_ris_max_m - geom.ue_ris_min_m);
  }
  return pl;
}

}  // namespace starmec
