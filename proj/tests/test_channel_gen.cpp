#include <doctest.h>

#include <complex>

#include "starmec/channel.hpp"

using namespace starmec;

namespace {

SystemParams params_mi(int m, int i) {
  SystemParams p;
  p.num_elements = m;
  p.num_ues = i;
  p.cycles_per_bit.assign(i, 1000.0);
  return p;
}

UePlacement simple_placement(int i, double d_ue = 1.0, double d_ap = 1.0) {
  UePlacement pl;
  pl.ap_ris_distance_m = d_ap;
  pl.side.assign(i, Side::Reflection);
  pl.ue_ris_distance_m.assign(i, d_ue);
  return pl;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const SystemParams p = params_mi(8, 3);
  const UePlacement pl = simple_placement(3, 1.7, 2.4);
  PathLossParams plp;
  plp.seed = 99;
  const ChannelSet a = generate_channels(p, pl, plp);
  const ChannelSet b = generate_channels(p, pl, plp);
  CHECK(a.ap_ris_down == b.ap_ris_down);
  CHECK(a.ap_ris_up == b.ap_ris_up);
  for (int u = 0; u < 3; ++u) {
    CHECK(a.ris_ue_down[u] == b.ris_ue_down[u]);
    CHECK(a.ris_ue_up[u] == b.ris_ue_up[u]);
  }

  PathLossParams other = plp;
  other.seed = 100;
  const ChannelSet c = generate_channels(p, pl, other);
  CHECK(a.ap_ris_down != c.ap_ris_down);
}

TEST_CASE("per-entry power matches the path loss model at d = 1") {
  // 1e5 draws against the analytic second moment, 2% tolerance.
  const int m = 100000;
  const SystemParams p = params_mi(m, 1);
  const UePlacement pl = simple_placement(1, 1.0, 1.0);
  PathLossParams plp;
  plp.seed = 7;
  const ChannelSet cs = generate_channels(p, pl, plp);
  const double mean_power = cs.ris_ue_up[0].squaredNorm() / m;
  CHECK(mean_power == doctest::Approx(plp.rho_linear).epsilon(0.02));
}

TEST_CASE("doubling the distance scales power by 2^-alpha") {
  const int m = 100000;
  const SystemParams p = params_mi(m, 1);
  PathLossParams plp;
  plp.seed = 8;
  const ChannelSet near = generate_channels(p, simple_placement(1, 1.0), plp);
  const ChannelSet far = generate_channels(p, simple_placement(1, 2.0), plp);
  const double ratio =
      far.ris_ue_up[0].squaredNorm() / near.ris_ue_up[0].squaredNorm();
  CHECK(ratio == doctest::Approx(1.0 / 8.0).epsilon(0.02));  // alpha = 3
}

TEST_CASE("law of large numbers on the normalized power") {
  const int m = 100000;
  const SystemParams p = params_mi(m, 1);
  const double d = 1.9;
  PathLossParams plp;
  plp.seed = 21;
  const ChannelSet cs = generate_channels(p, simple_placement(1, d), plp);
  const double scale = plp.rho_linear * std::pow(d, -plp.alpha_ue_ris_up);
  CHECK(cs.ris_ue_up[0].squaredNorm() / (m * scale) ==
        doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("streams of distinct UEs are uncorrelated") {
  const int m = 100000;
  const SystemParams p = params_mi(m, 2);
  PathLossParams plp;
  plp.seed = 33;
  const ChannelSet cs = generate_channels(p, simple_placement(2), plp);
  const std::complex<double> corr =
      cs.ris_ue_up[0].dot(cs.ris_ue_up[1]) /
      (cs.ris_ue_up[0].norm() * cs.ris_ue_up[1].norm());
  CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("adding UEs never perturbs earlier UEs") {
  PathLossParams plp;
  plp.seed = 55;
  const ChannelSet two =
      generate_channels(params_mi(6, 2), simple_placement(2, 1.3), plp);
  const ChannelSet three =
      generate_channels(params_mi(6, 3), simple_placement(3, 1.3), plp);
  for (int u = 0; u < 2; ++u) {
    CHECK(two.ris_ue_down[u] == three.ris_ue_down[u]);
    CHECK(two.ris_ue_up[u] == three.ris_ue_up[u]);
  }
}

TEST_CASE("zero distance is rejected") {
  const SystemParams p = params_mi(2, 1);
  UePlacement pl = simple_placement(1);
  pl.ue_ris_distance_m[0] = 0.0;
  PathLossParams plp;
  CHECK_THROWS_AS(generate_channels(p, pl, plp), std::domain_error);
}

TEST_CASE("placement sampling is deterministic and in range") {
  GeometrySpec geom;
  geom.ue_ris_min_m = 0.8;
  geom.ue_ris_max_m = 1.5;
  const UePlacement a = sample_placement(geom, 2, 2, 11);
  const UePlacement b = sample_placement(geom, 2, 2, 11);
  CHECK(a.ue_ris_distance_m == b.ue_ris_distance_m);
  CHECK(a.count(Side::Reflection) == 2);
  CHECK(a.count(Side::Transmission) == 2);
  for (double d : a.ue_ris_distance_m) {
    CHECK(d >= 0.8);
    CHECK(d <= 1.5);
  }
}
