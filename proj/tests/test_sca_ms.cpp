#include <doctest.h>

#include <cmath>

#include "starmec/baselines.hpp"
#include "starmec/channel.hpp"
#include "starmec/es.hpp"
#include "starmec/ms.hpp"

using namespace starmec;

namespace {

SystemParams desk_params(int m, int i) {
  SystemParams p;
  p.num_elements = m;
  p.num_ues = i;
  p.cycles_per_bit.assign(i, 1000.0);
  return p;
}

ChannelSet desk_channels(const SystemParams& params, std::uint64_t seed) {
  GeometrySpec geom;
  const int kr = (params.num_ues + 1) / 2;
  const UePlacement pl = sample_placement(geom, kr, params.num_ues - kr, seed);
  PathLossParams plp;
  plp.seed = seed;
  return generate_channels(params, pl, plp);
}

AllocationState damped_allocation(const SystemParams& p, const ChannelSet& cs,
                                  const StarCoefficients& coeffs, double tau0) {
  AllocationState a = AllocationState::zeros(p.num_ues);
  a.tau0 = tau0;
  const double w = p.period_s - tau0;
  for (int i = 0; i < p.num_ues; ++i) {
    const double e = harvested_energy(p, cs, coeffs, tau0, i);
    a.p[i] = std::min(p.p_max_w, 0.5 * e / w);
    const double rem = e - a.p[i] * w;
    a.f[i] = std::min(p.f_max_hz, 0.5 * std::cbrt(rem / (p.kappa * w)));
  }
  return a;
}

}  // namespace

TEST_CASE("ms_coeff_step snaps the uplink split to binary") {
  SystemParams p = desk_params(4, 2);
  const ChannelSet cs = desk_channels(p, 7);
  const StarCoefficients start =
      init_coefficients(4, CoeffStructure::free_es(4), 3);
  const AllocationState alloc = damped_allocation(p, cs, start, 0.3);

  SolveOptions opts;
  opts.penalty.nu = 1e12;  // dominant binary penalty
  const CoeffResult cr = ms_coeff_step(p, cs, alloc, start, opts);
  const auto& br = cr.extracted.betas(Direction::Up, Mode::Reflect);
  const auto& bt = cr.extracted.betas(Direction::Up, Mode::Transmit);
  for (int e = 0; e < 4; ++e) {
    CHECK((br[e] == 0.0 || br[e] == 1.0));
    CHECK(br[e] + bt[e] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ms_coeff_step tracks the exhaustive binary enumeration, M=4") {
  SystemParams p = desk_params(4, 2);
  for (std::uint64_t seed : {11u, 12u}) {
    const ChannelSet cs = desk_channels(p, seed);
    const StarCoefficients start =
        init_coefficients(4, CoeffStructure::free_es(4), seed);
    const AllocationState alloc = damped_allocation(p, cs, start, 0.3);

    const CoeffResult cr = ms_coeff_step(p, cs, alloc, start);
    double achieved = 0.0;
    for (int i = 0; i < p.num_ues; ++i)
      achieved += offload_bits(p, cs, cr.extracted, alloc, Protocol::Ms, i);

    const double oracle = ms_pattern_enumeration(p, cs, alloc, 16);
    CHECK(achieved >= oracle * 0.95);
    CHECK(achieved <= oracle * 1.05);
  }
}

TEST_CASE("paired runs: ES dominates MS on the same instance") {
  SystemParams p = desk_params(4, 2);
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const ChannelSet cs = desk_channels(p, seed);
    SolveOptions opts;
    opts.init_seed = seed;
    const SolveReport es = alternate_es(p, cs, 0.3, opts);
    const SolveReport ms = alternate_fixed_tau0(p, cs, Protocol::Ms, 0.3, opts);
    CHECK(es.total_bits >= ms.total_bits * (1.0 - 1e-6));
  }
}

TEST_CASE("solve_ms on dead channels returns zero") {
  SystemParams p = desk_params(2, 2);
  p.n_max = 10;
  const ChannelSet cs = ChannelSet::zeros(2, 2);
  SolveOptions opts;
  opts.tau0_step_s = 0.25;
  const SolveReport rep = solve_ms(p, cs, opts);
  CHECK(rep.total_bits == 0.0);
}

TEST_CASE("solve_ms converges with a monotone trace and binary uplink") {
  SystemParams p = desk_params(4, 2);
  const ChannelSet cs = desk_channels(p, 31);
  SolveOptions opts;
  opts.init_seed = 31;
  opts.tau0_step_s = 0.25;
  const SolveReport rep = solve_ms(p, cs, opts);
  CHECK(rep.total_bits > 0.0);
  CHECK(rep.iterations <= p.n_max);
  for (std::size_t k = 1; k < rep.trace.size(); ++k)
    CHECK(rep.trace[k] >= rep.trace[k - 1] - 1e-6 * std::max(1.0, rep.trace[k]));
  CHECK(rep.rate.violations.empty());  // binary uplink at exit
  const auto& br = rep.coeffs.betas(Direction::Up, Mode::Reflect);
  for (double b : br) CHECK((b == 0.0 || b == 1.0));
}
