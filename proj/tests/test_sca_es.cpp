#include <doctest.h>

#include <cmath>

#include "starmec/channel.hpp"
#include "starmec/es.hpp"
#include "starmec/rng.hpp"

using namespace starmec;

namespace {

SystemParams desk_params(int m, int i) {
  SystemParams p;
  p.num_elements = m;
  p.num_ues = i;
  p.cycles_per_bit.assign(i, 1000.0);
  return p;
}

ChannelSet desk_channels(const SystemParams& params, std::uint64_t seed,
                         int k_r = -1) {
  GeometrySpec geom;
  const int kr = k_r < 0 ? (params.num_ues + 1) / 2 : k_r;
  const UePlacement pl =
      sample_placement(geom, kr, params.num_ues - kr, seed);
  PathLossParams plp;
  plp.seed = seed;
  return generate_channels(params, pl, plp);
}

Eigen::MatrixXcd random_psd(int n, std::uint64_t seed) {
  rng::Stream st(rng::derive_key(seed, 0x9d));
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = std::complex<double>(st.normal(), st.normal());
  return a * a.adjoint();
}

}  // namespace

TEST_CASE("taylor_R is exact at the expansion point and bounds R") {
  const int n = 2;
  Eigen::VectorXd gains(n), p0(n);
  gains << 2e-6, 5e-7;
  p0 << 0.01, 0.02;
  const double sigma2 = 1e-8;
  const std::vector<int> group(n, 0);
  rng::Stream st(rng::derive_key(17, 0));

  for (int ue = 0; ue < n; ++ue) {
    const AffineBound b = taylor_R(p0, gains, ue, sigma2, group);
    double s = sigma2;
    for (int j = 0; j < n; ++j)
      if (j != ue) s += p0[j] * gains[j];
    CHECK(b.value(p0) == doctest::Approx(std::log2(s)).epsilon(1e-15));

    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd p(n);
      for (int j = 0; j < n; ++j) p[j] = 0.1 * st.uniform01();
      double sr = sigma2;
      for (int j = 0; j < n; ++j)
        if (j != ue) sr += p[j] * gains[j];
      CHECK(b.value(p) >= std::log2(sr) - 1e-12);
    }
  }
}

TEST_CASE("taylor_R with no interferers is the constant noise log") {
  Eigen::VectorXd gains(1), p0(1);
  gains << 1e-6;
  p0 << 0.05;
  const AffineBound b = taylor_R(p0, gains, 0, 1e-8, {0});
  CHECK(b.constant == doctest::Approx(std::log2(1e-8)).epsilon(1e-15));
  CHECK(b.gradient.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hatR_bound exactness, bound direction and decay") {
  const double a0 = 2.0, b0 = 0.5;
  const HatRBound h = hatR_bound(a0, b0);
  CHECK(h.value(a0, b0) ==
        doctest::Approx(std::log2(1.0 + 1.0 / (a0 * b0))).epsilon(1e-15));

  rng::Stream st(rng::derive_key(18, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const double a = a0 * std::exp(2.0 * (st.uniform01() - 0.5));
    const double b = b0 * std::exp(2.0 * (st.uniform01() - 0.5));
    CHECK(h.value(a, b) <= std::log2(1.0 + 1.0 / (a * b)) + 1e-12);
  }

  CHECK(h.value(1e9, b0) < 0.0);  // tends to -inf below zero
  CHECK_THROWS_AS(hatR_bound(0.0, 1.0), std::domain_error);
}

TEST_CASE("rank_linearization equality and identity cases") {
  const int m = 2;
  rng::Stream st(rng::derive_key(19, 0));
  Eigen::VectorXcd u(m);
  for (int e = 0; e < m; ++e)
    u[e] = std::complex<double>(st.normal(), st.normal());
  u.normalize();
  const Eigen::MatrixXcd uu = u * u.adjoint();
  const RankLinearization lin = rank_linearization(uu);
  CHECK(lin.residual(uu) == doctest::Approx(0.0).epsilon(1e-12));

  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(2, 2);
  const RankLinearization lin_eye = rank_linearization(eye);
  CHECK(lin_eye.residual(eye) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rank_linearization is a spectral-norm lower bound") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Eigen::MatrixXcd v_prev = random_psd(4, seed);
    const Eigen::MatrixXcd v = random_psd(4, seed + 1000);
    const RankLinearization lin = rank_linearization(v_prev);
    const auto [norm_s, vec] = leading_eig(v);
    CHECK(lin.gamma(v) <= norm_s + 1e-9 * std::max(1.0, norm_s));
    CHECK(lin.residual(v) >= -1e-9 * std::max(1.0, v.real().trace()));
  }
}

TEST_CASE("ms_penalty_bound touches the parabola exactly where it should") {
  for (double b : {0.0, 1.0}) {
    const BinarySurrogate s = ms_penalty_bound(b);
    CHECK(s.value(b) == doctest::Approx(b * (b - 1.0)).epsilon(1e-15));
    CHECK(s.value(b) == doctest::Approx(0.0).epsilon(1e-15));
  }
  const BinarySurrogate s = ms_penalty_bound(0.5);
  for (int k = 0; k <= 100; ++k) {
    const double beta = k / 100.0;
    CHECK(s.value(beta) <= beta * (beta - 1.0) + 1e-12);
  }
  CHECK(s.value(0.5) == doctest::Approx(0.5 * (0.5 - 1.0)).epsilon(1e-15));
}

TEST_CASE("resource_step with no harvested energy returns zeros") {
  const SystemParams p = desk_params(2, 2);
  const ChannelSet cs = desk_channels(p, 3);
  const StarCoefficients coeffs = StarCoefficients::uniform(2, 0.5);

  ResourceProblem rp;
  rp.bandwidth_hz = p.bandwidth_hz;
  rp.sigma2 = p.noise_power_w;
  rp.p_max = p.p_max_w;
  rp.f_max = p.f_max_hz;
  rp.kappa = p.kappa;
  rp.local_window_s = 0.7;
  rp.offload_window_s = Eigen::VectorXd::Constant(2, 0.7);
  rp.energy_budget_j = Eigen::VectorXd::Zero(2);
  rp.gains = Eigen::VectorXd::Constant(2, 1e-6);
  rp.cycles_per_bit = Eigen::VectorXd::Constant(2, 1000.0);
  rp.group = {0, 0};
  const ResourceResult rr = solve_resource(rp, Eigen::VectorXd::Zero(2),
                                           Eigen::VectorXd::Zero(2), 1e-4, {}, 10);
  CHECK(rr.objective == 0.0);
  CHECK(rr.p.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rr.f.cwiseAbs().maxCoeff() == 0.0);
  (void)cs;
  (void)coeffs;
}

TEST_CASE("resource_step matches a 2-D grid oracle at I=1") {
  SystemParams p = desk_params(2, 1);
  const ChannelSet cs = desk_channels(p, 21);
  const StarCoefficients coeffs = init_coefficients(2, CoeffStructure::free_es(2), 5);
  const double tau0 = 0.3;

  const ResourceResult rr =
      resource_step(p, cs, coeffs, tau0, Eigen::VectorXd::Zero(1),
                    Eigen::VectorXd::Zero(1));

  const double gain = std::norm(compose_channel(cs, coeffs, 0, Direction::Up));
  const double energy = harvested_energy(p, cs, coeffs, tau0, 0);
  const double w = p.period_s - tau0;
  double best = 0.0;
  const int np = 1000, nf = 1000;
  const double p_cap = std::min(p.p_max_w, energy / w);
  for (int a = 0; a <= np; ++a) {
    const double pw = p_cap * a / np;
    const double rem = energy - pw * w;
    if (rem < 0.0) continue;
    const double f_cap = std::min(p.f_max_hz, std::cbrt(rem / (p.kappa * w)));
    for (int b = 0; b <= nf; ++b) {
      const double f = f_cap * b / nf;
      const double bits = w * p.bandwidth_hz *
                              std::log2(1.0 + pw * gain / p.noise_power_w) +
                          f * w / p.cycles(0);
      best = std::max(best, bits);
    }
  }
  CHECK(rr.objective == doctest::Approx(best).epsilon(1e-3));
  CHECK(rr.objective >= best * (1.0 - 1e-3));
}

TEST_CASE("resource_step trace is non-decreasing on seeded instances") {
  SystemParams p = desk_params(4, 3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ChannelSet cs = desk_channels(p, seed);
    const StarCoefficients coeffs =
        init_coefficients(4, CoeffStructure::free_es(4), seed);
    const ResourceResult rr =
        resource_step(p, cs, coeffs, 0.3, Eigen::VectorXd::Zero(3),
                      Eigen::VectorXd::Zero(3));
    for (std::size_t k = 1; k < rr.trace.size(); ++k)
      CHECK(rr.trace[k] >=
            rr.trace[k - 1] - 1e-6 * std::max(1.0, std::abs(rr.trace[k])));
  }
}

TEST_CASE("coeff_step aligns the cascade phases at I=1, M=2") {
  SystemParams p = desk_params(2, 1);
  const ChannelSet cs = desk_channels(p, 31);
  const CascadeSet cascades = build_cascades(cs);

  AllocationState alloc = AllocationState::zeros(1);
  alloc.tau0 = 0.3;
  const StarCoefficients start =
      init_coefficients(2, CoeffStructure::free_es(2), 77);
  const double e0 = harvested_energy(p, cs, start, alloc.tau0, 0);
  alloc.p[0] = std::min(p.p_max_w, 0.5 * e0 / (p.period_s - alloc.tau0));
  alloc.f[0] = 0.0;

  const CoeffResult cr = coeff_step(p, cs, alloc, start);
  const double achieved =
      std::norm(compose_channel(cs, cr.extracted, 0, Direction::Up));

  // Best over a fine per-element amplitude/phase grid: phases align, so the
  // value is (sum_m sqrt(beta_m) |c_m|)^2 over independent splits.
  double grid_best = 0.0;
  const int nb = 201;
  for (int b0 = 0; b0 < nb; ++b0)
    for (int b1 = 0; b1 < nb; ++b1) {
      const double beta0 = static_cast<double>(b0) / (nb - 1);
      const double beta1 = static_cast<double>(b1) / (nb - 1);
      const double s = std::sqrt(beta0) * std::abs(cascades.up[0][0]) +
                       std::sqrt(beta1) * std::abs(cascades.up[0][1]);
      grid_best = std::max(grid_best, s * s);
    }
  CHECK(achieved >= grid_best * 0.99);
  CHECK(achieved <= grid_best * 1.01);
  CHECK(cr.max_rank_residual_rel <= 1e-3);
}

TEST_CASE("coeff_step with mu=0 and slack energy leaves a pure offload objective") {
  SystemParams p = desk_params(2, 1);
  const ChannelSet cs = desk_channels(p, 33);
  AllocationState alloc = AllocationState::zeros(1);
  alloc.tau0 = 0.5;
  const StarCoefficients start =
      init_coefficients(2, CoeffStructure::free_es(2), 3);
  const double e0 = harvested_energy(p, cs, start, alloc.tau0, 0);
  alloc.p[0] = std::min(p.p_max_w, 0.05 * e0 / (p.period_s - alloc.tau0));

  SolveOptions opts;
  opts.penalty.mu = 0.0;
  const CoeffResult cr = coeff_step(p, cs, alloc, start, opts);
  // Energy rows were slack and stay satisfied at the extracted point.
  const double harvested =
      harvested_energy(p, cs, cr.extracted, alloc.tau0, 0);
  const double consumed = alloc.p[0] * (p.period_s - alloc.tau0);
  CHECK(harvested >= consumed * (1.0 - 1e-9));
  CHECK(cr.relaxed_offload_bits > 0.0);
}

TEST_CASE("alternate_es on dead channels converges immediately to zero") {
  SystemParams p = desk_params(2, 2);
  const ChannelSet cs = ChannelSet::zeros(2, 2);
  const SolveReport rep = alternate_es(p, cs, 0.4);
  CHECK(rep.total_bits == 0.0);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 3);
}

TEST_CASE("alternate_es produces a monotone trace and converges") {
  SystemParams p = desk_params(4, 2);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ChannelSet cs = desk_channels(p, seed);
    SolveOptions opts;
    opts.init_seed = seed;
    const SolveReport rep = alternate_es(p, cs, 0.3, opts);
    CHECK(rep.total_bits > 0.0);
    CHECK(rep.iterations <= p.n_max);
    for (std::size_t k = 1; k < rep.trace.size(); ++k)
      CHECK(rep.trace[k] >=
            rep.trace[k - 1] - 1e-6 * std::max(1.0, rep.trace[k]));
  }
}

TEST_CASE("alternate_es restarted from its own output barely moves") {
  SystemParams p = desk_params(4, 2);
  const ChannelSet cs = desk_channels(p, 11);
  SolveOptions opts;
  opts.init_seed = 4;
  const SolveReport rep = alternate_es(p, cs, 0.3, opts);
  const SolveReport again = alternate_es(p, cs, 0.3, opts);
  CHECK(std::abs(again.total_bits - rep.total_bits) <=
        p.delta_tol * std::max(1.0, rep.total_bits));
}

TEST_CASE("search_tau0_es grid arithmetic and argmax definition") {
  SystemParams p = desk_params(2, 1);
  const ChannelSet cs = desk_channels(p, 8);
  SolveOptions opts;
  opts.tau0_step_s = p.period_s / 2.0;
  const SolveReport rep = search_tau0_es(p, cs, opts);
  CHECK(rep.tau0_curve.size() == 1);  // only tau0 = T/2 inside (0, T)
  CHECK(rep.alloc.tau0 == doctest::Approx(p.period_s / 2.0));

  SolveOptions fine;
  fine.tau0_step_s = 0.2;
  const SolveReport rep2 = search_tau0_es(p, cs, fine);
  double best = -1.0;
  for (const auto& [tau, bits] : rep2.tau0_curve) best = std::max(best, bits);
  CHECK(rep2.total_bits == doctest::Approx(best));
}
