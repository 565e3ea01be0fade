#include <doctest.h>

#include <array>
#include <cmath>

#include "starmec/channel.hpp"
#include "starmec/es.hpp"
#include "starmec/ts.hpp"

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
                         int k_r) {
  GeometrySpec geom;
  const UePlacement pl =
      sample_placement(geom, k_r, params.num_ues - k_r, seed);
  PathLossParams plp;
  plp.seed = seed;
  return generate_channels(params, pl, plp);
}

// Independent 3x3 vertex enumeration, separate from the library solver.
double ref_lp_best(const LpProblem& lp, Eigen::Vector3d* argmax) {
  std::vector<std::array<double, 4>> rows;
  for (int r = 0; r < lp.constraints.rows(); ++r)
    rows.push_back({lp.constraints(r, 0), lp.constraints(r, 1),
                    lp.constraints(r, 2), lp.bounds[r]});
  rows.push_back({-1, 0, 0, 0});
  rows.push_back({0, -1, 0, 0});
  rows.push_back({0, 0, -1, 0});
  double best = -1e300;
  const int n = static_cast<int>(rows.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Eigen::Matrix3d a;
        Eigen::Vector3d b;
        a << rows[i][0], rows[i][1], rows[i][2], rows[j][0], rows[j][1],
            rows[j][2], rows[k][0], rows[k][1], rows[k][2];
        b << rows[i][3], rows[j][3], rows[k][3];
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        lu.setThreshold(1e-10);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d x = lu.solve(b);
        bool ok = x.allFinite();
        for (const auto& row : rows)
          ok = ok &&
               row[0] * x[0] + row[1] * x[1] + row[2] * x[2] <= row[3] + 1e-9;
        if (!ok) continue;
        const double v = lp.objective.dot(x);
        if (v > best) {
          best = v;
          if (argmax) *argmax = x;
        }
      }
  return best;
}

}  // namespace

TEST_CASE("build_time_lp with dead channels returns the zero vertex") {
  SystemParams p = desk_params(2, 2);
  const ChannelSet cs = ChannelSet::zeros(2, 2);
  const StarCoefficients coeffs = StarCoefficients::ts_default(2);
  const LpProblem lp = build_time_lp(p, cs, coeffs, Eigen::VectorXd::Zero(2),
                                     Eigen::VectorXd::Zero(2));
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(0.0));
  CHECK(sol.x.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("build_time_lp gives an empty side no slot") {
  SystemParams p = desk_params(4, 2);
  const ChannelSet cs = desk_channels(p, 5, 0);  // everyone transmits
  const StarCoefficients coeffs =
      init_coefficients(4, CoeffStructure::ts(4), 5);
  Eigen::VectorXd pw(2), f(2);
  pw << 1e-5, 2e-5;
  f << 1e6, 2e6;
  const LpProblem lp = build_time_lp(p, cs, coeffs, pw, f);
  CHECK(lp.objective[1] == 0.0);  // no reflection-side rate
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[1] == doctest::Approx(0.0));
}

TEST_CASE("build_time_lp solution matches independent vertex enumeration") {
  SystemParams p = desk_params(4, 2);
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    const ChannelSet cs = desk_channels(p, seed, 1);
    const StarCoefficients coeffs =
        init_coefficients(4, CoeffStructure::ts(4), seed);
    Eigen::VectorXd pw(2), f(2);
    pw << 2e-5, 1e-5;
    f << 3e6, 5e6;
    const LpProblem lp = build_time_lp(p, cs, coeffs, pw, f);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    const double ref = ref_lp_best(lp, nullptr);
    CHECK(sol.value == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("solve_ts respects the time budget and works the whole period") {
  SystemParams p = desk_params(4, 2);
  const ChannelSet cs = desk_channels(p, 51, 1);
  SolveOptions opts;
  opts.init_seed = 51;
  const SolveReport rep = solve_ts(p, cs, opts);
  const double used = rep.alloc.tau0 + rep.alloc.tau_r + rep.alloc.tau_t;
  CHECK(used <= p.period_s + 1e-9);
  CHECK(rep.total_bits > 0.0);
}

TEST_CASE("solve_ts trace is monotone and the uplink stays mode-pure") {
  SystemParams p = desk_params(4, 4);
  const ChannelSet cs = desk_channels(p, 52, 2);
  SolveOptions opts;
  opts.init_seed = 52;
  const SolveReport rep = solve_ts(p, cs, opts);
  CHECK(rep.iterations <= p.n_max);
  for (std::size_t k = 1; k < rep.trace.size(); ++k)
    CHECK(rep.trace[k] >= rep.trace[k - 1] - 1e-6 * std::max(1.0, rep.trace[k]));
  for (Mode k : {Mode::Reflect, Mode::Transmit})
    for (double b : rep.coeffs.betas(Direction::Up, k)) CHECK(b == 1.0);
  CHECK(rep.rate.violations.empty());
}

TEST_CASE("single-UE TS beats ES on the same instance") {
  // No opposite side to leak to and no interference: the TS slot plus LP
  // time split can only help.
  SystemParams p = desk_params(2, 1);
  for (std::uint64_t seed : {61u, 62u}) {
    const ChannelSet cs = desk_channels(p, seed, 1);
    SolveOptions opts;
    opts.init_seed = seed;
    opts.tau0_step_s = 0.05;
    const SolveReport es = search_tau0_es(p, cs, opts);
    const SolveReport ts = solve_ts(p, cs, opts);
    CHECK(ts.total_bits >= es.total_bits * (1.0 - 1e-6));
  }
}
