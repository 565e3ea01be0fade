#include <doctest.h>

#include <cmath>
#include <complex>

#include "starmec/lp.hpp"
#include "starmec/rng.hpp"
#include "starmec/sdp.hpp"
#include "starmec/smooth.hpp"

using namespace starmec;

namespace {

// Independent reference: check feasibility of every triple intersection by
// direct Gaussian elimination, written separately from the library path.
struct RefLp {
  std::vector<std::array<double, 4>> rows;  // a1 a2 a3 rhs

  static bool solve3(const std::array<std::array<double, 4>, 3>& sys,
                     std::array<double, 3>* out) {
    double a[3][4];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) a[r][c] = sys[r][c];
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      if (std::abs(a[piv][col]) < 1e-11) return false;
      std::swap(a[piv], a[col]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = a[r][col] / a[col][col];
        for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
      }
    }
    for (int r = 0; r < 3; ++r) (*out)[r] = a[r][3] / a[r][r];
    return true;
  }

  bool feasible(const std::array<double, 3>& x, double tol) const {
    for (const auto& r : rows)
      if (r[0] * x[0] + r[1] * x[1] + r[2] * x[2] > r[3] + tol) return false;
    return x[0] >= -tol && x[1] >= -tol && x[2] >= -tol;
  }

  // Max over all vertices; assumes a bounded optimum exists.
  double best(const std::array<double, 3>& obj, double tol = 1e-8) const {
    std::vector<std::array<double, 4>> all = rows;
    all.push_back({-1, 0, 0, 0});
    all.push_back({0, -1, 0, 0});
    all.push_back({0, 0, -1, 0});
    double best_v = -1e300;
    const int n = static_cast<int>(all.size());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          std::array<std::array<double, 4>, 3> sys{all[i], all[j], all[k]};
          std::array<double, 3> x{};
          if (!solve3(sys, &x) || !feasible(x, tol)) continue;
          best_v = std::max(best_v, obj[0] * x[0] + obj[1] * x[1] + obj[2] * x[2]);
        }
    return best_v;
  }
};

Eigen::MatrixXcd random_hermitian(int n, std::uint64_t seed) {
  rng::Stream st(rng::derive_key(seed, 0x4a));
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = std::complex<double>(st.normal(), st.normal());
  return 0.5 * (a + a.adjoint());
}

// Plain cyclic complex Jacobi eigensolver, used only as an oracle.
double jacobi_max_eig(Eigen::MatrixXcd a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const std::complex<double> apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Phase rotation to make the pivot real, then a real Jacobi step.
        const std::complex<double> phase = apq / std::abs(apq);
        const double g = std::abs(apq);
        const double theta = 0.5 * std::atan2(2.0 * g, aqq - app);
        const double c = std::cos(theta);
        const std::complex<double> s = std::sin(theta) * phase;
        for (int k = 0; k < n; ++k) {
          const std::complex<double> akp = a(k, p);
          const std::complex<double> akq = a(k, q);
          a(k, p) = c * akp - std::conj(s) * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const std::complex<double> apk = a(p, k);
          const std::complex<double> aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = std::conj(s) * apk + c * aqk;
        }
      }
  }
  double best = a(0, 0).real();
  for (int i = 1; i < n; ++i) best = std::max(best, a(i, i).real());
  return best;
}

}  // namespace

TEST_CASE("solve_lp single active bound") {
  LpProblem lp;
  lp.objective << 1.0, 0.0, 0.0;
  lp.constraints.resize(1, 3);
  lp.constraints << 1.0, 0.0, 0.0;
  lp.bounds.resize(1);
  lp.bounds << 1.0;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.x[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.x[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solve_lp detects infeasibility and unboundedness") {
  LpProblem lp;
  lp.objective << 1.0, 0.0, 0.0;
  lp.constraints.resize(1, 3);
  lp.constraints << 1.0, 0.0, 0.0;
  lp.bounds.resize(1);
  lp.bounds << -1.0;
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);

  LpProblem unb;
  unb.objective << 1.0, 1.0, 0.0;
  unb.constraints.resize(0, 3);
  unb.bounds.resize(0);
  CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("solve_lp matches vertex enumeration on random feasible LPs") {
  rng::Stream st(rng::derive_key(404, 1));
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = 2 + static_cast<int>(st.uniform01() * 5);
    LpProblem lp;
    RefLp ref;
    lp.constraints.resize(rows, 3);
    lp.bounds.resize(rows);
    for (int r = 0; r < rows; ++r) {
      std::array<double, 4> row{};
      for (int c = 0; c < 3; ++c) {
        row[c] = 2.0 * st.uniform01() - 0.5;
        lp.constraints(r, c) = row[c];
      }
      row[3] = st.uniform01() + 0.1;  // origin stays feasible
      lp.bounds[r] = row[3];
      ref.rows.push_back(row);
    }
    // A row with all-positive coefficients keeps the region bounded.
    lp.constraints.conservativeResize(rows + 1, 3);
    lp.bounds.conservativeResize(rows + 1);
    lp.constraints.row(rows) << 1.0, 1.0, 1.0;
    lp.bounds[rows] = 3.0;
    ref.rows.push_back({1.0, 1.0, 1.0, 3.0});

    std::array<double, 3> obj{};
    lp.objective.setZero();
    for (int c = 0; c < 3; ++c) {
      obj[c] = 2.0 * st.uniform01() - 1.0;
      lp.objective[c] = obj[c];
    }
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.value == doctest::Approx(ref.best(obj)).epsilon(1e-8));
  }
}

TEST_CASE("solve_lp optimum sits on a vertex") {
  LpProblem lp;
  lp.objective << 2.0, 1.0, -1.0;
  lp.constraints.resize(2, 3);
  lp.constraints << 1.0, 2.0, 0.0, 1.0, 0.0, 1.0;
  lp.bounds.resize(2);
  lp.bounds << 2.0, 1.5;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  int active = 0;
  for (int r = 0; r < 2; ++r)
    if (std::abs(lp.constraints.row(r).dot(sol.x.transpose()) - lp.bounds[r]) < 1e-8)
      ++active;
  for (int c = 0; c < 3; ++c)
    if (std::abs(sol.x[c]) < 1e-8) ++active;
  CHECK(active >= 3);
}

TEST_CASE("solve_smooth monotone objective saturates the box") {
  SmoothConcaveProblem sp;
  sp.lower = Eigen::VectorXd::Zero(1);
  sp.upper = Eigen::VectorXd::Ones(1);
  sp.objective = [](const Eigen::VectorXd& x) { return std::log1p(x[0]); };
  sp.objective_gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    g[0] = 1.0 / (1.0 + x[0]);
    return g;
  };
  const SmoothSolution sol = solve_smooth(sp, Eigen::VectorXd::Constant(1, 0.2));
  REQUIRE(sol.status == SmoothStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.kkt_residual <= 1e-7);
}

TEST_CASE("solve_smooth interior optimum") {
  SmoothConcaveProblem sp;
  sp.lower = Eigen::VectorXd::Zero(1);
  sp.upper = Eigen::VectorXd::Ones(1);
  sp.objective = [](const Eigen::VectorXd& x) {
    return -(x[0] - 0.3) * (x[0] - 0.3);
  };
  sp.objective_gradient = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    g[0] = -2.0 * (x[0] - 0.3);
    return g;
  };
  const SmoothSolution sol = solve_smooth(sp, Eigen::VectorXd::Constant(1, 0.9));
  REQUIRE(sol.status == SmoothStatus::Optimal);
  CHECK(std::abs(sol.x[0] - 0.3) <= 1e-7);
}

TEST_CASE("solve_smooth respects convex constraints") {
  // maximize x + y subject to x^2 + y^2 <= 1 on [0, 2]^2
  SmoothConcaveProblem sp;
  sp.lower = Eigen::VectorXd::Zero(2);
  sp.upper = Eigen::VectorXd::Constant(2, 2.0);
  sp.objective = [](const Eigen::VectorXd& x) { return x.sum(); };
  sp.objective_gradient = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Ones(x.size()).eval();
  };
  SmoothConcaveProblem::Constraint c;
  c.value = [](const Eigen::VectorXd& x) { return x.squaredNorm() - 1.0; };
  c.gradient = [](const Eigen::VectorXd& x) { return (2.0 * x).eval(); };
  sp.constraints.push_back(c);
  const SmoothSolution sol =
      solve_smooth(sp, Eigen::VectorXd::Constant(2, 0.1));
  REQUIRE(sol.status == SmoothStatus::Optimal);
  const double r = std::sqrt(0.5);
  CHECK(sol.x[0] == doctest::Approx(r).epsilon(1e-4));
  CHECK(sol.x[1] == doctest::Approx(r).epsilon(1e-4));
  CHECK(sol.x.squaredNorm() <= 1.0 + 1e-9);  // feasible after polish
}

TEST_CASE("solve_sdp trace minimization with a pinned diagonal") {
  SdpProblem prob;
  prob.block_dims = {2};
  // maximize -Tr(V) s.t. V_11 = 1
  prob.objective.add_mat(0, -Eigen::MatrixXcd::Identity(2, 2));
  SdpProblem::Constraint c;
  Eigen::MatrixXcd e11 = Eigen::MatrixXcd::Zero(2, 2);
  e11(0, 0) = 1.0;
  c.expr.add_mat(0, e11);
  c.expr.constant = -1.0;
  c.equality = true;
  prob.constraints.push_back(c);

  const SdpSolution sol = solve_sdp(prob);
  REQUIRE(sol.status == SdpStatus::Converged);
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(sol.blocks[0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(sol.blocks[0](1, 1)) <= 1e-5);
  CHECK(std::abs(sol.blocks[0](0, 1)) <= 1e-4);
}

TEST_CASE("solve_sdp Rayleigh quotient equals the top eigenvalue") {
  const Eigen::MatrixXcd h = random_hermitian(4, 777);
  SdpProblem prob;
  prob.block_dims = {4};
  prob.objective.add_mat(0, h);
  SdpProblem::Constraint c;
  c.expr.add_mat(0, Eigen::MatrixXcd::Identity(4, 4));
  c.expr.constant = -1.0;
  c.equality = true;
  prob.constraints.push_back(c);

  const SdpSolution sol = solve_sdp(prob);
  REQUIRE(sol.status == SdpStatus::Converged);
  const auto [lambda, v] = leading_eig(h);
  CHECK(sol.objective == doctest::Approx(lambda).epsilon(1e-6));
}

TEST_CASE("solve_sdp split-surface instance matches a rank-one grid") {
  // maximize Re Tr(H V) with diag(V)_m + diag(W)_m = 1 and V, W PSD:
  // the optimum is the best rank-one amplitude/phase configuration.
  const int m = 2;
  rng::Stream st(rng::derive_key(31337, 2));
  Eigen::VectorXcd cascade(m);
  for (int e = 0; e < m; ++e)
    cascade[e] = std::complex<double>(st.normal(), st.normal());
  const Eigen::VectorXcd cj = cascade.conjugate();
  const Eigen::MatrixXcd h = cj * cj.adjoint();

  SdpProblem prob;
  prob.block_dims = {m, m};
  prob.objective.add_mat(0, h);
  for (int e = 0; e < m; ++e) {
    SdpProblem::Constraint c;
    Eigen::MatrixXcd sel = Eigen::MatrixXcd::Zero(m, m);
    sel(e, e) = 1.0;
    c.expr.add_mat(0, sel);
    c.expr.add_mat(1, sel);
    c.expr.constant = -1.0;
    c.equality = true;
    prob.constraints.push_back(c);
  }
  const SdpSolution sol = solve_sdp(prob);
  REQUIRE(sol.status == SdpStatus::Converged);

  double grid_best = 0.0;
  const int nph = 128, nb = 65;
  for (int b0 = 0; b0 < nb; ++b0)
    for (int b1 = 0; b1 < nb; ++b1)
      for (int t0 = 0; t0 < nph; ++t0)
        for (int t1 = 0; t1 < nph; ++t1) {
          const double beta0 = static_cast<double>(b0) / (nb - 1);
          const double beta1 = static_cast<double>(b1) / (nb - 1);
          const double th0 = 2.0 * M_PI * t0 / nph;
          const double th1 = 2.0 * M_PI * t1 / nph;
          const std::complex<double> s =
              std::sqrt(beta0) * std::polar(1.0, th0) * cascade[0] +
              std::sqrt(beta1) * std::polar(1.0, th1) * cascade[1];
          grid_best = std::max(grid_best, std::norm(s));
        }
  CHECK(sol.objective == doctest::Approx(grid_best).epsilon(0.005));
}

TEST_CASE("solve_sdp reports NotConverged on an infeasible instance") {
  SdpProblem prob;
  prob.block_dims = {2};
  SdpProblem::Constraint c;
  c.expr.add_mat(0, Eigen::MatrixXcd::Identity(2, 2));
  c.expr.constant = 1.0;  // Tr(V) = -1 impossible for PSD V
  c.equality = true;
  prob.constraints.push_back(c);
  SdpSettings fast;
  fast.max_iterations = 2000;
  const SdpSolution sol = solve_sdp(prob, fast);
  CHECK(sol.status == SdpStatus::NotConverged);
}

TEST_CASE("leading_eig diagonal and degenerate cases") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  const auto [l1, v1] = leading_eig(d);
  CHECK(l1 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(v1[0]) == doctest::Approx(1.0).epsilon(1e-10));

  const auto [l2, v2] = leading_eig(Eigen::MatrixXcd::Identity(4, 4));
  CHECK(l2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v2.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("leading_eig matches a Jacobi eigensolve") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Eigen::MatrixXcd a = random_hermitian(8, seed);
    const auto [lambda, v] = leading_eig(a);
    CHECK(lambda == doctest::Approx(jacobi_max_eig(a)).epsilon(1e-9));
    CHECK((a * v - lambda * v).norm() <= 1e-10 * a.norm());
  }
}

TEST_CASE("leading_eig dominates Rayleigh quotients") {
  const Eigen::MatrixXcd a = random_hermitian(6, 99);
  const auto [lambda, v] = leading_eig(a);
  rng::Stream st(rng::derive_key(100, 3));
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXcd u(6);
    for (int i = 0; i < 6; ++i)
      u[i] = std::complex<double>(st.normal(), st.normal());
    u.normalize();
    const double q = (u.adjoint() * a * u)(0, 0).real();
    CHECK(lambda >= q - 1e-10);
  }
}
