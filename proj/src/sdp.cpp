#include "starmec/sdp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace starmec {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;

// Isometric real parametrization of Hermitian matrices:
// [diag; sqrt(2) Re(upper); sqrt(2) Im(upper)] interleaved per pair, so the
// Euclidean inner product of two vecs equals Re<A, B>_F.
int vech_dim(int d) { return d * d; }

void vech(const Eigen::MatrixXcd& h, double* out) {
  const int d = static_cast<int>(h.rows());
  int k = 0;
  for (int i = 0; i < d; ++i) out[k++] = h(i, i).real();
  for (int j = 1; j < d; ++j)
    for (int i = 0; i < j; ++i) {
      out[k++] = kSqrt2 * h(i, j).real();
      out[k++] = kSqrt2 * h(i, j).imag();
    }
}

Eigen::MatrixXcd unvech(const double* v, int d) {
  Eigen::MatrixXcd h(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i) h(i, i) = v[k++];
  for (int j = 1; j < d; ++j)
    for (int i = 0; i < j; ++i) {
      const double re = v[k++] / kSqrt2;
      const double im = v[k++] / kSqrt2;
      h(i, j) = std::complex<double>(re, im);
      h(j, i) = std::complex<double>(re, -im);
    }
  return h;
}

Eigen::MatrixXd real_embedding(const Eigen::MatrixXcd& h) {
  const int d = static_cast<int>(h.rows());
  Eigen::MatrixXd s(2 * d, 2 * d);
  const Eigen::MatrixXd x = h.real();
  const Eigen::MatrixXd y = h.imag();
  s.topLeftCorner(d, d) = x;
  s.bottomRightCorner(d, d) = x;
  s.topRightCorner(d, d) = -y;
  s.bottomLeftCorner(d, d) = y;
  return s;
}

Eigen::MatrixXcd from_embedding(const Eigen::MatrixXd& s) {
  const int d = static_cast<int>(s.rows()) / 2;
  const Eigen::MatrixXd x =
      0.5 * (s.topLeftCorner(d, d) + s.bottomRightCorner(d, d));
  const Eigen::MatrixXd y =
      0.5 * (s.bottomLeftCorner(d, d) - s.topRightCorner(d, d));
  Eigen::MatrixXcd h = x.cast<std::complex<double>>() +
                       std::complex<double>(0, 1) * y.cast<std::complex<double>>();
  return 0.5 * (h + h.adjoint());
}

// PSD projection of a Hermitian block through its real embedding.
Eigen::MatrixXcd project_hpsd(const Eigen::MatrixXcd& h, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(real_embedding(h));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  if (min_eig) *min_eig = ev.minCoeff();
  if (ev.minCoeff() >= 0.0) return h;
  Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  const Eigen::MatrixXd s =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return from_embedding(s);
}

// Projection of svec(a, b, sqrt(2) c) of [[a, c], [c, b]] onto the PSD cone.
void project_psd2(double* v) {
  const double a = v[0], b = v[1], c = v[2] / kSqrt2;
  const double tr = a + b;
  const double disc = std::sqrt((a - b) * (a - b) + 4.0 * c * c);
  const double l1 = 0.5 * (tr + disc);
  const double l2 = 0.5 * (tr - disc);
  if (l2 >= 0.0) return;
  if (l1 <= 0.0) {
    v[0] = v[1] = v[2] = 0.0;
    return;
  }
  // Rank-one part along the eigenvector of l1.
  double vx, vy;
  if (std::abs(c) > 1e-300) {
    vx = l1 - b;
    vy = c;
  } else {
    vx = a >= b ? 1.0 : 0.0;
    vy = a >= b ? 0.0 : 1.0;
  }
  const double nrm = std::sqrt(vx * vx + vy * vy);
  vx /= nrm;
  vy /= nrm;
  v[0] = l1 * vx * vx;
  v[1] = l1 * vy * vy;
  v[2] = kSqrt2 * l1 * vx * vy;
}

struct ConeLayout {
  int eq_rows = 0;
  int ineq_rows = 0;
  std::vector<int> psd2_offsets;
  std::vector<int> block_offsets;  // into the row space
  std::vector<int> block_dims;
  int total = 0;
};

}  // namespace

std::pair<double, Eigen::VectorXcd> leading_eig(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("matrix must be square");
  if (!a.allFinite()) throw std::invalid_argument("matrix must be finite");
  const int d = static_cast<int>(a.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(real_embedding(a));
  const int top = 2 * d - 1;
  const double lambda = eig.eigenvalues()[top];
  const Eigen::VectorXd v = eig.eigenvectors().col(top);
  Eigen::VectorXcd u(d);
  for (int i = 0; i < d; ++i) u[i] = std::complex<double>(v[i], v[d + i]);
  u.normalize();
  // Deterministic phase: largest entry real nonnegative.
  int imax = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(u[i]) > std::abs(u[imax])) imax = i;
  if (std::abs(u[imax]) > 0.0) u *= std::conj(u[imax]) / std::abs(u[imax]);
  return {lambda, u};
}

SdpSolution solve_sdp(const SdpProblem& problem, const SdpSettings& settings,
                      SdpWarmState* warm) {
  const int nb = static_cast<int>(problem.block_dims.size());
  std::vector<int> col_offset(nb);
  int n = 0;
  for (int b = 0; b < nb; ++b) {
    col_offset[b] = n;
    n += vech_dim(problem.block_dims[b]);
  }
  const int scalar_offset = n;
  n += problem.num_scalars;

  ConeLayout cones;
  for (const auto& c : problem.constraints) cones.eq_rows += c.equality ? 1 : 0;
  for (const auto& c : problem.constraints) cones.ineq_rows += c.equality ? 0 : 1;
  int m = cones.eq_rows + cones.ineq_rows;
  for (std::size_t i = 0; i < problem.psd2.size(); ++i) {
    cones.psd2_offsets.push_back(m);
    m += 3;
  }
  for (int b = 0; b < nb; ++b) {
    cones.block_offsets.push_back(m);
    cones.block_dims.push_back(problem.block_dims[b]);
    m += vech_dim(problem.block_dims[b]);
  }
  cones.total = m;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd bvec = Eigen::VectorXd::Zero(m);

  auto expr_to_row = [&](const SdpExpr& e, double sign) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (const auto& [blk, f] : e.mat_terms) {
      std::vector<double> buf(vech_dim(problem.block_dims[blk]));
      vech(f, buf.data());
      for (std::size_t k = 0; k < buf.size(); ++k)
        row[col_offset[blk] + static_cast<int>(k)] += sign * buf[k];
    }
    for (const auto& [idx, coeff] : e.scalar_terms)
      row[scalar_offset + idx] += sign * coeff;
    return row;
  };

  // expr {==,<=} 0 becomes row.x + s = -constant with s in {0} or R+.
  {
    int eq_row = 0;
    int ineq_row = cones.eq_rows;
    for (const auto& c : problem.constraints) {
      const int row = c.equality ? eq_row++ : ineq_row++;
      a.row(row) = expr_to_row(c.expr, 1.0).transpose();
      bvec[row] = -c.expr.constant;
    }
  }
  // psd2 cones: s = svec([[x, 1], [1, y]]), i.e. -x_expr + s1 = x_const etc.
  for (std::size_t i = 0; i < problem.psd2.size(); ++i) {
    const int base = cones.psd2_offsets[i];
    a.row(base + 0) = expr_to_row(problem.psd2[i].x, -1.0).transpose();
    bvec[base + 0] = problem.psd2[i].x.constant;
    a.row(base + 1) = expr_to_row(problem.psd2[i].y, -1.0).transpose();
    bvec[base + 1] = problem.psd2[i].y.constant;
    bvec[base + 2] = kSqrt2;  // fixed off-diagonal 1
  }
  // Variable-block PSD membership: s = vec(V_b).
  for (int b = 0; b < nb; ++b) {
    const int base = cones.block_offsets[b];
    for (int k = 0; k < vech_dim(problem.block_dims[b]); ++k)
      a(base + k, col_offset[b] + k) = -1.0;
  }

  // minimize -objective
  Eigen::VectorXd cvec = expr_to_row(problem.objective, -1.0);

  // --- Scaling. Rows belonging to one cone share a factor so the cone
  // geometry is preserved; same for the columns of one Hermitian block.
  Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(n);
  {
    auto group_of_row = [&](int r) -> int {
      if (r < cones.eq_rows + cones.ineq_rows) return r;  // own group
      int g = cones.eq_rows + cones.ineq_rows;
      for (std::size_t i = 0; i < cones.psd2_offsets.size(); ++i)
        if (r < cones.psd2_offsets[i] + 3) return g + static_cast<int>(i);
      g += static_cast<int>(cones.psd2_offsets.size());
      for (std::size_t bj = 0; bj < cones.block_offsets.size(); ++bj) {
        const int end = cones.block_offsets[bj] + vech_dim(cones.block_dims[bj]);
        if (r < end) return g + static_cast<int>(bj);
      }
      return g;
    };
    auto group_of_col = [&](int col) -> int {
      for (int b = 0; b < nb; ++b)
        if (col < col_offset[b] + vech_dim(problem.block_dims[b])) return b;
      return nb + (col - scalar_offset);
    };
    for (int pass = 0; pass < 3; ++pass) {
      std::vector<double> rmax(m, 0.0), cmax(n, 0.0);
      for (int r = 0; r < m; ++r)
        for (int col = 0; col < n; ++col) {
          const double v = std::abs(a(r, col));
          rmax[r] = std::max(rmax[r], v);
          cmax[col] = std::max(cmax[col], v);
        }
      std::vector<double> rgroup(m, 0.0), cgroup(n, 0.0);
      for (int r = 0; r < m; ++r) {
        const int g = group_of_row(r);
        for (int r2 = 0; r2 < m; ++r2)
          if (group_of_row(r2) == g) rgroup[r] = std::max(rgroup[r], rmax[r2]);
      }
      for (int col = 0; col < n; ++col) {
        const int g = group_of_col(col);
        for (int c2 = 0; c2 < n; ++c2)
          if (group_of_col(c2) == g) cgroup[col] = std::max(cgroup[col], cmax[c2]);
      }
      for (int r = 0; r < m; ++r) {
        const double f = 1.0 / std::sqrt(std::max(rgroup[r], 1e-12));
        a.row(r) *= f;
        bvec[r] *= f;
        row_scale[r] *= f;
      }
      for (int col = 0; col < n; ++col) {
        const double f = 1.0 / std::sqrt(std::max(cgroup[col], 1e-12));
        a.col(col) *= f;
        cvec[col] *= f;
        col_scale[col] *= f;
      }
    }
  }
  const double b_norm = bvec.norm();
  const double c_norm = cvec.norm();
  const double sb = 1.0 / std::max(b_norm, 1e-10);
  const double sc = 1.0 / std::max(c_norm, 1e-10);
  bvec *= sb;
  cvec *= sc;

  auto extract = [&](const Eigen::VectorXd& xs) {
    SdpSolution out;
    out.blocks.resize(nb);
    const double unscale = 1.0 / sb;
    for (int b = 0; b < nb; ++b) {
      const int d = problem.block_dims[b];
      std::vector<double> buf(vech_dim(d));
      for (int k = 0; k < vech_dim(d); ++k)
        buf[k] = xs[col_offset[b] + k] * col_scale[col_offset[b] + k] * unscale;
      out.blocks[b] = unvech(buf.data(), d);
    }
    out.scalars.resize(problem.num_scalars);
    for (int k = 0; k < problem.num_scalars; ++k)
      out.scalars[k] = xs[scalar_offset + k] * col_scale[scalar_offset + k] * unscale;
    return out;
  };

  auto eval_expr = [&](const SdpExpr& e, const SdpSolution& sol) {
    double v = e.constant;
    for (const auto& [blk, f] : e.mat_terms)
      v += (f.conjugate().cwiseProduct(sol.blocks[blk])).sum().real();
    for (const auto& [idx, coeff] : e.scalar_terms) v += coeff * sol.scalars[idx];
    return v;
  };

  auto true_residuals = [&](SdpSolution& sol) {
    double worst = 0.0;
    int worst_row = -1, row_idx = -1;
    for (const auto& c : problem.constraints) {
      ++row_idx;
      double v = eval_expr(c.expr, sol);
      // Normalize by the magnitude of the row data at the iterate.
      double mag = std::abs(c.expr.constant);
      for (const auto& [blk, f] : c.expr.mat_terms)
        mag = std::max(mag, sol.blocks[blk].cwiseAbs().maxCoeff() *
                                f.cwiseAbs().maxCoeff());
      for (const auto& [idx, coeff] : c.expr.scalar_terms)
        mag = std::max(mag, std::abs(coeff * sol.scalars[idx]));
      mag = std::max(mag, 1e-12);
      v = c.equality ? std::abs(v) : std::max(v, 0.0);
      if (v / mag > worst) { worst = v / mag; worst_row = row_idx; }
    }
    if (std::getenv("STARMEC_SDP_ROWDEBUG") && worst_row >= 0)
      std::fprintf(stderr, "    worst row %d of %d: %.3e (eq=%d terms m=%zu s=%zu const=%.3e)\n",
                   worst_row, (int)problem.constraints.size(), worst,
                   (int)problem.constraints[worst_row].equality,
                   problem.constraints[worst_row].expr.mat_terms.size(),
                   problem.constraints[worst_row].expr.scalar_terms.size(),
                   problem.constraints[worst_row].expr.constant);
    for (const auto& p2 : problem.psd2) {
      const double xv = eval_expr(p2.x, sol);
      const double yv = eval_expr(p2.y, sol);
      const double tr = xv + yv;
      const double det = xv * yv - 1.0;
      const double disc = std::sqrt(std::max(tr * tr - 4.0 * det, 0.0));
      const double lmin = 0.5 * (tr - disc);
      const double mag = std::max({std::abs(xv), std::abs(yv), 1.0});
      worst = std::max(worst, std::max(-lmin, 0.0) / mag);
    }
    sol.primal_residual = worst;
    double min_eig = 0.0;
    for (const auto& blk : sol.blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(real_embedding(blk));
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff() /
                                      std::max(1.0, blk.cwiseAbs().maxCoeff()));
    }
    sol.psd_violation = min_eig;
  };

  // Homogeneous self-dual embedding solved by operator splitting: the
  // iterate carries (x, y, tau) with slack mirror (0, s, kappa), so a true
  // duality gap is available and stalled creep cannot masquerade as
  // convergence.
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += 1.0;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);

  auto apply_ik_inv = [&](const Eigen::VectorXd& rx, const Eigen::VectorXd& ry,
                          Eigen::VectorXd* zx, Eigen::VectorXd* zy) {
    *zx = ldlt.solve(rx - a.transpose() * ry);
    *zy = ry + a * *zx;
  };

  Eigen::VectorXd g_x(n), g_y(m);
  apply_ik_inv(cvec, bvec, &g_x, &g_y);
  const double denom = 1.0 + cvec.dot(g_x) + bvec.dot(g_y);

  Eigen::VectorXd ux = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd uy = Eigen::VectorXd::Zero(m);
  double utau = 1.0;
  Eigen::VectorXd vy = Eigen::VectorXd::Zero(m);
  double vkappa = 1.0;
  if (warm && warm->x.size() == n + m + 1 && warm->s.size() == m + 1) {
    ux = warm->x.head(n);
    uy = warm->x.segment(n, m);
    utau = warm->x[n + m];
    vy = warm->s.head(m);
    vkappa = warm->s[m];
  }

  // Dual-cone projection: equality duals are free, the rest self-dual.
  auto project_dual_cone = [&](Eigen::VectorXd& v) {
    for (int r = cones.eq_rows; r < cones.eq_rows + cones.ineq_rows; ++r)
      v[r] = std::max(v[r], 0.0);
    for (int off : cones.psd2_offsets) project_psd2(v.data() + off);
    for (std::size_t bi = 0; bi < cones.block_offsets.size(); ++bi) {
      const int d = cones.block_dims[bi];
      const int off = cones.block_offsets[bi];
      const Eigen::MatrixXcd h = unvech(v.data() + off, d);
      const Eigen::MatrixXcd hp = project_hpsd(h, nullptr);
      vech(hp, v.data() + off);
    }
  };

  SdpSolution best;
  bool have_best = false;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  int iter = 0;
  const double alpha = settings.over_relaxation;
  for (iter = 1; iter <= settings.max_iterations; ++iter) {
    // ut = (I + Q)^{-1} (u + v)
    const Eigen::VectorXd wx = ux;  // v_x is identically zero
    const Eigen::VectorXd wy = uy + vy;
    const double wtau = utau + vkappa;
    Eigen::VectorXd px(n), py(m);
    apply_ik_inv(wx, wy, &px, &py);
    double ttau = (wtau + cvec.dot(px) + bvec.dot(py)) / denom;
    Eigen::VectorXd tx = px - ttau * g_x;
    Eigen::VectorXd ty = py - ttau * g_y;

    // over-relaxation, then the two cone projections
    tx = alpha * tx + (1.0 - alpha) * ux;
    ty = alpha * ty + (1.0 - alpha) * uy;
    ttau = alpha * ttau + (1.0 - alpha) * utau;

    ux = tx;  // free cone
    Eigen::VectorXd uy_new = ty - vy;
    project_dual_cone(uy_new);
    const double utau_new = std::max(ttau - vkappa, 0.0);
    vy += uy_new - ty;
    vkappa += utau_new - ttau;
    uy = uy_new;
    utau = utau_new;

    if (iter % settings.check_every == 0 || iter == settings.max_iterations) {
      if (utau > 1e-9) {
        const Eigen::VectorXd x = ux / utau;
        const Eigen::VectorXd s = vy / utau;
        const Eigen::VectorXd y = uy / utau;
        const double pri = (a * x + s - bvec).norm() / (1.0 + bvec.norm());
        const double dua =
            (a.transpose() * y + cvec).norm() / (1.0 + cvec.norm());
        const double cx = cvec.dot(x);
        const double by = bvec.dot(y);
        const double gap =
            std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));

        SdpSolution cand = extract(x);
        cand.objective = eval_expr(problem.objective, cand);
        true_residuals(cand);
        cand.iterations = iter;
        cand.stall = std::isnan(prev_obj)
                         ? gap
                         : std::abs(cand.objective - prev_obj) /
                               std::max(1.0, std::abs(cand.objective));
        prev_obj = cand.objective;
        best = cand;
        have_best = true;
        if (std::getenv("STARMEC_SDP_DEBUG") && iter % 5000 == 0)
          std::fprintf(stderr,
                       "  sdp iter %d pri %.2e dua %.2e gap %.2e psd %.2e tau %.2e obj %.6e\n",
                       iter, cand.primal_residual, dua, gap,
                       cand.psd_violation, utau, cand.objective);
        if (cand.primal_residual <= settings.tol_primal &&
            cand.psd_violation >= -settings.tol_psd &&
            dua <= settings.tol_dual && gap <= settings.tol_stall) {
          best.status = SdpStatus::Converged;
          break;
        }
      } else if (iter > 20 * settings.check_every) {
        break;  // driven to tau = 0: no recoverable primal point
      }
    }
  }

  if (warm) {
    warm->x.resize(n + m + 1);
    warm->x << ux, uy, utau;
    warm->s.resize(m + 1);
    warm->s << vy, vkappa;
    warm->rho = 1.0;
  }
  if (!have_best) {
    best = extract(Eigen::VectorXd::Zero(n));
    best.objective = eval_expr(problem.objective, best);
    true_residuals(best);
  }
  best.iterations = std::min(iter, settings.max_iterations);
  return best;
}

}  // namespace starmec
