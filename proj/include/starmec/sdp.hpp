#pragma once

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

namespace starmec {

/// Real affine expression over Hermitian matrix blocks and scalars:
///   sum_b Re Tr(F_b V_b) + sum_k a_k s_k + constant.
struct SdpExpr {
  std::vector<std::pair<int, Eigen::MatrixXcd>> mat_terms;  // (block, Hermitian F)
  std::vector<std::pair<int, double>> scalar_terms;
  double constant = 0.0;

  SdpExpr& add_mat(int block, Eigen::MatrixXcd f) {
    mat_terms.emplace_back(block, std::move(f));
    return *this;
  }
  SdpExpr& add_scalar(int idx, double coeff) {
    scalar_terms.emplace_back(idx, coeff);
    return *this;
  }
};

/// Linear-objective program over Hermitian PSD matrix variables plus free
/// scalars, with affine equality/inequality rows and optional 2x2 PSD
/// coupling blocks of the form [[x, 1], [1, y]] >= 0 for affine x, y.
struct SdpProblem {
  std::vector<int> block_dims;
  int num_scalars = 0;
  SdpExpr objective;  // maximized
  struct Constraint {
    SdpExpr expr;  // expr == 0 or expr <= 0
    bool equality = false;
  };
  std::vector<Constraint> constraints;
  struct Psd2 {
    SdpExpr x;
    SdpExpr y;
  };
  std::vector<Psd2> psd2;
};

enum class SdpStatus { Converged, NotConverged };

struct SdpSolution {
  SdpStatus status = SdpStatus::NotConverged;
  double objective = 0.0;
  std::vector<Eigen::MatrixXcd> blocks;
  Eigen::VectorXd scalars;
  double primal_residual = 0.0;  // worst normalized affine violation
  double psd_violation = 0.0;    // most negative block eigenvalue (>= 0 if none)
  double stall = 0.0;            // last relative objective change between checks
  int iterations = 0;
};

struct SdpSettings {
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double tol_psd = 1e-8;
  double tol_stall = 1e-7;  // duality-gap bound; comfortably inside 1e-6
  int max_iterations = 30000;
  int check_every = 25;
  double rho = 1.0;
  double over_relaxation = 1.6;
};

/// Warm-start state reusable across solves of structurally identical
/// problems (same dims and row layout); contents are opaque.
struct SdpWarmState {
  Eigen::VectorXd x, s, u;
  double rho = 0.0;
};

/// First-order operator-splitting (ADMM) solve. Hermitian blocks are
/// handled through their 2M x 2M real symmetric embedding inside the cone
/// projection; the complex structure is restored on extraction, so returned
/// blocks are exactly Hermitian.
SdpSolution solve_sdp(const SdpProblem& problem, const SdpSettings& settings = {},
                      SdpWarmState* warm = nullptr);

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix. The
/// eigenvector phase is fixed by making its largest-magnitude entry real
/// and nonnegative so results are deterministic.
std::pair<double, Eigen::VectorXcd> leading_eig(const Eigen::MatrixXcd& a);

}  // namespace starmec
