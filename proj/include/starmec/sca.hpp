#pragma once

#include <cstdint>
#include <optional>

#include "starmec/lift.hpp"
#include "starmec/model.hpp"
#include "starmec/sdp.hpp"
#include "starmec/smooth.hpp"
#include "starmec/types.hpp"

namespace starmec {

/// Weights and thresholds of the penalty terms and of the rank-one
/// linearization. Nonpositive mu/nu means "pick automatically from the
/// current objective scale".
struct PenaltySettings {
  double mu = -1.0;  // negative: derive from the objective scale
  double nu = -1.0;
  double rank_eps = 1e-6;  // final per-block threshold, relative to Tr(V)
  double growth = 10.0;
  // Continuation for the rank constraint: the threshold starts loose and
  // decays each pass so the dominant eigenvector can actually move.
  double rank_eps_start = 0.5;
  double rank_decay = 0.01;
  int mu_escalations = 3;
  int nu_escalations = 5;
  double binariness_tol = 1e-3;
};

/// Affine bound c + g.(p - p0) on the interference log-term
/// R_i = log2(sum_{j != i} p_j gain_j + sigma^2). Upper bound by concavity,
/// exact at the expansion point.
struct AffineBound {
  double constant = 0.0;       // value at the expansion point
  Eigen::VectorXd gradient;    // d/dp_j
  Eigen::VectorXd base_point;  // p at expansion

  double value(const Eigen::VectorXd& p) const {
    return constant + gradient.dot(p - base_point);
  }
};

AffineBound taylor_R(const Eigen::VectorXd& p_current,
                     const Eigen::VectorXd& gains, int ue, double sigma2,
                     const std::vector<int>& group);

/// Affine lower bound on log2(1 + 1/(A B)) around (a0, b0), which is
/// jointly convex on the positive orthant.
struct HatRBound {
  double constant = 0.0;  // value at the base point
  double coeff_a = 0.0;
  double coeff_b = 0.0;
  double a0 = 0.0, b0 = 0.0;

  double value(double a, double b) const {
    return constant + coeff_a * (a - a0) + coeff_b * (b - b0);
  }
};

HatRBound hatR_bound(double a0, double b0);

/// Subgradient linearization of the spectral norm at v_prev:
/// gamma(V) = ||v_prev||_s + <V - v_prev, u u^H>, so Tr(V) - gamma(V) >= 0
/// for PSD V with equality exactly on the aligned rank-one ray.
struct RankLinearization {
  Eigen::MatrixXcd uu;  // u u^H of the previous iterate
  double offset = 0.0;  // ||v_prev||_s - <v_prev, uu> (zero for PSD input)

  double gamma(const Eigen::MatrixXcd& v) const;
  double residual(const Eigen::MatrixXcd& v) const;
};

RankLinearization rank_linearization(const Eigen::MatrixXcd& v_prev);

/// Concave (affine) minorant of beta*(beta-1) at beta0:
/// (2 beta0 - 1) beta - beta0^2; exact at beta0, below everywhere else.
struct BinarySurrogate {
  double slope = 0.0;
  double constant = 0.0;

  double value(double beta) const { return slope * beta + constant; }
};

BinarySurrogate ms_penalty_bound(double beta_current);

/// Resource-allocation subproblem data: everything but (p, f) frozen.
struct ResourceProblem {
  double bandwidth_hz = 0.0;
  double sigma2 = 0.0;
  double p_max = 0.0;
  double f_max = 0.0;
  double kappa = 0.0;
  double local_window_s = 0.0;         // T - tau0
  Eigen::VectorXd offload_window_s;    // per UE
  Eigen::VectorXd energy_budget_j;     // per UE
  Eigen::VectorXd gains;               // |h_i^U|^2
  Eigen::VectorXd cycles_per_bit;
  std::vector<int> group;              // interference group per UE

  double objective(const Eigen::VectorXd& p, const Eigen::VectorXd& f) const;
};

struct ResourceResult {
  Eigen::VectorXd p, f;
  double objective = 0.0;
  std::vector<double> trace;  // true objective per SCA pass
  bool feasible = true;
};

ResourceResult solve_resource(const ResourceProblem& problem,
                              const Eigen::VectorXd& p0,
                              const Eigen::VectorXd& f0, double epsilon_rel,
                              const SmoothSettings& smooth, int max_passes);

/// Coefficient-matrix subproblem data: allocation frozen.
struct CoeffProblem {
  const SystemParams* params = nullptr;
  const CascadeSet* cascades = nullptr;
  std::vector<Side> sides;
  CoeffStructure structure;
  double tau0 = 0.0;
  Eigen::VectorXd offload_window_s;  // per UE
  Eigen::VectorXd p, f;
  std::vector<int> group;
  bool ms_penalty = false;
};

struct CoeffResult {
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> v;
  StarCoefficients extracted;
  double relaxed_offload_bits = 0.0;  // from the final lifted blocks
  double max_rank_residual_rel = 0.0;
  int sca_passes = 0;
  bool sdp_converged = true;
  double mu_used = 0.0, nu_used = 0.0;
};

CoeffResult solve_coeff_step(const CoeffProblem& problem,
                             const StarCoefficients& start,
                             const PenaltySettings& penalty,
                             const SdpSettings& sdp, double epsilon_rel,
                             int max_passes, SdpWarmState* warm = nullptr);

/// Offload bits implied by lifted blocks without extraction.
double relaxed_offload_bits(const CoeffProblem& problem,
                            const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v);

/// Knobs shared by every protocol driver.
struct SolveOptions {
  std::uint64_t init_seed = 1;
  int jobs = 1;
  double tau0_step_s = 0.05;
  PenaltySettings penalty;
  SdpSettings sdp;
  SmoothSettings smooth;
  int coeff_max_passes = 20;
  int resource_max_passes = 20;
};

/// Everything a solve returns: the operating point, its evaluation, the
/// per-iteration objective trace and the tau0 search curve when one ran.
struct SolveReport {
  Protocol protocol = Protocol::Es;
  double total_bits = 0.0;
  AllocationState alloc;
  StarCoefficients coeffs;
  RateReport rate;
  std::vector<double> trace;
  std::vector<std::pair<double, double>> tau0_curve;
  int iterations = 0;
  bool converged = false;
  double sdp_relaxed_bits = 0.0;
  double max_rank_residual_rel = 0.0;
};

/// Random-phase starting configuration honoring the structural pins.
StarCoefficients init_coefficients(int m, const CoeffStructure& structure,
                                   std::uint64_t seed);

/// Guarded update of the working configuration: the uplink half of
/// `candidate` is taken only when it does not lose offload bits, the
/// downlink half only when it still covers every UE's current consumption.
/// Keeps the alternation trace monotone despite extraction error.
void accept_coefficients(const SystemParams& params, const ChannelSet& channels,
                         Protocol protocol, const AllocationState& alloc,
                         StarCoefficients& coeffs,
                         const StarCoefficients& candidate);

/// Alternating optimization at a fixed energy-transfer time for the
/// ES-family protocols (ES, MS, conventional restriction).
SolveReport alternate_fixed_tau0(const SystemParams& params,
                                 const ChannelSet& channels, Protocol protocol,
                                 double tau0, const SolveOptions& opts);

/// Linear search over the tau0 grid {step, 2 step, ...} inside (0, T).
SolveReport search_tau0(const SystemParams& params, const ChannelSet& channels,
                        Protocol protocol, const SolveOptions& opts);

}  // namespace starmec
