#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace starmec {

enum class Protocol { Es, Ms, Ts, ConventionalRis };
enum class Side : int { Reflection = 0, Transmission = 1 };
enum class Direction : int { Down = 0, Up = 1 };
enum class Mode : int { Reflect = 0, Transmit = 1 };

inline Mode mode_of(Side s) {
  return s == Side::Reflection ? Mode::Reflect : Mode::Transmit;
}

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

/// Scalar constants of the system: bandwidth, noise, energy model, mission
/// period, surface/user counts and stopping thresholds. All values in SI
/// units; dBm/GHz conversion happens at config load, not here.
struct SystemParams {
  double bandwidth_hz = 20e6;
  double noise_power_w = 1e-8;  // -50 dBm
  double eta = 0.8;             // RF-to-DC conversion efficiency
  double p_max_w = 0.1;
  double f_max_hz = 8e9;
  double kappa = 1e-28;  // effective capacitance, J*s^2/cycle^3
  double period_s = 1.0;
  double ap_power_w = 1.0;
  int num_elements = 8;
  int num_ues = 4;
  std::vector<double> cycles_per_bit;  // C_i, one entry per UE
  double epsilon_tol = 1e-4;
  double delta_tol = 1e-4;
  int n_max = 50;

  double cycles(int ue) const { return cycles_per_bit.at(ue); }
  void validate() const;
};

/// Where each UE sits relative to the surface.
struct UePlacement {
  double ap_ris_distance_m = 1.0;
  std::vector<Side> side;
  std::vector<double> ue_ris_distance_m;

  int num_ues() const { return static_cast<int>(side.size()); }
  int count(Side s) const;
  void validate() const;
};

/// One realization of all propagation links. Vectors have one entry per
/// surface element; `sides` mirrors the placement so rate expressions can
/// pick the operating mode of each UE without carrying the placement around.
struct ChannelSet {
  Eigen::VectorXcd ap_ris_down;  // AP -> RIS
  Eigen::VectorXcd ap_ris_up;    // RIS -> AP
  std::vector<Eigen::VectorXcd> ris_ue_down;
  std::vector<Eigen::VectorXcd> ris_ue_up;
  std::vector<Side> sides;

  int num_elements() const { return static_cast<int>(ap_ris_down.size()); }
  int num_ues() const { return static_cast<int>(ris_ue_down.size()); }
  void validate() const;

  static ChannelSet zeros(int m, int i);
};

/// Per-element amplitude/phase configuration of the surface for both link
/// directions and both operating modes. ES keeps fractional amplitude
/// splits, MS restricts uplink amplitudes to {0,1}, TS stores the two
/// slot configurations as unit-amplitude mode-pure sets.
struct StarCoefficients {
  // beta[direction][mode][element] in [0,1]; theta likewise in [0, 2pi).
  std::array<std::array<std::vector<double>, 2>, 2> beta;
  std::array<std::array<std::vector<double>, 2>, 2> theta;

  int num_elements() const { return static_cast<int>(beta[0][0].size()); }

  const std::vector<double>& betas(Direction n, Mode k) const {
    return beta[static_cast<int>(n)][static_cast<int>(k)];
  }
  std::vector<double>& betas(Direction n, Mode k) {
    return beta[static_cast<int>(n)][static_cast<int>(k)];
  }
  const std::vector<double>& thetas(Direction n, Mode k) const {
    return theta[static_cast<int>(n)][static_cast<int>(k)];
  }
  std::vector<double>& thetas(Direction n, Mode k) {
    return theta[static_cast<int>(n)][static_cast<int>(k)];
  }

  /// Per-element complex coefficients sqrt(beta) * exp(j theta).
  Eigen::VectorXcd element_coeffs(Direction n, Mode k) const;

  /// Even split, all phases zero.
  static StarCoefficients uniform(int m, double beta_reflect = 0.5);

  /// TS shape: both uplink mode sets at unit amplitude, downlink even split.
  static StarCoefficients ts_default(int m);

  /// Violations of the structural constraints for `protocol`; empty if valid.
  std::vector<std::string> violations(Protocol protocol) const;
};

/// Time split and per-UE transmit power / CPU frequency.
struct AllocationState {
  double tau0 = 0.0;
  double tau_r = 0.0;  // TS only; zero otherwise
  double tau_t = 0.0;
  Eigen::VectorXd p;
  Eigen::VectorXd f;

  static AllocationState zeros(int num_ues);
  double offload_window(Protocol protocol, Side side, double period_s) const;
};

}  // namespace starmec
