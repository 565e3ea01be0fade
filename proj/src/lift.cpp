#include "starmec/lift.hpp"

#include <cmath>

#include "starmec/sdp.hpp"

namespace starmec {

CascadeSet build_cascades(const ChannelSet& channels) {
  const int m = channels.num_elements();
  const int n = channels.num_ues();
  CascadeSet cs;
  cs.up.resize(n);
  cs.down.resize(n);
  cs.h_up.resize(n);
  cs.g_down.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXcd cu(m), cd(m);
    for (int e = 0; e < m; ++e) {
      cu[e] = channels.ris_ue_up[i][e] * channels.ap_ris_up[e];
      cd[e] = channels.ris_ue_down[i][e] * channels.ap_ris_down[e];
    }
    cs.up[i] = cu;
    cs.down[i] = cd;
    const Eigen::VectorXcd cuc = cu.conjugate();
    const Eigen::VectorXcd cdc = cd.conjugate();
    cs.h_up[i] = cuc * cuc.adjoint();
    cs.g_down[i] = cdc * cdc.adjoint();
  }
  return cs;
}

LiftedCoefficients lift_coefficients(const StarCoefficients& coeffs) {
  LiftedCoefficients lc;
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXcd u = coeffs.element_coeffs(static_cast<Direction>(n),
                                                       static_cast<Mode>(k));
      lc.v[n][k] = u * u.adjoint();
    }
  return lc;
}

CoeffStructure CoeffStructure::conventional(int m) {
  CoeffStructure s{std::vector<int>(m, -1), {}, false};
  for (int e = 0; e < m; ++e) s.pin[e] = e < m / 2 ? 0 : 1;
  return s;
}

StarCoefficients extract_coefficients(
    const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v,
    const CoeffStructure& structure) {
  const int m = static_cast<int>(v[0][0].rows());
  StarCoefficients out = StarCoefficients::uniform(m, 0.5);

  for (int n = 0; n < 2; ++n) {
    std::array<Eigen::VectorXcd, 2> u;
    for (int k = 0; k < 2; ++k) {
      const auto [lambda, vec] = leading_eig(v[n][k]);
      u[k] = std::sqrt(std::max(lambda, 0.0)) * vec;
    }
    const bool unit = structure.uplink_unit_amplitude &&
                      static_cast<Direction>(n) == Direction::Up;
    for (int e = 0; e < m; ++e) {
      double beta_r = std::norm(u[0][e]);
      double beta_t = std::norm(u[1][e]);
      double theta_r = std::arg(u[0][e]);
      double theta_t = std::arg(u[1][e]);
      if (theta_r < 0.0) theta_r += 2.0 * M_PI;
      if (theta_t < 0.0) theta_t += 2.0 * M_PI;
      const int up_pin = static_cast<Direction>(n) == Direction::Up &&
                                 !structure.uplink_pin.empty()
                             ? structure.uplink_pin[e]
                             : -1;
      if (unit) {
        beta_r = 1.0;
        beta_t = 1.0;
      } else if (up_pin == 0) {
        beta_r = 1.0;
        beta_t = 0.0;
      } else if (up_pin == 1) {
        beta_r = 0.0;
        beta_t = 1.0;
      } else if (structure.pin[e] == 0) {
        beta_r = 1.0;
        beta_t = 0.0;
      } else if (structure.pin[e] == 1) {
        beta_r = 0.0;
        beta_t = 1.0;
      } else {
        const double sum = beta_r + beta_t;
        if (sum > 1e-300) {
          beta_r /= sum;
          beta_t /= sum;
        } else {
          beta_r = beta_t = 0.5;
        }
      }
      out.beta[n][0][e] = beta_r;
      out.beta[n][1][e] = beta_t;
      out.theta[n][0][e] = theta_r;
      out.theta[n][1][e] = theta_t;
    }
  }
  return out;
}

double max_rank_residual(
    const std::array<std::array<Eigen::MatrixXcd, 2>, 2>& v) {
  double worst = 0.0;
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 2; ++k) {
      const double tr = v[n][k].real().trace();
      if (tr <= 1e-300) continue;
      const auto [lambda, vec] = leading_eig(v[n][k]);
      worst = std::max(worst, (tr - lambda) / tr);
    }
  return worst;
}

}  // namespace starmec
