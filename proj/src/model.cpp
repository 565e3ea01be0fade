#include "starmec/model.hpp"

#include <algorithm>
#include <cmath>

namespace starmec {

namespace {

double log2_1p(double x) { return std::log2(1.0 + x); }

double channel_gain_up(const ChannelSet& channels,
                       const StarCoefficients& coeffs, int ue) {
  const std::complex<double> h = compose_channel(channels, coeffs, ue, Direction::Up);
  return std::norm(h);
}

}  // namespace

std::complex<double> compose_channel(const ChannelSet& channels,
                                     const StarCoefficients& coeffs, int ue,
                                     Direction direction) {
  const int m = channels.num_elements();
  if (coeffs.num_elements() != m)
    throw std::invalid_argument("coefficient/channel element count mismatch");
  if (ue < 0 || ue >= channels.num_ues())
    throw std::out_of_range("UE index out of range");
  const Mode k = mode_of(channels.sides[ue]);
  const Eigen::VectorXcd& ue_vec = direction == Direction::Down
                                       ? channels.ris_ue_down[ue]
                                       : channels.ris_ue_up[ue];
  const Eigen::VectorXcd& ap_vec = direction == Direction::Down
                                       ? channels.ap_ris_down
                                       : channels.ap_ris_up;
  if (ue_vec.size() != m || ap_vec.size() != m)
    throw std::invalid_argument("channel vector length mismatch");
  const Eigen::VectorXcd c = coeffs.element_coeffs(direction, k);
  std::complex<double> sum = 0.0;
  for (int e = 0; e < m; ++e) sum += ue_vec[e] * c[e] * ap_vec[e];
  return sum;
}

double harvested_energy(const SystemParams& params, const ChannelSet& channels,
                        const StarCoefficients& coeffs, double tau0, int ue) {
  if (tau0 < 0.0) throw std::domain_error("tau0 must be nonnegative");
  const std::complex<double> h = compose_channel(channels, coeffs, ue, Direction::Down);
  return params.eta * tau0 * params.ap_power_w * std::norm(h);
}

double offload_bits(const SystemParams& params, const ChannelSet& channels,
                    const StarCoefficients& coeffs,
                    const AllocationState& alloc, Protocol protocol, int ue) {
  const Side side = channels.sides[ue];
  const double window = alloc.offload_window(protocol, side, params.period_s);
  if (window <= 0.0) return 0.0;
  const double signal = alloc.p[ue] * channel_gain_up(channels, coeffs, ue);
  double interference = 0.0;
  for (int j = 0; j < channels.num_ues(); ++j) {
    if (j == ue) continue;
    // TS slots only see UEs sharing the surface mode.
    if (protocol == Protocol::Ts && channels.sides[j] != side) continue;
    interference += alloc.p[j] * channel_gain_up(channels, coeffs, j);
  }
  const double sinr = signal / (interference + params.noise_power_w);
  return window * params.bandwidth_hz * log2_1p(sinr);
}

std::pair<double, double> local_bits_and_energy(const SystemParams& params,
                                                const AllocationState& alloc,
                                                int ue) {
  const double window = params.period_s - alloc.tau0;
  if (window <= 0.0) return {0.0, 0.0};
  const double f = alloc.f[ue];
  const double bits = f * window / params.cycles(ue);
  const double energy = params.kappa * window * f * f * f;
  return {bits, energy};
}

bool RateReport::feasible(double tol) const {
  if (!violations.empty()) return false;
  for (double r : energy_residual_norm)
    if (r > tol) return false;
  return time_residual <= tol && power_residual <= tol && freq_residual <= tol;
}

double RateReport::max_residual() const {
  double r = std::max({time_residual, power_residual, freq_residual});
  for (double e : energy_residual_norm) r = std::max(r, e);
  return r;
}

RateReport evaluate(const SystemParams& params, const ChannelSet& channels,
                    const StarCoefficients& coeffs,
                    const AllocationState& alloc, Protocol protocol) {
  const int n = channels.num_ues();
  RateReport rep;
  rep.local_bits.resize(n);
  rep.offload_bits.resize(n);
  rep.harvested_j.resize(n);
  rep.consumed_j.resize(n);
  rep.energy_residual_j.resize(n);
  rep.energy_residual_norm.resize(n);

  for (int i = 0; i < n; ++i) {
    const auto [bits_loc, e_loc] = local_bits_and_energy(params, alloc, i);
    const double bits_off = offload_bits(params, channels, coeffs, alloc, protocol, i);
    const double window =
        alloc.offload_window(protocol, channels.sides[i], params.period_s);
    const double e_off = alloc.p[i] * std::max(window, 0.0);
    rep.local_bits[i] = bits_loc;
    rep.offload_bits[i] = bits_off;
    rep.harvested_j[i] = harvested_energy(params, channels, coeffs, alloc.tau0, i);
    rep.consumed_j[i] = e_loc + e_off;
    rep.energy_residual_j[i] = rep.consumed_j[i] - rep.harvested_j[i];
    const double scale = std::max(rep.harvested_j[i], 1e-300);
    rep.energy_residual_norm[i] = rep.energy_residual_j[i] / scale;
    rep.total_bits += bits_loc + bits_off;
  }

  const double used_time = protocol == Protocol::Ts
                               ? alloc.tau0 + alloc.tau_r + alloc.tau_t
                               : alloc.tau0;
  rep.time_residual = (used_time - params.period_s) / params.period_s;
  rep.power_residual = (alloc.p.size() ? alloc.p.maxCoeff() - params.p_max_w
                                       : -params.p_max_w) / params.p_max_w;
  rep.freq_residual = (alloc.f.size() ? alloc.f.maxCoeff() - params.f_max_hz
                                      : -params.f_max_hz) / params.f_max_hz;
  rep.violations = coeffs.violations(protocol);
  if (alloc.tau0 < 0.0) rep.violations.push_back("tau0 negative");
  if (alloc.p.size() && alloc.p.minCoeff() < 0.0)
    rep.violations.push_back("negative transmit power");
  if (alloc.f.size() && alloc.f.minCoeff() < 0.0)
    rep.violations.push_back("negative CPU frequency");
  return rep;
}

}  // namespace starmec
