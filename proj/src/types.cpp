#include "starmec/types.hpp"

#include <cmath>

namespace starmec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Es: return "ES";
    case Protocol::Ms: return "MS";
    case Protocol::Ts: return "TS";
    case Protocol::ConventionalRis: return "conventional";
  }
  return "?";
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "ES" || s == "es") return Protocol::Es;
  if (s == "MS" || s == "ms") return Protocol::Ms;
  if (s == "TS" || s == "ts") return Protocol::Ts;
  if (s == "conventional" || s == "CONV" || s == "conv")
    return Protocol::ConventionalRis;
  throw std::invalid_argument("unknown protocol: " + s);
}

void SystemParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(bandwidth_hz, "bandwidth_hz");
  positive(noise_power_w, "noise_power_w");
  positive(eta, "eta");
  if (eta > 1.0) throw std::invalid_argument("eta must be in (0,1]");
  positive(p_max_w, "p_max_w");
  positive(f_max_hz, "f_max_hz");
  positive(kappa, "kappa");
  positive(period_s, "period_s");
  positive(ap_power_w, "ap_power_w");
  positive(epsilon_tol, "epsilon_tol");
  positive(delta_tol, "delta_tol");
  if (num_elements <= 0) throw std::invalid_argument("num_elements must be positive");
  if (num_ues <= 0) throw std::invalid_argument("num_ues must be positive");
  if (n_max <= 0) throw std::invalid_argument("n_max must be positive");
  if (static_cast<int>(cycles_per_bit.size()) != num_ues)
    throw std::invalid_argument("cycles_per_bit must have one entry per UE");
  for (double c : cycles_per_bit) positive(c, "cycles_per_bit");
}

int UePlacement::count(Side s) const {
  int n = 0;
  for (Side x : side) n += (x == s);
  return n;
}

void UePlacement::validate() const {
  if (side.size() != ue_ris_distance_m.size())
    throw std::invalid_argument("placement arrays must have equal length");
  if (!(ap_ris_distance_m > 0.0))
    throw std::domain_error("AP-RIS distance must be positive");
  for (double d : ue_ris_distance_m)
    if (!(d > 0.0)) throw std::domain_error("UE-RIS distance must be positive");
}

void ChannelSet::validate() const {
  const int m = num_elements();
  const int i = num_ues();
  auto check = [m](const Eigen::VectorXcd& v) {
    if (v.size() != m) throw std::invalid_argument("channel vector length mismatch");
    if (!v.allFinite()) throw std::invalid_argument("channel entries must be finite");
  };
  check(ap_ris_down);
  check(ap_ris_up);
  if (static_cast<int>(ris_ue_up.size()) != i ||
      static_cast<int>(sides.size()) != i)
    throw std::invalid_argument("per-UE channel arrays must have equal length");
  for (int u = 0; u < i; ++u) {
    check(ris_ue_down[u]);
    check(ris_ue_up[u]);
  }
}

ChannelSet ChannelSet::zeros(int m, int i) {
  ChannelSet cs;
  cs.ap_ris_down = Eigen::VectorXcd::Zero(m);
  cs.ap_ris_up = Eigen::VectorXcd::Zero(m);
  cs.ris_ue_down.assign(i, Eigen::VectorXcd::Zero(m));
  cs.ris_ue_up.assign(i, Eigen::VectorXcd::Zero(m));
  cs.sides.assign(i, Side::Reflection);
  return cs;
}

Eigen::VectorXcd StarCoefficients::element_coeffs(Direction n, Mode k) const {
  const auto& b = betas(n, k);
  const auto& t = thetas(n, k);
  Eigen::VectorXcd out(b.size());
  for (std::size_t m = 0; m < b.size(); ++m)
    out[m] = std::sqrt(b[m]) * std::complex<double>(std::cos(t[m]), std::sin(t[m]));
  return out;
}

StarCoefficients StarCoefficients::uniform(int m, double beta_reflect) {
  StarCoefficients c;
  for (int n = 0; n < 2; ++n) {
    c.beta[n][0].assign(m, beta_reflect);
    c.beta[n][1].assign(m, 1.0 - beta_reflect);
    c.theta[n][0].assign(m, 0.0);
    c.theta[n][1].assign(m, 0.0);
  }
  return c;
}

StarCoefficients StarCoefficients::ts_default(int m) {
  StarCoefficients c = uniform(m, 0.5);
  c.betas(Direction::Up, Mode::Reflect).assign(m, 1.0);
  c.betas(Direction::Up, Mode::Transmit).assign(m, 1.0);
  return c;
}

std::vector<std::string> StarCoefficients::violations(Protocol protocol) const {
  std::vector<std::string> out;
  const int m = num_elements();
  const double tol = 1e-9;
  auto range_check = [&](Direction n, Mode k, const char* name) {
    for (double b : betas(n, k))
      if (b < -tol || b > 1.0 + tol) {
        out.push_back(std::string(name) + ": amplitude outside [0,1]");
        return;
      }
  };
  range_check(Direction::Down, Mode::Reflect, "down/reflect");
  range_check(Direction::Down, Mode::Transmit, "down/transmit");
  range_check(Direction::Up, Mode::Reflect, "up/reflect");
  range_check(Direction::Up, Mode::Transmit, "up/transmit");

  auto sum_check = [&](Direction n, const char* name) {
    const auto& br = betas(n, Mode::Reflect);
    const auto& bt = betas(n, Mode::Transmit);
    for (int e = 0; e < m; ++e)
      if (std::abs(br[e] + bt[e] - 1.0) > tol) {
        out.push_back(std::string(name) + ": beta_r + beta_t != 1");
        return;
      }
  };
  sum_check(Direction::Down, "downlink");
  if (protocol == Protocol::Es || protocol == Protocol::Ms ||
      protocol == Protocol::ConventionalRis) {
    sum_check(Direction::Up, "uplink");
  }
  if (protocol == Protocol::Ms) {
    for (Mode k : {Mode::Reflect, Mode::Transmit})
      for (double b : betas(Direction::Up, k))
        if (std::min(std::abs(b), std::abs(1.0 - b)) > tol) {
          out.push_back("uplink: MS amplitude not binary");
          return out;
        }
  }
  if (protocol == Protocol::Ts) {
    // Each uplink slot runs mode-pure at unit amplitude.
    for (Mode k : {Mode::Reflect, Mode::Transmit})
      for (double b : betas(Direction::Up, k))
        if (std::abs(b - 1.0) > tol) {
          out.push_back("uplink: TS amplitude not unit in active mode");
          return out;
        }
  }
  return out;
}

AllocationState AllocationState::zeros(int num_ues) {
  AllocationState a;
  a.p = Eigen::VectorXd::Zero(num_ues);
  a.f = Eigen::VectorXd::Zero(num_ues);
  return a;
}

double AllocationState::offload_window(Protocol protocol, Side side,
                                       double period_s) const {
  if (protocol == Protocol::Ts)
    return side == Side::Reflection ? tau_r : tau_t;
  return period_s - tau0;
}

}  // namespace starmec
