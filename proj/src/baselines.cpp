#include "starmec/baselines.hpp"

#include <cmath>

namespace starmec {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct GainScan {
  double gain = 0.0;
  std::vector<double> theta;
  std::vector<double> beta;
};

// Best |sum_m sqrt(beta_m) e^{j theta_m} c_m|^2 over per-element grids.
// beta_points == 0 fixes all amplitudes at one.
GainScan best_gain_grid(const Eigen::VectorXcd& c, int phase_points,
                        int beta_points) {
  const int m = static_cast<int>(c.size());
  const int nb = beta_points > 0 ? beta_points : 1;
  GainScan best;
  best.theta.assign(m, 0.0);
  best.beta.assign(m, beta_points > 0 ? 0.0 : 1.0);
  best.gain = -1.0;

  std::vector<int> idx(m, 0);
  const long combos_per_elem = static_cast<long>(phase_points) * nb;
  for (;;) {
    std::complex<double> sum = 0.0;
    for (int e = 0; e < m; ++e) {
      const int bi = idx[e] / phase_points;
      const int ti = idx[e] % phase_points;
      const double beta =
          beta_points > 0 ? static_cast<double>(bi) / (beta_points - 1) : 1.0;
      const double theta = kTwoPi * ti / phase_points;
      sum += std::sqrt(beta) *
             std::complex<double>(std::cos(theta), std::sin(theta)) * c[e];
    }
    const double g = std::norm(sum);
    if (g > best.gain) {
      best.gain = g;
      for (int e = 0; e < m; ++e) {
        const int bi = idx[e] / phase_points;
        const int ti = idx[e] % phase_points;
        best.beta[e] =
            beta_points > 0 ? static_cast<double>(bi) / (beta_points - 1) : 1.0;
        best.theta[e] = kTwoPi * ti / phase_points;
      }
    }
    int e = 0;
    for (; e < m; ++e) {
      if (++idx[e] < combos_per_elem) break;
      idx[e] = 0;
    }
    if (e == m) break;
  }
  return best;
}

std::vector<double> tau0_grid(double step, double period) {
  std::vector<double> grid;
  for (int k = 1;; ++k) {
    const double tau = k * step;
    if (tau >= period - 1e-12) break;
    grid.push_back(tau);
  }
  return grid;
}

StarCoefficients coeffs_from_scans(int m, Side side, const GainScan& up,
                                   const GainScan& down, bool unit_uplink) {
  StarCoefficients c = StarCoefficients::uniform(m, 0.5);
  const Mode k = mode_of(side);
  const Mode other = k == Mode::Reflect ? Mode::Transmit : Mode::Reflect;
  for (int e = 0; e < m; ++e) {
    c.thetas(Direction::Up, k)[e] = up.theta[e];
    c.thetas(Direction::Down, k)[e] = down.theta[e];
    if (unit_uplink) {
      c.betas(Direction::Up, Mode::Reflect)[e] = 1.0;
      c.betas(Direction::Up, Mode::Transmit)[e] = 1.0;
    } else {
      c.betas(Direction::Up, k)[e] = up.beta[e];
      c.betas(Direction::Up, other)[e] = 1.0 - up.beta[e];
    }
    c.betas(Direction::Down, k)[e] = down.beta[e];
    c.betas(Direction::Down, other)[e] = 1.0 - down.beta[e];
  }
  return c;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// Single-UE scan: the uplink and downlink configurations decouple (gain
// monotonicity), so the best grid configuration of each is found first and
// the time/power/frequency grids are scanned on top.
BruteForceResult brute_force_single(const SystemParams& params,
                                    const ChannelSet& channels,
                                    Protocol protocol,
                                    const BruteForceGrids& grids) {
  const int m = params.num_elements;
  const Side side = channels.sides[0];
  const CascadeSet cas = build_cascades(channels);

  const bool unit_uplink = protocol == Protocol::Ts;
  const int up_beta_points = protocol == Protocol::Ms ? 2
                             : unit_uplink            ? 0
                                                      : grids.beta_points;
  const GainScan up = best_gain_grid(cas.up[0], grids.phase_points, up_beta_points);
  const GainScan down =
      best_gain_grid(cas.down[0], grids.phase_points, grids.beta_points);

  const double c_bit = params.cycles(0);
  BruteForceResult best;
  best.alloc = AllocationState::zeros(1);
  best.coeffs = coeffs_from_scans(m, side, up, down, unit_uplink);
  best.total_bits = -1.0;

  auto consider = [&](double tau0, double slot, double p, double f) {
    const double wloc = params.period_s - tau0;
    const double off =
        slot > 0.0 && p > 0.0
            ? slot * params.bandwidth_hz *
                  std::log2(1.0 + p * up.gain / params.noise_power_w)
            : 0.0;
    const double loc = wloc > 0.0 ? f * wloc / c_bit : 0.0;
    if (off + loc > best.total_bits) {
      best.total_bits = off + loc;
      best.alloc.tau0 = tau0;
      if (protocol == Protocol::Ts) {
        best.alloc.tau_r = side == Side::Reflection ? slot : 0.0;
        best.alloc.tau_t = side == Side::Transmission ? slot : 0.0;
      }
      best.alloc.p[0] = p;
      best.alloc.f[0] = f;
    }
  };

  for (const double tau0 : tau0_grid(grids.tau0_step_s, params.period_s)) {
    const double energy = params.eta * tau0 * params.ap_power_w * down.gain;
    const double wloc = params.period_s - tau0;
    std::vector<double> slots;
    if (protocol == Protocol::Ts) {
      const Eigen::VectorXd sv = linspace(0.0, params.period_s - tau0,
                                          grids.time_points);
      slots.assign(sv.data(), sv.data() + sv.size());
    } else {
      slots = {params.period_s - tau0};
    }
    for (const double slot : slots) {
      const double p_cap =
          slot > 0.0 ? std::min(params.p_max_w, energy / slot) : 0.0;
      const Eigen::VectorXd ps = linspace(0.0, p_cap, grids.p_points);
      for (int ip = 0; ip < ps.size(); ++ip) {
        const double rem = energy - ps[ip] * slot;
        const double f_cap =
            wloc > 0.0 && rem > 0.0
                ? std::min(params.f_max_hz, std::cbrt(rem / (params.kappa * wloc)))
                : 0.0;
        const Eigen::VectorXd fs = linspace(0.0, f_cap, grids.f_points);
        for (int jf = 0; jf < fs.size(); ++jf)
          consider(tau0, slot, ps[ip], fs[jf]);
      }
    }
  }
  return best;
}

// Two-UE joint scan; power grids stretch with the per-UE energy budget and
// the CPU frequency is closed-form (the objective is increasing in f).
BruteForceResult brute_force_pair(const SystemParams& params,
                                  const ChannelSet& channels,
                                  Protocol protocol,
                                  const BruteForceGrids& grids) {
  const int m = params.num_elements;
  const CascadeSet cas = build_cascades(channels);
  const double sigma2 = params.noise_power_w;

  struct Config {
    std::vector<double> beta_r, theta_r, theta_t;
  };
  const int nb = protocol == Protocol::Ms ? 2 : grids.beta_points;
  const int nph = grids.phase_points;

  auto enumerate_configs = [&](bool unit_amp, bool uplink) {
    std::vector<Config> configs;
    const int nb_here = unit_amp ? 1 : (uplink ? nb : grids.beta_points);
    const long per_elem = static_cast<long>(nb_here) * nph * nph;
    std::vector<long> idx(m, 0);
    for (;;) {
      Config c;
      c.beta_r.resize(m);
      c.theta_r.resize(m);
      c.theta_t.resize(m);
      for (int e = 0; e < m; ++e) {
        const long bi = idx[e] / (static_cast<long>(nph) * nph);
        const long rest = idx[e] % (static_cast<long>(nph) * nph);
        c.beta_r[e] = unit_amp          ? 1.0
                      : nb_here == 1    ? 1.0
                                        : static_cast<double>(bi) / (nb_here - 1);
        c.theta_r[e] = kTwoPi * (rest / nph) / nph;
        c.theta_t[e] = kTwoPi * (rest % nph) / nph;
      }
      configs.push_back(std::move(c));
      int e = 0;
      for (; e < m; ++e) {
        if (++idx[e] < per_elem) break;
        idx[e] = 0;
      }
      if (e == m) break;
    }
    return configs;
  };

  auto gain = [&](const Eigen::VectorXcd& cascade, const Config& c, Mode mode,
                  bool unit_amp) {
    std::complex<double> sum = 0.0;
    for (int e = 0; e < m; ++e) {
      const double beta = unit_amp ? 1.0
                          : mode == Mode::Reflect ? c.beta_r[e]
                                                  : 1.0 - c.beta_r[e];
      const double theta =
          mode == Mode::Reflect ? c.theta_r[e] : c.theta_t[e];
      sum += std::sqrt(beta) *
             std::complex<double>(std::cos(theta), std::sin(theta)) * cascade[e];
    }
    return std::norm(sum);
  };

  const bool ts = protocol == Protocol::Ts;
  const std::vector<Config> up_configs = enumerate_configs(ts, true);
  const std::vector<Config> down_configs = enumerate_configs(false, false);

  BruteForceResult best;
  best.alloc = AllocationState::zeros(2);
  best.total_bits = -1.0;
  best.coeffs = StarCoefficients::uniform(m, 0.5);

  const std::vector<double> taus = tau0_grid(grids.tau0_step_s, params.period_s);
  for (const Config& dc : down_configs) {
    double e_ue[2];
    for (int i = 0; i < 2; ++i)
      e_ue[i] = gain(cas.down[i], dc, mode_of(channels.sides[i]), false);
    for (const Config& uc : up_configs) {
      double g_ue[2];
      for (int i = 0; i < 2; ++i)
        g_ue[i] = gain(cas.up[i], uc, mode_of(channels.sides[i]), ts);
      for (const double tau0 : taus) {
        const double wloc = params.period_s - tau0;
        double energy[2];
        for (int i = 0; i < 2; ++i)
          energy[i] = params.eta * tau0 * params.ap_power_w * e_ue[i];

        auto scan_windows = [&](double w0, double w1, double tr, double tt) {
          const double caps[2] = {
              w0 > 0.0 ? std::min(params.p_max_w, energy[0] / w0) : 0.0,
              w1 > 0.0 ? std::min(params.p_max_w, energy[1] / w1) : 0.0};
          const Eigen::VectorXd ps0 = linspace(0.0, caps[0], grids.p_points);
          const Eigen::VectorXd ps1 = linspace(0.0, caps[1], grids.p_points);
          const double w[2] = {w0, w1};
          for (int a = 0; a < ps0.size(); ++a)
            for (int b = 0; b < ps1.size(); ++b) {
              const double p[2] = {ps0[a], ps1[b]};
              double bits = 0.0;
              for (int i = 0; i < 2; ++i) {
                const double rem = energy[i] - p[i] * w[i];
                const double f =
                    wloc > 0.0 && rem > 0.0
                        ? std::min(params.f_max_hz,
                                   std::cbrt(rem / (params.kappa * wloc)))
                        : 0.0;
                if (wloc > 0.0) bits += f * wloc / params.cycles(i);
                if (w[i] > 0.0 && p[i] > 0.0) {
                  const bool same_side = channels.sides[0] == channels.sides[1];
                  const double interf =
                      (ts && !same_side) ? 0.0 : p[1 - i] * g_ue[1 - i];
                  bits += w[i] * params.bandwidth_hz *
                          std::log2(1.0 + p[i] * g_ue[i] / (interf + sigma2));
                }
              }
              if (bits > best.total_bits) {
                best.total_bits = bits;
                best.alloc.tau0 = tau0;
                best.alloc.tau_r = tr;
                best.alloc.tau_t = tt;
                best.alloc.p[0] = p[0];
                best.alloc.p[1] = p[1];
              }
            }
        };

        if (!ts) {
          scan_windows(wloc, wloc, 0.0, 0.0);
        } else {
          const Eigen::VectorXd slots = linspace(0.0, params.period_s - tau0,
                                                 grids.time_points);
          for (int s = 0; s < slots.size(); ++s) {
            const double tr = slots[s];
            const double tt = params.period_s - tau0 - tr;
            const double w0 =
                channels.sides[0] == Side::Reflection ? tr : tt;
            const double w1 =
                channels.sides[1] == Side::Reflection ? tr : tt;
            scan_windows(w0, w1, tr, tt);
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

double BruteForceGrids::cost(int m, int num_ues, Protocol protocol) const {
  const double phase = std::pow(static_cast<double>(phase_points), m);
  const double beta = std::pow(static_cast<double>(beta_points), m);
  const double ntau = 1.0 / tau0_step_s;
  if (num_ues == 1) {
    double c = phase * beta * 2.0;
    double inner = static_cast<double>(p_points) * f_points;
    if (protocol == Protocol::Ts) inner *= time_points;
    return c + ntau * inner;
  }
  const double up = protocol == Protocol::Ts ? phase * phase
                                             : phase * phase * beta;
  const double down = phase * phase * beta;
  double inner = ntau * p_points * p_points;
  if (protocol == Protocol::Ts) inner *= time_points;
  return up * down * inner;
}

BruteForceResult brute_force_small(const SystemParams& params,
                                   const ChannelSet& channels,
                                   Protocol protocol,
                                   const BruteForceGrids& grids,
                                   double budget) {
  if (params.num_ues > 2 || params.num_elements > 2)
    throw std::invalid_argument("brute force oracle supports I <= 2, M <= 2");
  if (protocol == Protocol::ConventionalRis)
    throw std::invalid_argument("brute force oracle covers ES/MS/TS only");
  const double cost = grids.cost(params.num_elements, params.num_ues, protocol);
  if (cost > budget)
    throw std::invalid_argument("brute force grids exceed the evaluation budget");
  if (params.num_ues == 1) return brute_force_single(params, channels, protocol, grids);
  return brute_force_pair(params, channels, protocol, grids);
}

double ms_pattern_enumeration(const SystemParams& params,
                              const ChannelSet& channels,
                              const AllocationState& alloc, int phase_points) {
  const int m = params.num_elements;
  const int n = params.num_ues;
  const double w = params.period_s - alloc.tau0;
  if (w <= 0.0) return 0.0;
  int ue_r = -1, ue_t = -1;
  for (int i = 0; i < n; ++i) {
    if (channels.sides[i] == Side::Reflection) {
      if (ue_r >= 0) throw std::invalid_argument("enumeration needs K_r <= 1");
      ue_r = i;
    } else {
      if (ue_t >= 0) throw std::invalid_argument("enumeration needs K_t <= 1");
      ue_t = i;
    }
  }
  const CascadeSet cas = build_cascades(channels);
  const double sigma2 = params.noise_power_w;
  const double wb = w * params.bandwidth_hz;

  // Over a grid the reachable gain set per side depends only on the active
  // elements; the NOMA offload total is quasiconvex in each gain, so only
  // the extreme gains of each side matter.
  auto gain_extremes = [&](int ue, const std::vector<bool>& active) {
    std::pair<double, double> ext{0.0, 0.0};
    if (ue < 0) return ext;
    std::vector<int> elems;
    for (int e = 0; e < m; ++e)
      if (active[e]) elems.push_back(e);
    if (elems.empty()) return ext;
    std::vector<int> idx(elems.size(), 0);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (;;) {
      std::complex<double> sum = 0.0;
      for (std::size_t k = 0; k < elems.size(); ++k) {
        const double theta = kTwoPi * idx[k] / phase_points;
        sum += std::complex<double>(std::cos(theta), std::sin(theta)) *
               cas.up[ue][elems[k]];
      }
      const double g = std::norm(sum);
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      std::size_t k = 0;
      for (; k < elems.size(); ++k) {
        if (++idx[k] < phase_points) break;
        idx[k] = 0;
      }
      if (k == elems.size()) break;
    }
    return std::pair<double, double>{lo, hi};
  };

  auto total = [&](double gr, double gt) {
    const double a = ue_r >= 0 ? alloc.p[ue_r] * gr : 0.0;
    const double x = ue_t >= 0 ? alloc.p[ue_t] * gt : 0.0;
    double bits = 0.0;
    if (ue_r >= 0) bits += wb * std::log2(1.0 + a / (x + sigma2));
    if (ue_t >= 0) bits += wb * std::log2(1.0 + x / (a + sigma2));
    return bits;
  };

  double best = 0.0;
  for (int pattern = 0; pattern < (1 << m); ++pattern) {
    std::vector<bool> reflect(m), transmit(m);
    for (int e = 0; e < m; ++e) {
      reflect[e] = pattern & (1 << e);
      transmit[e] = !reflect[e];
    }
    const auto [gr_lo, gr_hi] = gain_extremes(ue_r, reflect);
    const auto [gt_lo, gt_hi] = gain_extremes(ue_t, transmit);
    for (const double gr : {gr_lo, gr_hi})
      for (const double gt : {gt_lo, gt_hi}) best = std::max(best, total(gr, gt));
  }
  return best;
}

SolveReport conventional_ris_solve(const SystemParams& params,
                                   const ChannelSet& channels,
                                   const SolveOptions& opts) {
  if (params.num_elements % 2 != 0)
    throw std::invalid_argument(
        "conventional baseline splits the surface in half; M must be even");
  return search_tau0(params, channels, Protocol::ConventionalRis, opts);
}

}  // namespace starmec
