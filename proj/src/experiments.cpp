#include "starmec/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "starmec/ms.hpp"
#include "starmec/rng.hpp"
#include "starmec/ts.hpp"

namespace starmec {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw std::runtime_error("config field '" + field + "': " + what);
}

// Quantities are plain SI numbers or strings with a unit suffix
// ("20 MHz", "-50 dBm", "0.8 m").
double parse_quantity(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) config_error(field, "expected number or unit string");
  std::istringstream in(v.get<std::string>());
  double x = 0.0;
  std::string unit;
  if (!(in >> x)) config_error(field, "cannot parse numeric part");
  in >> unit;
  if (unit.empty()) return x;
  if (unit == "Hz") return x;
  if (unit == "kHz") return x * 1e3;
  if (unit == "MHz") return x * 1e6;
  if (unit == "GHz") return x * 1e9;
  if (unit == "W") return x;
  if (unit == "mW") return x * 1e-3;
  if (unit == "dBm") return std::pow(10.0, x / 10.0) * 1e-3;
  if (unit == "dB") return std::pow(10.0, x / 10.0);
  if (unit == "s") return x;
  if (unit == "ms") return x * 1e-3;
  if (unit == "m") return x;
  config_error(field, "unknown unit '" + unit + "'");
}

double get_quantity(const json& obj, const std::string& key,
                    const std::string& scope, double fallback,
                    bool required = false) {
  if (!obj.contains(key)) {
    if (required) config_error(scope + "." + key, "missing");
    return fallback;
  }
  return parse_quantity(obj.at(key), scope + "." + key);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Cell {
  int value_idx;
  int seed_idx;
};

template <typename Fn>
void parallel_cells(int n_values, int n_seeds, int jobs, const Fn& fn) {
  const int total = n_values * n_seeds;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, total));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= total) return;
      try {
        fn(Cell{k / n_seeds, k % n_seeds});
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<SummaryRow> summarize(const std::vector<RunRow>& rows,
                                  const std::vector<double>& values) {
  std::vector<SummaryRow> out;
  for (double v : values) {
    SummaryRow s;
    s.sweep_value = v;
    double sum = 0.0, sum2 = 0.0;
    for (const RunRow& r : rows)
      if (r.sweep_value == v) {
        sum += r.total_bits;
        sum2 += r.total_bits * r.total_bits;
        ++s.count;
      }
    if (s.count > 0) {
      s.mean_bits = sum / s.count;
      if (s.count > 1) {
        const double var =
            std::max(0.0, (sum2 - sum * sum / s.count) / (s.count - 1));
        s.std_bits = std::sqrt(var);
      }
    }
    out.push_back(s);
  }
  return out;
}

SolveReport dispatch_full(const SystemParams& params, const ChannelSet& channels,
                          Protocol protocol, const SolveOptions& opts) {
  switch (protocol) {
    case Protocol::Ts: return solve_ts(params, channels, opts);
    case Protocol::ConventionalRis:
      return conventional_ris_solve(params, channels, opts);
    default: return search_tau0(params, channels, protocol, opts);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  base.validate();
  pathloss.validate();
  if (k_r < 0 || k_t < 0 || k_r + k_t != base.num_ues)
    config_error("system.ues", "reflection + transmission counts must equal I");
  if (seed_count < 1) config_error("seeds.count", "need at least one seed");
  if (sweep_values.empty()) config_error("sweep.values", "empty value list");
  if (sweep_axis != "P0" && sweep_axis != "T" && sweep_axis != "M" &&
      sweep_axis != "I" && sweep_axis != "C" && sweep_axis != "tau0-curve")
    config_error("sweep.axis", "unknown axis '" + sweep_axis + "'");
  for (double v : sweep_values) {
    if (!(v > 0.0)) config_error("sweep.values", "values must be positive");
    if (sweep_axis == "tau0-curve" && v >= base.period_s)
      config_error("sweep.values", "tau0 must stay below the mission period");
    if ((sweep_axis == "M" || sweep_axis == "I") && v != std::floor(v))
      config_error("sweep.values", "count axes need integer values");
  }
  if (sweep_axis == "tau0-curve" && protocol == Protocol::Ts)
    config_error("sweep.axis", "TS allocates its own time; no tau0 curve");
  if (!(solve.tau0_step_s > 0.0) || solve.tau0_step_s >= base.period_s)
    config_error("solver.tau0_step", "must lie in (0, T)");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error: " + std::string(e.what()));
  }

  ExperimentConfig c;
  const json sys = j.value("system", json::object());
  c.base.bandwidth_hz = get_quantity(sys, "bandwidth", "system", 20e6);
  c.base.noise_power_w = get_quantity(sys, "noise_power", "system", 1e-8);
  c.base.eta = get_quantity(sys, "eta", "system", 0.8);
  c.base.p_max_w = get_quantity(sys, "p_max", "system", 0.1);
  c.base.f_max_hz = get_quantity(sys, "f_max", "system", 8e9);
  c.base.kappa = get_quantity(sys, "kappa", "system", 1e-28);
  c.base.period_s = get_quantity(sys, "period", "system", 1.0);
  c.base.ap_power_w = get_quantity(sys, "ap_power", "system", 1.0);
  c.base.num_elements =
      static_cast<int>(get_quantity(sys, "elements", "system", 8));
  c.k_r = static_cast<int>(get_quantity(sys, "ues_reflection", "system", 2));
  c.k_t = static_cast<int>(get_quantity(sys, "ues_transmission", "system", 2));
  c.base.num_ues = c.k_r + c.k_t;
  c.base.epsilon_tol = get_quantity(sys, "epsilon", "system", 1e-4);
  c.base.delta_tol = get_quantity(sys, "delta", "system", 1e-4);
  c.base.n_max = static_cast<int>(get_quantity(sys, "n_max", "system", 50));
  if (sys.contains("cycles_per_bit") && sys.at("cycles_per_bit").is_array()) {
    for (const auto& v : sys.at("cycles_per_bit"))
      c.base.cycles_per_bit.push_back(
          parse_quantity(v, "system.cycles_per_bit"));
    if (static_cast<int>(c.base.cycles_per_bit.size()) != c.base.num_ues)
      config_error("system.cycles_per_bit", "length must equal the UE count");
  } else {
    const double cycles = get_quantity(sys, "cycles_per_bit", "system", 1000.0);
    c.base.cycles_per_bit.assign(c.base.num_ues, cycles);
  }

  const json pl = j.value("pathloss", json::object());
  c.pathloss.rho_linear = get_quantity(pl, "rho", "pathloss", 1e-3);
  c.pathloss.alpha_ue_ris_up =
      get_quantity(pl, "alpha_ue_ris_up", "pathloss", 3.0);
  c.pathloss.alpha_ris_ap_up =
      get_quantity(pl, "alpha_ris_ap_up", "pathloss", 3.0);
  c.pathloss.alpha_ris_ue_down =
      get_quantity(pl, "alpha_ris_ue_down", "pathloss", 3.0);
  c.pathloss.alpha_ap_ris_down =
      get_quantity(pl, "alpha_ap_ris_down", "pathloss", 3.5);

  const json geom = j.value("geometry", json::object());
  c.geometry.ap_ris_distance_m =
      get_quantity(geom, "ap_ris_distance", "geometry", 1.0);
  c.geometry.ue_ris_min_m = get_quantity(geom, "ue_ris_min", "geometry", 0.8);
  c.geometry.ue_ris_max_m = get_quantity(geom, "ue_ris_max", "geometry", 1.5);

  if (j.contains("protocol")) {
    try {
      c.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    } catch (const std::exception& e) {
      config_error("protocol", e.what());
    }
  }

  const json sweep = j.value("sweep", json::object());
  c.sweep_axis = sweep.value("axis", std::string("P0"));
  if (sweep.contains("values")) {
    for (const auto& v : sweep.at("values"))
      c.sweep_values.push_back(parse_quantity(v, "sweep.values"));
  } else {
    c.sweep_values = {c.base.ap_power_w};
  }

  const json seeds = j.value("seeds", json::object());
  c.seed_base =
      static_cast<std::uint64_t>(get_quantity(seeds, "base", "seeds", 1));
  c.seed_count = static_cast<int>(get_quantity(seeds, "count", "seeds", 1));

  const json solver = j.value("solver", json::object());
  c.solve.tau0_step_s = get_quantity(solver, "tau0_step", "solver", 0.05);
  c.solve.jobs = static_cast<int>(get_quantity(solver, "jobs", "solver", 1));

  c.output_path = j.value("output", std::string("results"));

  c.validate();
  return c;
}

SystemParams apply_sweep(const ExperimentConfig& config, double value, int* k_r,
                         int* k_t) {
  SystemParams p = config.base;
  *k_r = config.k_r;
  *k_t = config.k_t;
  if (config.sweep_axis == "P0") {
    p.ap_power_w = value;
  } else if (config.sweep_axis == "T") {
    p.period_s = value;
  } else if (config.sweep_axis == "M") {
    p.num_elements = static_cast<int>(value);
  } else if (config.sweep_axis == "I") {
    const int i = static_cast<int>(value);
    p.num_ues = i;
    *k_r = (i + 1) / 2;
    *k_t = i - *k_r;
    p.cycles_per_bit.assign(i, config.base.cycles_per_bit.front());
  } else if (config.sweep_axis == "C") {
    p.cycles_per_bit.assign(p.num_ues, value);
  }
  return p;
}

ChannelSet make_channels(const ExperimentConfig& config,
                         const SystemParams& params, std::uint64_t seed) {
  int k_r = config.k_r, k_t = config.k_t;
  if (params.num_ues != config.base.num_ues) {
    k_r = (params.num_ues + 1) / 2;
    k_t = params.num_ues - k_r;
  }
  const UePlacement placement =
      sample_placement(config.geometry, k_r, k_t, seed);
  PathLossParams pl = config.pathloss;
  pl.seed = seed;
  return generate_channels(params, placement, pl);
}

RunOutput run_experiment(const ExperimentConfig& config,
                         std::uint64_t seed_offset, int jobs) {
  config.validate();
  const bool curve = config.sweep_axis == "tau0-curve";
  const int nv = static_cast<int>(config.sweep_values.size());
  const int ns = config.seed_count;
  RunOutput out;
  out.rows.resize(static_cast<std::size_t>(nv) * ns);

  parallel_cells(nv, ns, jobs, [&](Cell cell) {
    const double value = config.sweep_values[cell.value_idx];
    int k_r = 0, k_t = 0;
    SystemParams params = apply_sweep(config, value, &k_r, &k_t);
    const std::uint64_t seed =
        config.seed_base + seed_offset + static_cast<std::uint64_t>(cell.seed_idx);
    const ChannelSet channels = make_channels(config, params, seed);
    SolveOptions opts = config.solve;
    opts.jobs = 1;
    opts.init_seed = rng::derive_key(seed, 9001);

    SolveReport rep;
    if (curve) {
      rep = alternate_fixed_tau0(params, channels, config.protocol, value, opts);
    } else {
      rep = dispatch_full(params, channels, config.protocol, opts);
    }

    RunRow row;
    row.protocol = to_string(config.protocol);
    row.sweep_axis = config.sweep_axis;
    row.sweep_value = value;
    row.seed = seed;
    row.total_bits = rep.total_bits;
    row.iterations = rep.iterations;
    row.converged = rep.converged;
    row.tau0 = rep.alloc.tau0;
    row.max_residual = rep.rate.max_residual();
    out.rows[static_cast<std::size_t>(cell.value_idx) * ns + cell.seed_idx] = row;
  });

  out.summary = summarize(out.rows, config.sweep_values);
  return out;
}

RunOutput run_tau0_curve(const ExperimentConfig& config,
                         std::uint64_t seed_offset, int jobs) {
  ExperimentConfig c = config;
  c.sweep_axis = "tau0-curve";
  c.sweep_values.clear();
  for (int k = 1;; ++k) {
    const double tau = k * c.solve.tau0_step_s;
    if (tau >= c.base.period_s - 1e-12) break;
    c.sweep_values.push_back(tau);
  }
  return run_experiment(c, seed_offset, jobs);
}

std::vector<OracleRow> run_oracle(const ExperimentConfig& config,
                                  std::uint64_t seed_offset, int jobs) {
  config.validate();
  if (config.base.num_ues > 2 || config.base.num_elements > 2)
    throw std::runtime_error(
        "config field 'system': oracle runs need I <= 2 and M <= 2");
  std::vector<OracleRow> rows(config.seed_count);
  parallel_cells(1, config.seed_count, jobs, [&](Cell cell) {
    const std::uint64_t seed =
        config.seed_base + seed_offset + static_cast<std::uint64_t>(cell.seed_idx);
    const ChannelSet channels = make_channels(config, config.base, seed);
    SolveOptions opts = config.solve;
    opts.jobs = 1;
    opts.init_seed = rng::derive_key(seed, 9001);
    const SolveReport rep =
        dispatch_full(config.base, channels, config.protocol, opts);
    BruteForceGrids grids;
    grids.tau0_step_s = config.solve.tau0_step_s;
    const BruteForceResult oracle =
        brute_force_small(config.base, channels, config.protocol, grids);
    OracleRow row;
    row.seed = seed;
    row.solver_bits = rep.total_bits;
    row.oracle_bits = oracle.total_bits;
    row.rel_gap = (rep.total_bits - oracle.total_bits) /
                  std::max(oracle.total_bits, 1e-300);
    rows[cell.seed_idx] = row;
  });
  return rows;
}

void write_outputs(const RunOutput& out, const std::string& path) {
  {
    std::ofstream f(path + ".csv");
    if (!f) throw std::runtime_error("cannot write " + path + ".csv");
    f << "protocol,sweep_axis,sweep_value,seed,total_bits,iterations,"
         "converged,tau0,max_residual\n";
    for (const RunRow& r : out.rows)
      f << r.protocol << ',' << r.sweep_axis << ',' << fmt(r.sweep_value) << ','
        << r.seed << ',' << fmt(r.total_bits) << ',' << r.iterations << ','
        << (r.converged ? 1 : 0) << ',' << fmt(r.tau0) << ','
        << fmt(r.max_residual) << '\n';
  }
  {
    std::ofstream f(path + "_summary.csv");
    if (!f) throw std::runtime_error("cannot write " + path + "_summary.csv");
    f << "sweep_value,mean_bits,std_bits,count\n";
    for (const SummaryRow& s : out.summary)
      f << fmt(s.sweep_value) << ',' << fmt(s.mean_bits) << ','
        << fmt(s.std_bits) << ',' << s.count << '\n';
  }
}

void write_oracle_outputs(const std::vector<OracleRow>& rows,
                          const std::string& path) {
  std::ofstream f(path + "_oracle.csv");
  if (!f) throw std::runtime_error("cannot write " + path + "_oracle.csv");
  f << "seed,solver_bits,oracle_bits,rel_gap\n";
  for (const OracleRow& r : rows)
    f << r.seed << ',' << fmt(r.solver_bits) << ',' << fmt(r.oracle_bits) << ','
      << fmt(r.rel_gap) << '\n';
}

}  // namespace starmec
