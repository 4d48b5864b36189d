// Command-line front end: single runs, sweeps, beampatterns and the
// closed-form feasibility check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "arisac/config.hpp"
#include "arisac/experiment.hpp"
#include "arisac/feasinit.hpp"

using namespace arisac;

namespace {

ExperimentConfig config_from(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
}

std::string db(double x) { return format_double(linear_to_db(x)); }

int cmd_run(const std::string& cfg_path, std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig cfg = config_from(cfg_path);
  if (seed) cfg.seeds = {*seed};
  std::optional<SweepValue> value;
  if (!cfg.sweep.parameter.empty()) value = cfg.sweep.values.front();
  const PointResult pr = run_point(cfg, value, cfg.seeds.front());

  std::ostringstream trace;
  trace << "t,radar_sinr_db,min_user_sinr_db,bs_power_w,ris_power_w,inner_iters_w,inner_iters_v,"
           "wall_ms\n";
  for (const auto& r : pr.trace.records) {
    double umin = std::numeric_limits<double>::quiet_NaN();
    for (double u : r.user_sinr) umin = std::isnan(umin) ? u : std::min(umin, u);
    trace << r.t << ',' << db(r.radar_sinr) << ',' << (std::isnan(umin) ? "nan" : db(umin)) << ','
          << format_double(r.bs_power_w) << ',' << format_double(r.ris_power_w) << ','
          << r.inner_iters_w << ',' << r.inner_iters_v << ',' << format_double(r.wall_ms) << '\n';
  }
  write_or_print(out, trace.str());
  std::cerr << results_csv({pr.row});
  if (!pr.message.empty()) std::cerr << "note: " << pr.message << '\n';
  return pr.ok() ? 0 : 1;
}

int cmd_sweep(const std::string& cfg_path, const std::vector<std::uint64_t>& seeds,
              const std::string& out) {
  ExperimentConfig cfg = config_from(cfg_path);
  if (!seeds.empty()) cfg.seeds = seeds;
  const ExperimentResult res = run_experiment(cfg);
  const std::string path = out.empty() ? cfg.output : out;
  write_or_print(path, results_csv(res.rows()));
  std::cerr << "sweep_value,mode,points,ok,mean_db,median_db,p10_db,p90_db\n";
  for (const auto& a : res.aggregates()) {
    std::cerr << a.sweep_value << ',' << a.mode << ',' << a.points << ',' << a.ok << ','
              << format_double(a.mean_db) << ',' << format_double(a.median_db) << ','
              << format_double(a.p10_db) << ',' << format_double(a.p90_db) << '\n';
  }
  for (const auto& p : res.points) {
    if (!p.ok()) {
      std::cerr << "failed: value=" << p.row.sweep_value << " seed=" << p.row.seed << " ("
                << p.row.status << ") " << p.message << '\n';
    }
  }
  return res.all_ok() ? 0 : 1;
}

int cmd_beampattern(const std::string& cfg_path, std::optional<std::uint64_t> seed,
                    const std::string& out, double grid_deg) {
  ExperimentConfig cfg = config_from(cfg_path);
  if (seed) cfg.seeds = {*seed};
  std::optional<SweepValue> value;
  if (!cfg.sweep.parameter.empty()) value = cfg.sweep.values.front();
  const PointResult pr = run_point(cfg, value, cfg.seeds.front());
  if (pr.trace.records.empty()) {
    std::cerr << "run failed (" << pr.row.status << "): " << pr.message << '\n';
    return 1;
  }
  const auto rows = beampattern_table(pr.trace.state, pr.chan, pr.scen, grid_deg);
  std::ostringstream s;
  s << "theta_deg,power,power_db_norm\n";
  for (const auto& r : rows) {
    s << format_double(r.theta_deg) << ',' << format_double(r.power) << ','
      << format_double(r.power_db_norm) << '\n';
  }
  write_or_print(out, s.str());
  std::cerr << "target angle " << format_double(pr.chan.theta3 * 180.0 / kPi) << " deg\n";
  return pr.ok() ? 0 : 1;
}

int cmd_feascheck(const std::string& cfg_path, const std::vector<std::uint64_t>& seeds,
                  const std::string& out) {
  ExperimentConfig cfg = config_from(cfg_path);
  if (!seeds.empty()) cfg.seeds = seeds;
  std::ostringstream s;
  s << "seed,rho,rank_ok,qos_power_ok,rho_range_ok,ris_power_ok,bs_margin,ris_margin,certified,"
       "covariance_feasible\n";
  bool all = true;
  for (auto seed : cfg.seeds) {
    try {
      Rng rng(seed);
      const Scenario scen = mode_scenario(cfg.scenario, cfg.mode, cfg.budget_w);
      const ChannelSet chan = mode_channels(draw_channels(cfg.scenario, rng), cfg.mode);
      const Lemma2Report rep = find_lemma2_rho(chan, scen);
      bool feasible = true;
      try {
        solve_feasibility(chan, scen, CVector::Constant(scen.n_ris, cplx(rep.rho, 0.0)),
                          scen.xi_db);
      } catch (const FeasibilityError&) {
        feasible = false;
      }
      s << seed << ',' << format_double(rep.rho) << ',' << rep.rank_ok << ',' << rep.qos_power_ok
        << ',' << rep.rho_range_ok << ',' << rep.ris_power_ok << ','
        << format_double(rep.bs_margin) << ',' << format_double(rep.ris_margin) << ','
        << rep.feasible() << ',' << feasible << '\n';
      all = all && rep.feasible();
    } catch (const std::exception& e) {
      std::cerr << "seed " << seed << ": " << e.what() << '\n';
      all = false;
    }
  }
  write_or_print(out, s.str());
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-RIS ISAC beamforming experiments"};
  app.require_subcommand(1);

  std::string cfg_path, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  double grid_deg = 1.0;

  auto* run = app.add_subcommand("run", "one optimization run; writes the per-iteration trace");
  run->add_option("--config", cfg_path, "JSON config (defaults if omitted)");
  run->add_option("--seed", seed, "channel seed (default: first config seed)");
  run->add_option("--out", out, "trace CSV path ('-' or empty: stdout)");

  auto* sweep = app.add_subcommand("sweep", "all (sweep value, seed) points; writes results CSV");
  sweep->add_option("--config", cfg_path, "JSON config (defaults if omitted)");
  sweep->add_option("--seeds", seeds, "seed list overriding the config");
  sweep->add_option("--out", out, "results CSV path (default: config output, else stdout)");

  auto* bp = app.add_subcommand("beampattern", "optimize one point and export its beampattern");
  bp->add_option("--config", cfg_path, "JSON config (defaults if omitted)");
  bp->add_option("--seed", seed, "channel seed");
  bp->add_option("--out", out, "beampattern CSV path");
  bp->add_option("--grid-deg", grid_deg, "angle step in degrees")->check(CLI::PositiveNumber);

  auto* fc = app.add_subcommand("feascheck", "closed-form sufficient feasibility check per seed");
  fc->add_option("--config", cfg_path, "JSON config (defaults if omitted)");
  fc->add_option("--seeds", seeds, "seed list overriding the config");
  fc->add_option("--out", out, "CSV path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(cfg_path, seed, out);
    if (*sweep) return cmd_sweep(cfg_path, seeds, out);
    if (*bp) return cmd_beampattern(cfg_path, seed, out, grid_deg);
    if (*fc) return cmd_feascheck(cfg_path, seeds, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
