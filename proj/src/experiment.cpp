#include "arisac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace arisac {

double active_budget(const Scenario& scen) {
  return scen.p_bs_w + scen.p_ris_w + scen.n_ris * (scen.p_sw_w() + scen.p_dc_w());
}

double passive_budget(const Scenario& scen) { return scen.p_bs_w + scen.n_ris * scen.p_sw_w(); }

double bs_power_from_budget(double q, const Scenario& scen, bool passive) {
  const double overhead = passive ? scen.n_ris * scen.p_sw_w()
                                  : scen.p_ris_w + scen.n_ris * (scen.p_sw_w() + scen.p_dc_w());
  const double p = q - overhead;
  if (!(p > 0.0)) {
    throw ConfigError("budget_w: " + format_double(q) + " W leaves no BS power after " +
                      format_double(overhead) + " W of RIS overhead");
  }
  return p;
}

Scenario apply_sweep_value(const Scenario& base, const std::string& parameter,
                           const SweepValue& value) {
  Scenario s = base;
  if (parameter.empty() || parameter == "mode") return s;
  const double x = std::get<double>(value);
  if (parameter == "n_ris") {
    s.n_ris = static_cast<int>(x);
  } else if (parameter == "p_ris_w") {
    s.p_ris_w = x;
  } else if (parameter == "a_ris_db") {
    s.a_ris_db = x;
  } else if (parameter == "ris_x_m") {
    const Point to = ris_position_at(base, x);
    if (s.ue_pos.size() >= 2) {
      s.ue_pos[1].x += to.x - base.ris_pos.x;
      s.ue_pos[1].y += to.y - base.ris_pos.y;
    }
    s.ris_pos = to;
  } else {
    throw ConfigError("sweep.parameter: unknown sweep parameter '" + parameter + "'");
  }
  return s;
}

namespace {

std::vector<int> kept_users(const std::string& mode, int k_users) {
  if (mode == "sensing_only") return {};
  if (mode == "sens_ue1" || mode == "sens_ue2") {
    const int k = mode == "sens_ue1" ? 0 : 1;
    if (k >= k_users) throw ConfigError("mode: " + mode + " needs at least " + std::to_string(k + 1) + " users");
    return {k};
  }
  std::vector<int> all(static_cast<std::size_t>(k_users));
  for (int k = 0; k < k_users; ++k) all[static_cast<std::size_t>(k)] = k;
  return all;
}

}  // namespace

Scenario mode_scenario(const Scenario& scen, const std::string& mode, std::optional<double> budget) {
  Scenario s = scen;
  const bool passive = mode == "passive";
  if (passive) {
    s.sigma_ris2_w = 0.0;
    s.ris_power_constraint = false;
    s.a_ris_db = 0.0;
  }
  const std::vector<int> keep = kept_users(mode, scen.k_users);
  s.ue_pos.clear();
  for (int k : keep) s.ue_pos.push_back(scen.ue_pos.at(static_cast<std::size_t>(k)));
  s.k_users = static_cast<int>(keep.size());
  if (budget) s.p_bs_w = bs_power_from_budget(*budget, s, passive);
  return s;
}

ChannelSet mode_channels(const ChannelSet& chan, const std::string& mode) {
  ChannelSet c = chan;
  const std::vector<int> keep = kept_users(mode, static_cast<int>(chan.h1.size()));
  c.h1.clear();
  c.h2.clear();
  for (int k : keep) {
    c.h1.push_back(chan.h1[static_cast<std::size_t>(k)]);
    c.h2.push_back(chan.h2[static_cast<std::size_t>(k)]);
  }
  return c;
}

PointResult run_point(const ExperimentConfig& cfg, const std::optional<SweepValue>& value,
                      std::uint64_t seed) {
  PointResult pr;
  std::string mode = cfg.mode;
  if (value && cfg.sweep.parameter == "mode") mode = std::get<std::string>(*value);
  pr.row.sweep_value = value ? to_string(*value) : "";
  pr.row.seed = seed;
  pr.row.mode = mode;
  pr.row.radar_sinr_db = std::numeric_limits<double>::quiet_NaN();
  pr.row.min_user_sinr_db = std::numeric_limits<double>::quiet_NaN();
  pr.row.bs_power_w = std::numeric_limits<double>::quiet_NaN();
  pr.row.ris_power_w = std::numeric_limits<double>::quiet_NaN();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Scenario full =
        value ? apply_sweep_value(cfg.scenario, cfg.sweep.parameter, *value) : cfg.scenario;
    full.validate();
    Rng rng(seed);
    const ChannelSet chan_full = draw_channels(full, rng);
    pr.scen = mode_scenario(full, mode, cfg.budget_w);
    pr.scen.validate();
    pr.chan = mode_channels(chan_full, mode);

    DriverOptions opt;
    opt.limits = cfg.limits;
    opt.qos = pr.scen.k_users > 0;
    opt.use_tightened = cfg.tightened_init;
    opt.samples = cfg.samples;
    pr.trace = run_algorithm1(pr.scen, pr.chan, rng, opt);
    pr.message = pr.trace.message;

    const auto& st = pr.trace.state;
    pr.row.outer_iters = pr.trace.outer_iterations();
    if (!pr.trace.records.empty()) {
      const MetricReport rep = evaluate(st, pr.chan, pr.scen);
      pr.row.radar_sinr_db = linear_to_db(rep.radar_sinr);
      double umin = std::numeric_limits<double>::infinity();
      for (double u : rep.user_sinr) umin = std::min(umin, u);
      if (!rep.user_sinr.empty()) pr.row.min_user_sinr_db = linear_to_db(umin);
      pr.row.bs_power_w = rep.bs_power;
      pr.row.ris_power_w = rep.ris_power;
      pr.row.status = pr.trace.ok() ? (rep.feasible ? "ok" : "infeasible-final")
                                    : to_string(pr.trace.termination);
    } else {
      pr.row.status = to_string(pr.trace.termination);
    }
  } catch (const ConfigError& e) {
    pr.row.status = "config-error";
    pr.message = e.what();
  } catch (const std::exception& e) {
    pr.row.status = "error";
    pr.message = e.what();
  }
  pr.row.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return pr;
}

std::vector<ResultRow> ExperimentResult::rows() const {
  std::vector<ResultRow> out;
  for (const auto& p : points) out.push_back(p.row);
  return out;
}

bool ExperimentResult::all_ok() const {
  return std::all_of(points.begin(), points.end(), [](const PointResult& p) { return p.ok(); });
}

namespace {

double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

std::vector<Aggregate> ExperimentResult::aggregates() const {
  std::vector<Aggregate> out;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    Aggregate a;
    a.sweep_value = points[i].row.sweep_value;
    a.mode = points[i].row.mode;
    std::vector<double> vals;
    while (j < points.size() && points[j].row.sweep_value == a.sweep_value &&
           points[j].row.mode == a.mode) {
      ++a.points;
      if (points[j].ok()) vals.push_back(points[j].row.radar_sinr_db);
      ++j;
    }
    a.ok = static_cast<int>(vals.size());
    if (vals.empty()) {
      a.mean_db = a.median_db = a.p10_db = a.p90_db = std::numeric_limits<double>::quiet_NaN();
    } else {
      double s = 0.0;
      for (double v : vals) s += v;
      a.mean_db = s / static_cast<double>(vals.size());
      a.median_db = quantile(vals, 0.5);
      a.p10_db = quantile(vals, 0.1);
      a.p90_db = quantile(vals, 0.9);
    }
    out.push_back(a);
    i = j;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::optional<SweepValue>, std::uint64_t>> jobs;
  if (cfg.sweep.parameter.empty()) {
    for (auto s : cfg.seeds) jobs.emplace_back(std::nullopt, s);
  } else {
    for (const auto& v : cfg.sweep.values) {
      for (auto s : cfg.seeds) jobs.emplace_back(v, s);
    }
  }
  ExperimentResult res;
  res.points.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      res.points[i] = run_point(cfg, jobs[i].first, jobs[i].second);
    }
  };
  const auto nthreads =
      static_cast<std::size_t>(std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size()))));
  if (nthreads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return res;
}

ExperimentResult passive_baseline(ExperimentConfig cfg) {
  cfg.mode = "passive";
  if (cfg.sweep.parameter == "mode") cfg.sweep = {};
  return run_experiment(cfg);
}

SimplifiedResult simplified_sensing_solve(const Scenario& scen_in, const ChannelSet& chan_in,
                                          Rng& rng, const DriverOptions& opt_in) {
  Scenario scen = mode_scenario(scen_in, "sensing_only");
  scen.sigma_r2_w = 1.0;
  scen.sigma_ris2_w = 0.0;
  scen.eta = 0.0;
  scen.a_ris_db = std::numeric_limits<double>::infinity();
  const ChannelSet chan = mode_channels(chan_in, "sensing_only");
  DriverOptions opt = opt_in;
  opt.qos = false;

  SimplifiedResult out;
  out.trace = run_algorithm1(scen, chan, rng, opt);
  out.state = out.trace.state;
  const double p0 = ris_tx_power(out.state, chan, scen);
  out.raw_ris_power_slack = (scen.p_ris_w - p0) / scen.p_ris_w;

  // radial step: with no RIS noise the RIS power is a4 c^4 + a2 c^2 in the
  // common scale c of v, and the echo power grows as c^4
  const CVector& v = out.state.v;
  const CMatrix apa = chan.a.cwiseProduct(v.conjugate() * v.transpose());
  const double a4 = (apa * chan.g * out.state.w).squaredNorm();
  const double a2 = (v.asDiagonal() * chan.g * out.state.w).squaredNorm();
  const double budget = scen.p_ris_w * (1.0 - 1e-9);
  if (out.trace.ok() && a4 + a2 > 0.0 && a4 + a2 < budget) {
    const double y = a4 > 0.0 ? 2.0 * budget / (a2 + std::sqrt(a2 * a2 + 4.0 * a4 * budget))
                              : budget / a2;
    out.state.v *= std::sqrt(y);
  }
  const MetricReport rep = evaluate(out.state, chan, scen);
  out.objective = rep.radar_sinr;
  out.ris_power_slack = rep.ris_power_slack;
  out.bs_power_slack = rep.bs_power_slack;
  out.ris_power_tight = out.ris_power_slack <= 1e-4;
  return out;
}

std::vector<BeampatternRow> beampattern_table(const BeamformerState& st, const ChannelSet& chan,
                                              const Scenario& scen, double grid_deg) {
  if (!(grid_deg > 0.0)) throw DomainError("beampattern: grid step must be positive");
  const int steps = static_cast<int>(std::floor(180.0 / grid_deg + 1e-9));
  std::vector<double> grid;
  for (int i = 0; i <= steps; ++i) grid.push_back((-90.0 + i * grid_deg) * kPi / 180.0);
  const RVector p = beampattern(st, chan, scen, grid);
  const double peak = p.maxCoeff();
  std::vector<BeampatternRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = p(static_cast<Index>(i));
    rows.push_back({-90.0 + static_cast<double>(i) * grid_deg, v,
                    peak > 0.0 ? 10.0 * std::log10(v / peak)
                               : -std::numeric_limits<double>::infinity()});
  }
  return rows;
}

void export_beampattern(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                        const std::string& path, double grid_deg) {
  const auto rows = beampattern_table(st, chan, scen, grid_deg);
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write beampattern");
  out << "theta_deg,power,power_db_norm\n";
  for (const auto& r : rows) {
    out << format_double(r.theta_deg) << ',' << format_double(r.power) << ','
        << format_double(r.power_db_norm) << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace arisac
