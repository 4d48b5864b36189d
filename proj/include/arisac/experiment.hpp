#pragma once

// Sweeps over scenarios and seeds, operating modes, power-budget accounting
// and data exports.

#include <optional>
#include <string>
#include <vector>

#include "arisac/config.hpp"
#include "arisac/driver.hpp"

namespace arisac {

/// Q_act = P_BS + P_RIS + N (P_SW + P_DC).
double active_budget(const Scenario& scen);
/// Q_pas = P_BS + N P_SW.
double passive_budget(const Scenario& scen);
/// BS power left by budget q; throws ConfigError if nothing is left.
double bs_power_from_budget(double q, const Scenario& scen, bool passive);

/// Scenario of one sweep point (mode unchanged). Moving the RIS moves UE 2 with it.
Scenario apply_sweep_value(const Scenario& base, const std::string& parameter,
                           const SweepValue& value);

/// Mode-specific scenario: users removed for sensing_only, one user kept for
/// sens_ue1 / sens_ue2, passive surface (no RIS noise, no RIS power
/// constraint, unit gain cap) for passive. `budget` (if given) sets P_BS.
Scenario mode_scenario(const Scenario& scen, const std::string& mode,
                       std::optional<double> budget = std::nullopt);
/// Channels restricted to the users that `mode` keeps.
ChannelSet mode_channels(const ChannelSet& chan, const std::string& mode);

struct PointResult {
  ResultRow row;
  Scenario scen;  // after sweep value and mode
  ChannelSet chan;
  RunTrace trace;
  std::string message;  // error text for failed points
  bool ok() const { return row.status == "ok"; }
};

/// One (sweep value, seed) point: channels from Rng(seed) on the full-user
/// scenario, then the alternating optimization on the mode's scenario.
PointResult run_point(const ExperimentConfig& cfg, const std::optional<SweepValue>& value,
                      std::uint64_t seed);

struct Aggregate {
  std::string sweep_value;
  std::string mode;
  int points = 0;
  int ok = 0;
  double mean_db = 0.0;  // over successful seeds, of radar SINR in dB
  double median_db = 0.0;
  double p10_db = 0.0;
  double p90_db = 0.0;
};

struct ExperimentResult {
  std::vector<PointResult> points;  // (sweep value, seed) order
  std::vector<ResultRow> rows() const;
  std::vector<Aggregate> aggregates() const;
  bool all_ok() const;
};

/// Runs every (sweep value, seed) pair; per-point failures are recorded and
/// the sweep continues. Points run on cfg.workers threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// run_experiment with mode forced to passive.
ExperimentResult passive_baseline(ExperimentConfig cfg);

struct SimplifiedResult {
  BeamformerState state;
  double objective = 0.0;        // ||G^H Phi^H A Phi G W||_F^2
  double ris_power_slack = 0.0;  // (P_RIS - P)/P_RIS at the returned point
  double raw_ris_power_slack = 0.0;  // before the final radial step
  double bs_power_slack = 0.0;
  bool ris_power_tight = false;  // slack <= 1e-4
  RunTrace trace;
};

/// Sensing-only echo-power maximization: unit radar noise, no RIS noise, no
/// self-interference, no users, no gain cap. Since the objective grows with
/// the common scale of v, the AO result is finished by a radial step onto
/// the RIS power budget.
SimplifiedResult simplified_sensing_solve(const Scenario& scen, const ChannelSet& chan, Rng& rng,
                                          const DriverOptions& opt = {});

struct BeampatternRow {
  double theta_deg = 0.0;
  double power = 0.0;
  double power_db_norm = 0.0;  // 10 log10(power / peak)
};
std::vector<BeampatternRow> beampattern_table(const BeamformerState& st, const ChannelSet& chan,
                                              const Scenario& scen, double grid_deg = 1.0);
/// Writes theta_deg,power,power_db_norm rows over [-90, 90] degrees.
void export_beampattern(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                        const std::string& path, double grid_deg = 1.0);

}  // namespace arisac
