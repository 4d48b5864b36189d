#pragma once

// Experiment configuration (JSON) and results persistence (CSV).

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "arisac/channel.hpp"
#include "arisac/driver.hpp"

namespace arisac {

using SweepValue = std::variant<double, std::string>;
std::string to_string(const SweepValue& v);

struct SweepSpec {
  std::string parameter;  // empty, n_ris, p_ris_w, ris_x_m, a_ris_db or mode
  std::vector<SweepValue> values;
  bool operator==(const SweepSpec&) const = default;
};

inline const std::vector<std::string> kModes = {"dfrc", "sensing_only", "sens_ue1", "sens_ue2",
                                                "passive"};

struct ExperimentConfig {
  Scenario scenario;
  // Total power budget Q. When set, P_BS is derived from it:
  // active Q = P_BS + P_RIS + N (P_SW + P_DC), passive Q = P_BS + N P_SW.
  std::optional<double> budget_w;
  SweepSpec sweep;
  std::vector<std::uint64_t> seeds;
  std::string mode = "dfrc";
  Limits limits;
  int samples = 200;
  bool tightened_init = true;
  int workers = 1;
  std::string output;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

bool operator==(const Scenario& a, const Scenario& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Built-in defaults: the reference scenario, seeds {1}, mode dfrc, no sweep.
ExperimentConfig default_config();

/// Parses JSON text. Absent fields keep their defaults except "seeds", which
/// is required; unknown fields and wrong types are errors.
ExperimentConfig parse_config(const std::string& text);
std::string dump_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

struct ResultRow {
  std::string sweep_value;
  std::uint64_t seed = 0;
  std::string mode;
  double radar_sinr_db = 0.0;
  double min_user_sinr_db = 0.0;  // NaN without users
  double bs_power_w = 0.0;
  double ris_power_w = 0.0;
  int outer_iters = 0;
  double wall_ms = 0.0;
  std::string status;  // "ok" or a termination reason / error class
};

inline const std::vector<std::string> kCsvColumns = {
    "sweep_value", "seed",        "mode",        "radar_sinr_db", "min_user_sinr_db",
    "bs_power_w",  "ris_power_w", "outer_iters", "wall_ms",       "status"};

std::string results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);
void persist_results(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> load_results(const std::string& path);

/// Point x_m metres from the BS along the BS -> target line (the ris_x_m sweep).
Point ris_position_at(const Scenario& scen, double x_m);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace arisac
