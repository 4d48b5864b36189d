#pragma once

// Alternating optimization of W and v: feasibility-based start, inner
// surrogate loops for each block, acceptance-gated monotone progress.

#include <string>
#include <vector>

#include "arisac/feasinit.hpp"
#include "arisac/risbf.hpp"
#include "arisac/txbf.hpp"

namespace arisac {

struct Limits {
  int t_max = 20;
  int t1_max = 10;
  int t2_max = 10;
  double inner_rel_tol = 1e-5;
  double outer_tol_db = 0.01;  // stop when an outer pass gains less than this
};

struct DriverOptions {
  Limits limits;
  bool qos = true;           // false: sensing only
  bool use_tightened = true; // start from the xi2 covariance problem
  int samples = 200;         // Gaussian randomization candidates
  conic::SolverOptions solver;
};

struct OuterRecord {
  int t = 0;
  double radar_sinr = 0.0;  // linear
  std::vector<double> user_sinr;
  double bs_power_w = 0.0;
  double ris_power_w = 0.0;
  int inner_iters_w = 0;
  int inner_iters_v = 0;
  double wall_ms = 0.0;
};

enum class Termination { Converged, IterationLimit, InfeasibleInit, SolverFailure };
std::string to_string(Termination t);

struct RunTrace {
  std::vector<OuterRecord> records;  // records[0] is the initial point
  BeamformerState state;
  Termination termination = Termination::IterationLimit;
  std::string message;  // diagnostics for failures, warnings otherwise
  double max_kkt = 0.0; // largest solver KKT residual seen
  int solves = 0;
  bool ok() const {
    return termination == Termination::Converged || termination == Termination::IterationLimit;
  }
  int outer_iterations() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
};

/// Random phases; magnitudes sqrt(a_RIS) scaled down so that an isotropic
/// full-power W keeps the RIS at half its budget.
CVector initial_ris(const Scenario& scen, const ChannelSet& chan, Rng& rng);

RunTrace run_algorithm1(const Scenario& scen, const ChannelSet& chan, Rng& rng,
                        const DriverOptions& opt = {});

struct ComplexityEstimate {
  double n1 = 0.0, m1 = 0.0, n2 = 0.0, m2 = 0.0;
  int soc_constraints = 0;
  double o_f = 0.0;  // per W-subproblem
  double o_e = 0.0;  // per RIS subproblem
  double total = 0.0;
};
ComplexityEstimate complexity_estimate(int m, int k, int n, const Limits& limits = {});

}  // namespace arisac
