#pragma once

// Closed-form performance metrics of the active-RIS ISAC link plus Monte-Carlo
// simulations of the received signals used to cross-check them.

#include <vector>

#include "arisac/channel.hpp"

namespace arisac {

/// W = [W_r W_c] (M x (M+K)) and the RIS coefficients v with Phi = Diag(v).
struct BeamformerState {
  CMatrix w;
  CVector v;
};

struct NoiseLevels {
  double sigma2 = 0.0;    // RIS thermal noise
  double sigma_r2 = 0.0;  // radar receiver
  double sigma_z2 = 0.0;  // users
};
NoiseLevels noise_levels(const Scenario& scen);

/// Phi = Diag(v).
CMatrix phi_matrix(const CVector& v);

CMatrix covariance(const CMatrix& w);

struct EchoMatrices {
  CMatrix b;  // G^H Phi^H A Phi G
  CMatrix c;  // G^H Phi^H A Phi
  CMatrix d;  // equivalent noise covariance
  CMatrix e;  // eta G^H Phi G
  /// Interference-plus-noise covariance D + E R E^H.
  CMatrix j(const CMatrix& r) const { return d + e * r * e.adjoint(); }
};
EchoMatrices echo_matrices(const ChannelSet& chan, const CVector& v, double eta,
                           const NoiseLevels& noise);

double radar_sinr(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen);

/// h_k with h_k^H = h1_k^H Phi G + h2_k^H.
CVector effective_channel(const ChannelSet& chan, const CVector& v, int k);
double user_sinr(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen, int k);
/// sigma^2 h1^H Phi Phi^H h1 + sigma_z^2
double user_noise(const ChannelSet& chan, const CVector& v, const NoiseLevels& noise, int k);

/// Expected transmit power of the active RIS (both reflections).
double ris_tx_power(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen);

RVector beampattern(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                    const std::vector<double>& theta_grid);

/// Largest beampattern value outside the main lobe (the lobe containing the
/// peak, delimited by the nearest local minima), relative to the peak.
double peak_sidelobe_ratio(const RVector& pattern);

struct MetricReport {
  double radar_sinr = 0.0;
  std::vector<double> user_sinr;
  double ris_power = 0.0;
  double bs_power = 0.0;
  // slacks are normalized: positive = satisfied
  double bs_power_slack = 0.0;
  double ris_power_slack = 0.0;
  double gain_slack = 0.0;
  std::vector<double> qos_slack;
  bool feasible = false;
};
/// Evaluates all metrics; feasibility allows `rel_tol` relative violation.
MetricReport evaluate(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                      double rel_tol = 1e-6);

// Monte-Carlo oracles ------------------------------------------------------

double mc_radar_sinr_oracle(const BeamformerState& st, const ChannelSet& chan,
                            const Scenario& scen, long samples, Rng& rng);
double mc_user_sinr_oracle(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                           int k, long samples, Rng& rng);
double mc_ris_power_oracle(const BeamformerState& st, const ChannelSet& chan,
                           const Scenario& scen, long samples, Rng& rng);

}  // namespace arisac
