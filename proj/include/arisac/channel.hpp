#pragma once

// Scenario geometry, path-loss constants and random channel draws.

#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "arisac/matkernel.hpp"

namespace arisac {

using Rng = std::mt19937_64;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

struct Scenario {
  int m_antennas = 4;
  int n_ris = 12;
  int k_users = 2;

  Point bs_pos{0.0, 0.0};
  Point ris_pos{0.0, 50.0};
  Point target_pos{0.0, 95.0};
  std::vector<Point> ue_pos{{10.0, 5.0}, {10.0, 50.0}};

  double p_bs_w = 1.0;
  double p_ris_w = 0.01;
  double a_ris_db = 40.0;  // +infinity: no amplification-gain cap
  double xi_db = 10.0;
  double xi2_db = 30.0;
  double eta = 0.1;

  double carrier_hz = 2.7e9;
  double bandwidth_hz = 10e6;
  double noise_density_dbm_hz = -174.0;
  double pl0_db = 30.0;
  double alpha = 2.2;
  double rician_k = 10.0;
  double rcs_m2 = 100.0;
  double p_sw_dbm = -5.0;
  double p_dc_dbm = -10.0;
  double element_spacing = 0.5;  // in wavelengths, BS and RIS alike

  // Optional overrides of the three noise powers (watts). When unset all
  // three follow noise_density_dbm_hz and bandwidth_hz.
  std::optional<double> sigma_ris2_w;
  std::optional<double> sigma_r2_w;
  std::optional<double> sigma_z2_w;
  // When false the active-RIS transmit-power constraint is not imposed
  // (passive surfaces).
  bool ris_power_constraint = true;

  // Spatial correlation at BS (M x M) and RIS (N x N); identity when unset.
  std::optional<RMatrix> corr_bs;
  std::optional<RMatrix> corr_ris;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  double wavelength_m() const;
  double a_ris_linear() const;  // +infinity when uncapped
  double xi_linear() const { return db_to_linear(xi_db); }
  double xi2_linear() const { return db_to_linear(xi2_db); }
  double thermal_noise_w() const;
  double sigma_ris2() const { return sigma_ris2_w.value_or(thermal_noise_w()); }
  double sigma_r2() const { return sigma_r2_w.value_or(thermal_noise_w()); }
  double sigma_z2() const { return sigma_z2_w.value_or(thermal_noise_w()); }
  double p_sw_w() const { return dbm_to_watts(p_sw_dbm); }
  double p_dc_w() const { return dbm_to_watts(p_dc_dbm); }
};

struct ChannelSet {
  CMatrix g;                // N x M, BS -> RIS
  std::vector<CVector> h1;  // N, RIS -> UE k
  std::vector<CVector> h2;  // M, BS -> UE k
  CMatrix a;                // N x N target response
  double beta_r = 0.0;
  double theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;
};

/// Path loss in dB (negative), -PL0 - 10 alpha log10(d). Throws DomainError for d < 1.
double pathloss_db(double d, double alpha, double pl0_db);
/// Amplitude 10^(pathloss_db / 20).
double pathloss_amp(double d, double alpha, double pl0_db);

/// Uniform linear array response, entry m = exp(-j 2 pi spacing m sin(theta)).
CVector steering(Index n, double spacing_over_lambda, double theta);

/// Monostatic radar amplitude sqrt(lambda^2 S / ((4 pi)^3 R^4)).
double radar_pathloss(double lambda_m, double rcs_m2, double r_m);

CMatrix target_response(const Scenario& scen, double beta_r, double theta3);

double noise_power(double density_dbm_hz, double bandwidth_hz);

/// Angle of the segment from `from` to `to`, measured from the +y axis.
double segment_angle(const Point& from, const Point& to);

struct GeometryAngles {
  double theta1, theta2, theta3;
};
GeometryAngles geometry_angles(const Scenario& scen);

/// Circularly-symmetric complex Gaussian sample with unit variance.
cplx crandn(Rng& rng);
CMatrix crandn(Index rows, Index cols, Rng& rng);

/// n i.i.d. CN(0, amp^2) entries.
CVector rayleigh_vector(Index n, double amp, Rng& rng);

CMatrix gen_bs_ris(const Scenario& scen, Rng& rng);
std::pair<std::vector<CVector>, std::vector<CVector>> gen_user_channels(const Scenario& scen,
                                                                        Rng& rng);
/// Full draw: G, h1, h2 and the deterministic target response.
ChannelSet draw_channels(const Scenario& scen, Rng& rng);

}  // namespace arisac
