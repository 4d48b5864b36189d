#include "arisac/channel.hpp"

#include <cmath>
#include <string>

namespace arisac {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("scenario." + field + ": " + what);
}

CMatrix correlation_factor(const std::optional<RMatrix>& corr, Index n, const std::string& name) {
  if (!corr) return CMatrix::Identity(n, n);
  if (corr->rows() != n || corr->cols() != n) {
    throw ConfigError("scenario." + name + ": expected " + std::to_string(n) + "x" +
                      std::to_string(n) + " matrix");
  }
  return cholesky_psd(corr->cast<cplx>().eval());
}

}  // namespace

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void Scenario::validate() const {
  require(m_antennas >= 1, "m_antennas", "must be positive");
  require(n_ris >= 1, "n_ris", "must be positive");
  require(k_users >= 0, "k_users", "must be nonnegative");
  require(static_cast<int>(ue_pos.size()) == k_users, "ue_pos",
          "needs one position per user (" + std::to_string(k_users) + ")");
  require(p_bs_w > 0.0, "p_bs_w", "must be positive");
  require(p_ris_w > 0.0, "p_ris_w", "must be positive");
  // -inf dB is a zero gain cap: the surface is switched off
  require(a_ris_db >= 0.0 || a_ris_db == -std::numeric_limits<double>::infinity(), "a_ris_db",
          "must be >= 0 dB or -inf");
  require(eta >= 0.0 && eta <= 1.0, "eta", "must lie in [0, 1]");
  require(carrier_hz > 0.0, "carrier_hz", "must be positive");
  require(bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
  require(alpha > 0.0, "alpha", "must be positive");
  require(rician_k >= 0.0, "rician_k", "must be nonnegative");
  require(rcs_m2 >= 0.0, "rcs_m2", "must be nonnegative");
  require(element_spacing > 0.0, "element_spacing", "must be positive");
  require(distance(bs_pos, ris_pos) >= 1.0, "ris_pos", "must be at least 1 m from the BS");
  require(distance(ris_pos, target_pos) > 0.0, "target_pos", "must differ from ris_pos");
  for (int k = 0; k < k_users; ++k) {
    require(distance(bs_pos, ue_pos[k]) >= 1.0 && distance(ris_pos, ue_pos[k]) >= 1.0,
            "ue_pos[" + std::to_string(k) + "]", "must be at least 1 m from BS and RIS");
  }
  if (sigma_ris2_w) require(*sigma_ris2_w >= 0.0, "sigma_ris2_w", "must be nonnegative");
  if (sigma_r2_w) require(*sigma_r2_w > 0.0, "sigma_r2_w", "must be positive");
  if (sigma_z2_w) require(*sigma_z2_w > 0.0, "sigma_z2_w", "must be positive");
}

double Scenario::wavelength_m() const { return kSpeedOfLight / carrier_hz; }

double Scenario::a_ris_linear() const {
  if (std::isinf(a_ris_db)) return a_ris_db > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return db_to_linear(a_ris_db);
}

double Scenario::thermal_noise_w() const {
  return noise_power(noise_density_dbm_hz, bandwidth_hz);
}

double pathloss_db(double d, double alpha, double pl0_db) {
  if (!(d >= 1.0)) throw DomainError("pathloss: distance " + std::to_string(d) + " m below 1 m");
  return -pl0_db - 10.0 * alpha * std::log10(d);
}

double pathloss_amp(double d, double alpha, double pl0_db) {
  return std::pow(10.0, pathloss_db(d, alpha, pl0_db) / 20.0);
}

CVector steering(Index n, double spacing_over_lambda, double theta) {
  if (n < 1) throw DimensionError("steering: need at least one element");
  CVector a(n);
  const double phase = -2.0 * kPi * spacing_over_lambda * std::sin(theta);
  for (Index m = 0; m < n; ++m) a(m) = std::polar(1.0, phase * static_cast<double>(m));
  return a;
}

double radar_pathloss(double lambda_m, double rcs_m2, double r_m) {
  if (!(r_m > 0.0)) throw DomainError("radar_pathloss: range must be positive");
  const double four_pi = 4.0 * kPi;
  return std::sqrt(lambda_m * lambda_m * rcs_m2 /
                   (four_pi * four_pi * four_pi * std::pow(r_m, 4)));
}

CMatrix target_response(const Scenario& scen, double beta_r, double theta3) {
  const CVector a3 = steering(scen.n_ris, scen.element_spacing, theta3);
  return beta_r * a3 * a3.adjoint();
}

double noise_power(double density_dbm_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("noise_power: bandwidth must be positive");
  return std::pow(10.0, (density_dbm_hz + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
}

double segment_angle(const Point& from, const Point& to) {
  return std::atan2(to.x - from.x, to.y - from.y);
}

GeometryAngles geometry_angles(const Scenario& scen) {
  return {segment_angle(scen.bs_pos, scen.ris_pos), segment_angle(scen.ris_pos, scen.bs_pos),
          segment_angle(scen.ris_pos, scen.target_pos)};
}

cplx crandn(Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

CMatrix crandn(Index rows, Index cols, Rng& rng) {
  CMatrix x(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) x(i, j) = crandn(rng);
  }
  return x;
}

CVector rayleigh_vector(Index n, double amp, Rng& rng) {
  return amp * crandn(n, 1, rng).col(0);
}

CMatrix gen_bs_ris(const Scenario& scen, Rng& rng) {
  const Index n = scen.n_ris, m = scen.m_antennas;
  const auto ang = geometry_angles(scen);
  const CVector a1 = steering(m, scen.element_spacing, ang.theta1);
  const CVector a2 = steering(n, scen.element_spacing, ang.theta2);
  const CMatrix los = a2 * a1.adjoint();
  const CMatrix lr = correlation_factor(scen.corr_ris, n, "corr_ris");
  const CMatrix lb = correlation_factor(scen.corr_bs, m, "corr_bs");
  // rows correlated by corr_ris, columns by corr_bs
  const CMatrix nlos = lr * crandn(n, m, rng) * lb.adjoint();
  const double kr = scen.rician_k;
  CMatrix g;
  if (std::isinf(kr)) {
    g = los;
  } else {
    g = std::sqrt(kr / (1.0 + kr)) * los + std::sqrt(1.0 / (1.0 + kr)) * nlos;
  }
  return pathloss_amp(distance(scen.bs_pos, scen.ris_pos), scen.alpha, scen.pl0_db) * g;
}

std::pair<std::vector<CVector>, std::vector<CVector>> gen_user_channels(const Scenario& scen,
                                                                        Rng& rng) {
  std::vector<CVector> h1, h2;
  for (int k = 0; k < scen.k_users; ++k) {
    const double a1 = pathloss_amp(distance(scen.ris_pos, scen.ue_pos[k]), scen.alpha, scen.pl0_db);
    const double a2 = pathloss_amp(distance(scen.bs_pos, scen.ue_pos[k]), scen.alpha, scen.pl0_db);
    h1.push_back(rayleigh_vector(scen.n_ris, a1, rng));
    h2.push_back(rayleigh_vector(scen.m_antennas, a2, rng));
  }
  return {std::move(h1), std::move(h2)};
}

ChannelSet draw_channels(const Scenario& scen, Rng& rng) {
  scen.validate();
  ChannelSet ch;
  const auto ang = geometry_angles(scen);
  ch.theta1 = ang.theta1;
  ch.theta2 = ang.theta2;
  ch.theta3 = ang.theta3;
  ch.g = gen_bs_ris(scen, rng);
  auto users = gen_user_channels(scen, rng);
  ch.h1 = std::move(users.first);
  ch.h2 = std::move(users.second);
  ch.beta_r = radar_pathloss(scen.wavelength_m(), scen.rcs_m2,
                             distance(scen.ris_pos, scen.target_pos));
  ch.a = target_response(scen, ch.beta_r, ch.theta3);
  return ch;
}

}  // namespace arisac
